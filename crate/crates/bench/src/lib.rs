//! Fixtures shared by the engine benchmarks.

use sunlit::config::parse_str;
use sunlit::scenarios::{build_scenario, Scenario};

pub const PC645: &str = "model = \"pc645\"\ncouplings = \"placeholder\"\nreorganization = [\"13 cm^-1\"]\n\
                         [time]\nstop = \"2 ps\"\nstep = \"0.002 ps\"\n";

pub const DIMER: &str = "model = \"dbv_dimer\"\ncouplings = \"placeholder\"\nreorganization = [\"13 cm^-1\"]\n\
                         [time]\nstop = \"2 ps\"\nstep = \"0.01 ps\"\n[initial]\nkind = \"site\"\nindex = 1\n";

pub fn scenario(text: &str) -> Scenario {
    build_scenario(&parse_str(text).expect("fixture config")).expect("fixture scenario")
}
