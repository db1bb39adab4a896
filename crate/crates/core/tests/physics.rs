use faer::c64;
use proptest::prelude::*;

use sunlit::analytic::{coherence_eigenvalue, gamma_bb_closed_form, radiative_tensor};
use sunlit::bath::{Blackbody, DrudeLorentz};
use sunlit::config::parse_str;
use sunlit::dynamics::{apply_map, compute_damping_basis, map_tensor};
use sunlit::model::{build_hamiltonian, diagonalize, AggregateModel, Chromophore};
use sunlit::redfield::{assemble_tensor, build_channels, liouvillian};
use sunlit::scenarios::figures::run_figure;
use sunlit::scenarios::observables::{fit_decay, linear_fit};
use sunlit::scenarios::{build_scenario, builtin};
use sunlit::units::{debye, ev, thermal_frequency, wavenumber};
use sunlit::CMat;

fn phonon(lambda_cm: f64) -> DrudeLorentz {
    DrudeLorentz::new(wavenumber(lambda_cm), wavenumber(100.0), 300.0).unwrap()
}

#[test]
fn phonon_stationary_state_is_gibbs_in_single_exciton_block() {
    let m = builtin::dimer_placeholder().unwrap();
    let basis = diagonalize(&build_hamiltonian(&m)).unwrap();
    let ch = build_channels(&m, &basis, Some(&phonon(35.0)), None).unwrap();
    let l = liouvillian(&basis, &assemble_tensor(&ch, &basis).unwrap()).unwrap();
    let db = compute_damping_basis(&l).unwrap();
    let mut rho0 = CMat::zeros(4, 4);
    rho0[(1, 1)] = c64::new(1.0, 0.0);
    let late = apply_map(&map_tensor(&db, 500.0).unwrap(), &rho0).unwrap();
    let ratio = late[(1, 1)].re / late[(2, 2)].re;
    let gap = basis.energies()[1] - basis.energies()[2];
    let gibbs = (-gap / thermal_frequency(300.0)).exp();
    assert!((ratio / gibbs - 1.0).abs() < 1e-6, "{ratio} vs {gibbs}");
    assert!((late[(1, 1)].re + late[(2, 2)].re - 1.0).abs() < 1e-10);
}

#[test]
fn radiative_coherence_rate_is_half_the_total_relaxation_rate() {
    let m = AggregateModel::uncoupled(vec![builtin::chromophore("DBVc").unwrap()]).unwrap();
    let (_, t) = radiative_tensor(&m, &Blackbody::new(5600.0).unwrap()).unwrap();
    let (e, g) = (0, 1);
    let k = t.get(e, e, e, e) + t.get(g, g, g, g);
    assert!((t.get(e, g, e, g) - 0.5 * k).abs() <= 1e-15 * k);
    assert!((t.get(g, g, e, e) + t.get(e, e, e, e)).abs() <= 1e-15 * k);
}

#[test]
fn radiative_rate_over_gap_vanishes_at_small_gap() {
    let bb = Blackbody::new(5600.0).unwrap();
    let mu = debye(13.0);
    let ratios: Vec<f64> = [1.0, 1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|w| gamma_bb_closed_form(ev(*w), mu, &bb) / ev(*w))
        .collect();
    assert!(ratios.windows(2).all(|p| p[1] < p[0]), "{ratios:?}");
    assert!(ratios[4] < 1e-3 * ratios[0]);
}

#[test]
fn phonon_map_dominates_radiative_map() {
    let b = run_figure(3, &[]).unwrap();
    let peak = |name: &str| {
        let t = b.table(name).unwrap();
        let re = t.column("re_chi_e_ep_e_e").unwrap();
        let im = t.column("im_chi_e_ep_e_e").unwrap();
        re.iter().zip(&im).map(|(r, i)| c64::new(*r, *i).norm()).fold(0.0, f64::max)
    };
    let r = peak("chi_tb_L13") / peak("chi_bb_mu1");
    assert!(r >= 1e3, "χ^tb/χ^bb peak ratio {r:e}");
}

#[test]
fn weak_radiative_driving_grows_populations_linearly() {
    let cfg = parse_str(
        "model = \"dbv_dimer\"\ncouplings = \"placeholder\"\n[time]\nstop = \"60 ps\"\nstep = \"0.05 ps\"\n",
    )
    .unwrap();
    let scn = build_scenario(&cfg).unwrap();
    let t = scn.liouvillian(0.0).unwrap();
    let db = compute_damping_basis(&t).unwrap();
    let slowest = db
        .eigenvalues()
        .iter()
        .map(|l| -l.re)
        .filter(|r| *r > 1e-12)
        .fold(f64::INFINITY, f64::min);
    let horizon = 0.05 / slowest;
    assert!(horizon > 60.0, "relaxation time {}", 1.0 / slowest);
    let traj = scn.run_one(0.0).unwrap();
    for a in [1, 2] {
        let y: Vec<f64> = traj.element(a, a).iter().map(|z| z.re).collect();
        let (_, slope, rms) = linear_fit(&traj.times, &y).unwrap();
        assert!(slope > 0.0);
        let peak = y.iter().copied().fold(0.0, f64::max);
        assert!(rms / peak < 0.01, "state {a}: residual {:.2e}", rms / peak);
    }
}

#[test]
fn radiative_coherence_decay_matches_damping_basis() {
    let cfg = parse_str(
        "model = \"dbv_dimer\"\ncouplings = \"placeholder\"\ndipole_scale = 20\n\
         [time]\nstop = \"40 ps\"\nstep = \"0.005 ps\"\n[initial]\nkind = \"site\"\nindex = 1\n",
    )
    .unwrap();
    let scn = build_scenario(&cfg).unwrap();
    let l = scn.liouvillian(0.0).unwrap();
    let want = coherence_eigenvalue(&compute_damping_basis(&l).unwrap(), 1, 2).re.abs();
    let traj = scn.run_one(0.0).unwrap();
    let modulus: Vec<f64> = traj.element(1, 2).iter().map(|z| z.norm()).collect();
    let got = fit_decay(&traj.times, &modulus).value().unwrap();
    assert!((got / want - 1.0).abs() < 0.05, "fit {got} vs |Re L| {want}");
}

fn random_model(energies: &[f64], dipoles: &[f64], couplings: &[f64]) -> AggregateModel {
    let n = energies.len();
    let ch = (0..n)
        .map(|j| Chromophore::new(format!("s{j}"), ev(energies[j]), debye(dipoles[j])))
        .collect();
    let mut m = AggregateModel::uncoupled(ch).unwrap();
    let mut k = 0;
    for a in 0..n {
        for b in a + 1..n {
            m.set_coupling(a, b, wavenumber(couplings[k])).unwrap();
            k += 1;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transfer_rates_are_nonnegative(
        energies in proptest::collection::vec(1.8f64..2.3, 3),
        dipoles in proptest::collection::vec(-20.0f64..20.0, 3),
        couplings in proptest::collection::vec(-300.0f64..300.0, 3),
        lambda in 0.0f64..200.0,
    ) {
        let m = random_model(&energies, &dipoles, &couplings);
        let basis = diagonalize(&build_hamiltonian(&m)).unwrap();
        let ph = phonon(lambda);
        let bb = Blackbody::new(5600.0).unwrap();
        let ch = build_channels(&m, &basis, Some(&ph), Some(&bb)).unwrap();
        let t = assemble_tensor(&ch, &basis).unwrap();
        let d = basis.dimension();
        let scale = (0..d).map(|a| t.get(a, a, a, a).abs()).fold(0.0, f64::max);
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    prop_assert!(-t.get(a, a, b, b) >= -1e-14 * scale, "R[{a}{a},{b}{b}] = {}", t.get(a, a, b, b));
                }
            }
        }
    }
}

#[test]
fn turn_on_stepping_converges_under_halving() {
    use sunlit::config::TurnOnMode;
    use sunlit::dynamics::{propagate_timedep, StepOptions};
    use sunlit::scenarios::TurnOnSchedule;

    let cfg = parse_str(
        "model = \"dbv_dimer\"\ncouplings = \"placeholder\"\nreorganization = [\"13 cm^-1\"]\n\
         [time]\nstop = \"0.5 ps\"\nstep = \"0.05 ps\"\n[initial]\nkind = \"site\"\nindex = 1\n",
    )
    .unwrap();
    let scn = build_scenario(&cfg).unwrap();
    let tpl = scn.template(wavenumber(13.0)).unwrap();
    let times = scn.times();
    for (alpha, mode) in [(10.0, TurnOnMode::Erf), (100.0, TurnOnMode::Linear)] {
        let sched = TurnOnSchedule::new(&tpl, alpha, mode).unwrap();
        let coarse = propagate_timedep(&scn.rho0, &sched, &times, StepOptions::default()).unwrap();
        let fine = propagate_timedep(&scn.rho0, &sched, &times, StepOptions::default().halved()).unwrap();
        let diff = sunlit::linalg::max_abs_diff(coarse.last().unwrap(), fine.last().unwrap());
        assert!(diff < 1e-6, "α = {alpha}: {diff:e}");
    }
}
