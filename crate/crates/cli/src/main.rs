//! `sunlit`: run Redfield scenarios from a TOML config and write CSV/JSON bundles.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use sunlit::config::{apply_override, read_config};
use sunlit::output::{check_bundle, write_bundle, Bundle, FileStatus, RunManifest, MANIFEST_NAME};
use sunlit::scenarios::figures::{
    map_bundle, rates_bundle, regime_bundle, run_figure, simulate_bundle, turnon_bundle, FIGURE_IDS,
};
use sunlit::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "sunlit", version, about = "Non-secular Redfield dynamics of sunlight-driven molecular aggregates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Scenario configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for the bundle.
    #[arg(long, value_name = "DIR", default_value = "sunlit-out")]
    out: PathBuf,
    /// Config override `key.path=value`; may be repeated.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Verify an existing bundle in --out instead of overwriting it: re-hash the
    /// manifest's files and compare with a fresh in-memory run.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate ρ(t) for every configured Λ.
    Simulate(Common),
    /// Tabulate every χ_{ab,cd}(t) entry (systems up to dimension 4).
    Map(Common),
    /// Radiative rates R^bb and Liouvillian eigenvalues.
    Rates(Common),
    /// Coherent/incoherent classification and the dimer scans.
    Regime(Common),
    /// Dataset bundle of one built-in figure scenario (1–10).
    Figure {
        #[arg(value_name = "ID", conflicts_with = "fig")]
        id: Option<u32>,
        #[arg(long, value_name = "ID")]
        fig: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Propagation with a slow erf turn-on of the radiation coupling.
    Turnon(Common),
}

fn config_document(common: &Common) -> Result<toml::Value> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("this subcommand needs --config <path>".into()))?;
    let mut doc = read_config(path)?;
    for o in &common.overrides {
        apply_override(&mut doc, o)?;
    }
    Ok(doc)
}

fn from_config<'a>(
    name: &str,
    common: &'a Common,
    f: fn(&toml::Value) -> Result<Bundle>,
) -> Result<(String, Bundle, &'a Common)> {
    Ok((name.to_string(), f(&config_document(common)?)?, common))
}

fn build(command: &Command) -> Result<(String, Bundle, &Common)> {
    match command {
        Command::Simulate(c) => from_config("simulate", c, simulate_bundle),
        Command::Map(c) => from_config("map", c, map_bundle),
        Command::Rates(c) => from_config("rates", c, rates_bundle),
        Command::Regime(c) => from_config("regime", c, regime_bundle),
        Command::Turnon(c) => from_config("turnon", c, turnon_bundle),
        Command::Figure { id, fig, common } => {
            let n = id.or(*fig).ok_or_else(|| Error::Config("figure needs an id (`figure 5` or --fig 5)".into()))?;
            if !FIGURE_IDS.contains(&n) {
                return Err(Error::Config(format!(
                    "unknown figure {n}; expected {}–{}",
                    FIGURE_IDS.start(),
                    FIGURE_IDS.end()
                )));
            }
            if common.config.is_some() {
                return Err(Error::Config(
                    "figure runs use built-in configs; adjust them with --override".into(),
                ));
            }
            Ok((format!("figure {n}"), run_figure(n, &common.overrides)?, common))
        }
    }
}

fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let p = dir.join(MANIFEST_NAME);
    let text = std::fs::read(&p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
    serde_json::from_slice(&text).map_err(|e| Error::Input(format!("{}: {e}", p.display())))
}

/// Hash check of the files on disk plus a comparison against the rerun.
fn check(dir: &Path, bundle: &Bundle) -> Result<bool> {
    let manifest = read_manifest(dir)?;
    let mut ok = true;
    for (path, status) in check_bundle(dir)? {
        if status != FileStatus::Ok {
            ok = false;
        }
        println!("{:<8} {path}", format!("{status:?}").to_lowercase());
    }
    let scratch = std::env::temp_dir().join(format!("sunlit-check-{}", std::process::id()));
    let fresh = write_bundle(bundle, &scratch, "check", Instant::now())?;
    let _ = std::fs::remove_dir_all(&scratch);
    for f in fresh.files.iter().filter(|f| f.path.ends_with(".csv")) {
        match manifest.files.iter().find(|g| g.path == f.path) {
            Some(g) if g.sha256 == f.sha256 => {}
            Some(_) => {
                ok = false;
                println!("rerun    {} differs from the recorded output", f.path);
            }
            None => {
                ok = false;
                println!("rerun    {} is not in the manifest", f.path);
            }
        }
    }
    if manifest.model_hash != bundle.model_hash {
        ok = false;
        println!("rerun    model hash {} differs from {}", bundle.model_hash, manifest.model_hash);
    }
    Ok(ok)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let started = Instant::now();
    let (name, bundle, common) = build(&cli.command)?;
    if common.check {
        let ok = check(&common.out, &bundle)?;
        println!("{}", if ok { "check passed" } else { "check FAILED" });
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let manifest = write_bundle(&bundle, &common.out, &name, started)?;
    for f in &manifest.files {
        println!("wrote {}", common.out.join(&f.path).display());
    }
    println!("wrote {} ({:.2} s)", common.out.join(MANIFEST_NAME).display(), manifest.wall_clock_seconds);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
