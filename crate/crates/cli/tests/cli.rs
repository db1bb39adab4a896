use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sunlit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sunlit")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

const TB_SINGLE: &str = r#"
model = "single_chromophore"
radiation = false
reorganization = ["13 cm^-1"]

[time]
stop = "0.5 ps"
step = "0.05 ps"
"#;

const DIMER: &str = r#"
model = "dbv_dimer"
couplings = "placeholder"
reorganization = ["0 cm^-1", "13 cm^-1"]

[time]
stop = "0.2 ps"
step = "0.01 ps"

[initial]
kind = "site"
index = 2
"#;

#[test]
fn map_on_phonon_only_chromophore() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TB_SINGLE);
    let out = tmp.path().join("map");
    let o = sunlit(&["map", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("map_L13.csv"));
    assert_eq!(header.len(), 1 + 2 * 16);
    let zero = (0..16)
        .filter(|k| rows.iter().all(|r| r[1 + 2 * k] == 0.0 && r[2 + 2 * k] == 0.0))
        .count();
    assert_eq!(zero, 12);
    assert_eq!(manifest(&out)["command"], "map");
}

#[test]
fn rates_on_the_dimer() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), DIMER);
    let out = tmp.path().join("rates");
    let o = sunlit(&["rates", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<String> = manifest(&out)["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect();
    assert!(files.contains(&"rates.csv".to_string()), "{files:?}");
    assert!(files.contains(&"eigenvalues_L13.csv".to_string()), "{files:?}");
    let (_, rows) = read_csv(&out.join("rates.csv"));
    assert!(!rows.is_empty());
}

#[test]
fn figure_five_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig5");
    let o = sunlit(&["figure", "--fig", "5", "--out", out.to_str().unwrap(), "--override", "time.stop=\"0.1 ps\""]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for tag in ["L0", "L13", "L130"] {
        for kind in ["populations", "coherences"] {
            for basis in ["exciton", "site"] {
                assert!(out.join(format!("{basis}_{kind}_{tag}.csv")).exists());
            }
        }
    }
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["figure"], 5);
    let (header, _) = read_csv(&out.join("site_populations_L0.csv"));
    assert_eq!(header[0], "t_ps");
    assert!(header.contains(&"re_rho_MBVa_MBVa".to_string()));
}

#[test]
fn positional_figure_id_and_unknown_figure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("f1");
    assert!(sunlit(&["figure", "1", "--out", out.to_str().unwrap()]).status.success());
    assert!(out.join("gap_scan.csv").exists());
    assert_eq!(sunlit(&["figure", "11", "--out", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), DIMER);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert!(sunlit(&["simulate", "--config", &cfg, "--out", d.to_str().unwrap()]).status.success());
    }
    for f in ["exciton_L0.csv", "exciton_L13.csv", "metadata.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn check_verifies_and_detects_changes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), DIMER);
    let out = tmp.path().join("run");
    let o = out.to_str().unwrap();
    assert!(sunlit(&["simulate", "--config", &cfg, "--out", o]).status.success());
    let ok = sunlit(&["simulate", "--config", &cfg, "--out", o, "--check"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("check passed"));

    let changed = sunlit(&["simulate", "--config", &cfg, "--out", o, "--check", "--override", "dipole_scale=2"]);
    assert_eq!(changed.status.code(), Some(1));

    let csv = out.join("exciton_L0.csv");
    let mut bytes = fs::read(&csv).unwrap();
    bytes.extend_from_slice(b"0\n");
    fs::write(&csv, bytes).unwrap();
    let tampered = sunlit(&["simulate", "--config", &cfg, "--out", o, "--check"]);
    assert_eq!(tampered.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tampered.stdout).contains("mismatch"));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();

    let bad = write_config(tmp.path(), "model = \"dbv_dimer\"\ncouplings = \"placeholder\"\nreorganization = [\"-5 cm^-1\"]\n");
    let r = sunlit(&["simulate", "--config", &bad, "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("reorganization"));

    let missing = write_config(tmp.path(), "model = \"pc645\"\n");
    let r = sunlit(&["simulate", "--config", &missing, "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("placeholder"));

    let bare = write_config(tmp.path(), "model = \"single_chromophore\"\nradiation_temperature = 5600\n");
    assert_eq!(sunlit(&["simulate", "--config", &bare, "--out", o]).status.code(), Some(2));

    let syntax = write_config(tmp.path(), "model = \n");
    let r = sunlit(&["simulate", "--config", &syntax, "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line"));

    assert_eq!(sunlit(&["simulate", "--out", o]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn turnon_adds_the_schedule() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{DIMER}\n[turn_on]\nalpha = 10\n").replace("reorganization = [\"0 cm^-1\", \"13 cm^-1\"]", "reorganization = [\"0 cm^-1\"]"),
    );
    let out = tmp.path().join("t");
    let o = sunlit(&["turnon", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("schedule.csv"));
    assert_eq!(header, ["t_ps", "s_fastest", "s_slowest"]);
    assert_eq!(rows[0][1], 0.0);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[1])));
}

#[test]
fn regime_on_the_dimer_includes_scans() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), DIMER);
    let out = tmp.path().join("r");
    let o = sunlit(&["regime", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("regime.csv").exists());
    assert!(out.join("dipole_scan.csv").exists());
}
