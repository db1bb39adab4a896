//! Figure runners and the per-command dataset bundles.
//!
//! Each figure starts from a built-in config document; overrides are applied to the
//! document before validation, so every figure is reproducible from its echoed config.

use faer::c64;
use serde_json::{json, Value as Json};

use super::{build_scenario, manifold_elements, single_excitation_states, state_label, RunResult, Scenario};
use crate::analytic::{classify_regime, coherence_eigenvalue, dimer_rate_estimates, Regime};
use crate::bath::Blackbody;
use crate::config::{apply_override, parse_document, validate, ModelId, ScenarioConfig};
use crate::dynamics::{compute_damping_basis, map_with, trace_distance, DampingBasis, Propagator, Trajectory};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, diagonalize, AggregateModel, Basis};
use crate::output::{panel, trajectory_table, Bundle, Table, VERSION};
use crate::redfield::{assemble_tensor, build_channels, liouvillian, Liouvillian};
use crate::scenarios::turnon::TurnOnSchedule;
use crate::units::{from_internal, wavenumber, Unit};

pub const FIGURE_IDS: std::ops::RangeInclusive<u32> = 1..=10;

/// Δ values (cm⁻¹) of the gap scan.
pub fn delta_scan() -> Vec<f64> {
    (0..=40).map(|k| 50.0 * k as f64).collect()
}

/// D/Δ values of the coupling scan.
pub fn ratio_scan() -> Vec<f64> {
    (0..=40).map(|k| 0.1 * k as f64).collect()
}

/// Dipole scale factors of the μ scan, 1 to 10^3.5 in log steps.
pub fn dipole_scan() -> Vec<f64> {
    (0..=70).map(|k| 10f64.powf(0.05 * k as f64)).collect()
}

/// Dipole factors of the bb-only χ panel.
pub const CHI_DIPOLE_FACTORS: [f64; 3] = [1.0, 2.0, 4.0];
/// Turn-on rates of the slow turn-on figure.
pub const TURN_ON_ALPHAS: [f64; 3] = [1.0, 10.0, 100.0];

const DIMER_DOC: &str = r#"
model = "dbv_dimer"
couplings = "placeholder"
reorganization = ["0 cm^-1"]
[time]
start = "0 ps"
stop = "1 ps"
step = "0.001 ps"
"#;

const DIMER_CHI_DOC: &str = r#"
model = "dbv_dimer"
couplings = "placeholder"
reorganization = ["0 cm^-1", "13 cm^-1", "130 cm^-1"]
[time]
start = "0 ps"
stop = "1 ps"
step = "0.001 ps"
"#;

const PC645_NATURAL: &str = r#"
model = "pc645"
couplings = "placeholder"
reorganization = ["0 cm^-1", "13 cm^-1", "130 cm^-1"]
[time]
start = "0 ps"
stop = "2 ps"
step = "0.002 ps"
"#;

const PC645_DARK_MBV: &str = r#"
model = "pc645"
couplings = "placeholder"
reorganization = ["0 cm^-1", "13 cm^-1"]
light_off = ["MBVa", "MBVb"]
output_basis = "site"
[time]
start = "0 ps"
stop = "2 ps"
step = "0.002 ps"
"#;

const PC645_DARK_MBV_130: &str = r#"
model = "pc645"
couplings = "placeholder"
reorganization = ["130 cm^-1"]
light_off = ["MBVa", "MBVb"]
output_basis = "site"
[time]
start = "0 ps"
stop = "2 ps"
step = "0.002 ps"
"#;

const PC645_ARTIFICIAL: &str = r#"
model = "pc645"
couplings = "placeholder"
reorganization = ["0 cm^-1", "13 cm^-1", "130 cm^-1"]
[time]
start = "0 ps"
stop = "2 ps"
step = "0.002 ps"
[initial]
kind = "eigenstate"
index = 13
"#;

const PC645_TURN_ON: &str = r#"
model = "pc645"
couplings = "placeholder"
reorganization = ["0 cm^-1"]
[time]
start = "0 ps"
stop = "2 ps"
step = "0.002 ps"
[turn_on]
alpha = 1.0
mode = "erf"
"#;

pub fn figure_document(fig: u32) -> Result<toml::Value> {
    let text = match fig {
        1 | 2 => DIMER_DOC,
        3 | 4 => DIMER_CHI_DOC,
        5 => PC645_NATURAL,
        6 => PC645_DARK_MBV,
        7 => PC645_DARK_MBV_130,
        8 | 9 => PC645_ARTIFICIAL,
        10 => PC645_TURN_ON,
        _ => return Err(Error::Input(format!("unknown figure id {fig}; expected 1–10"))),
    };
    parse_document(text)
}

fn title(fig: u32) -> &'static str {
    match fig {
        1 => "dimer coherence decay vs donor–acceptor gap",
        2 => "dimer coherence decay vs coupling/gap ratio",
        3 => "dimer L_ee' vs dipole moment; tb-only and bb-only tensor elements",
        4 => "dimer tensor elements with both baths",
        5 => "PC645 natural excitation from the ground state",
        6 => "PC645 with MBV decoupled from the light",
        7 => "PC645 with MBV decoupled from the light, Λ = 130 cm⁻¹",
        8 => "PC645 artificially prepared in e13",
        9 => "trace distance between radiation-on and radiation-off evolutions from e13",
        10 => "PC645 slow turn-on",
        _ => "",
    }
}

/// Λ in cm⁻¹ as a compact file tag, e.g. `L13`.
pub fn lambda_tag(reorganization: f64) -> String {
    format!("L{}", compact(from_internal(reorganization, Unit::Wavenumber)))
}

fn compact(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    format!("{r}")
}

fn dimer_label(k: usize) -> &'static str {
    ["f", "e", "ep", "g"][k]
}

/// Radiative coherence eigenvalue and rates of a dimer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerPoint {
    pub omega: f64,
    pub eigenvalue: c64,
    pub r_bb: f64,
}

pub fn radiative_liouvillian(model: &AggregateModel, bb: &Blackbody) -> Result<Liouvillian> {
    let basis = diagonalize(&build_hamiltonian(model))?;
    let ch = build_channels(model, &basis, None, Some(bb))?;
    liouvillian(&basis, &assemble_tensor(&ch, &basis)?)
}

pub fn dimer_point(model: &AggregateModel, bb: &Blackbody) -> Result<DimerPoint> {
    let rates = dimer_rate_estimates(model, bb)?;
    let l = radiative_liouvillian(model, bb)?;
    let db = compute_damping_basis(&l)?;
    let basis = diagonalize(&build_hamiltonian(model))?;
    let s = basis.manifold(1);
    Ok(DimerPoint {
        omega: rates.omega,
        eigenvalue: coherence_eigenvalue(&db, s[0], s[1]),
        r_bb: rates.gamma_estimate,
    })
}

fn scan_columns(var: &str) -> Vec<String> {
    [
        var,
        "omega_eep_per_ps",
        "re_L_eep_per_ps",
        "im_L_eep_per_ps",
        "gamma_eep_per_ps",
        "R_bb_eep_eep_per_ps",
        "two_R_bb_per_ps",
        "gamma_over_omega",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn scan_row(x: f64, p: &DimerPoint) -> Vec<f64> {
    vec![
        x,
        p.omega,
        p.eigenvalue.re,
        p.eigenvalue.im,
        p.eigenvalue.re.abs(),
        p.r_bb,
        2.0 * p.r_bb,
        p.r_bb / p.omega,
    ]
}

fn require_bb(scn: &Scenario) -> Result<Blackbody> {
    scn.radiation_bath()?
        .ok_or_else(|| Error::Input("this figure needs the radiation bath (radiation = true)".into()))
}

fn require_dimer(scn: &Scenario) -> Result<()> {
    if scn.model.n_sites() != 2 {
        return Err(Error::Input("this figure needs a two-site model".into()));
    }
    Ok(())
}

pub fn gap_scan_table(scn: &Scenario) -> Result<Table> {
    require_dimer(scn)?;
    let bb = require_bb(scn)?;
    let mean = 0.5 * (scn.model.chromophores()[0].site_energy + scn.model.chromophores()[1].site_energy);
    let mut t = Table::new("gap_scan", scan_columns("delta_cm-1"));
    for d in delta_scan() {
        let mut m = scn.model.clone();
        let dw = wavenumber(d);
        m.chromophores_mut()[0].site_energy = mean - 0.5 * dw;
        m.chromophores_mut()[1].site_energy = mean + 0.5 * dw;
        t.push(scan_row(d, &dimer_point(&m, &bb)?))?;
    }
    Ok(t)
}

pub fn ratio_scan_table(scn: &Scenario) -> Result<Table> {
    require_dimer(scn)?;
    let bb = require_bb(scn)?;
    let c = scn.model.chromophores();
    let gap = (c[1].site_energy - c[0].site_energy).abs();
    let mut t = Table::new("ratio_scan", scan_columns("coupling_over_gap"));
    for r in ratio_scan() {
        let mut m = scn.model.clone();
        if r == 0.0 {
            m = AggregateModel::uncoupled(m.chromophores().to_vec())?.with_light_mask(m.light_mask().to_vec())?;
        } else {
            m.set_coupling(0, 1, r * gap)?;
        }
        t.push(scan_row(r, &dimer_point(&m, &bb)?))?;
    }
    Ok(t)
}

pub fn dipole_scan_table(scn: &Scenario) -> Result<Table> {
    require_dimer(scn)?;
    let bb = require_bb(scn)?;
    let mut cols = scan_columns("mu_dbv_D");
    cols.push("regime".into());
    let mut t = Table::new("dipole_scan", cols);
    let mu0 = scn.model.chromophores()[0].dipole;
    for f in dipole_scan() {
        let m = scn.model.with_dipoles_scaled(f);
        let p = dimer_point(&m, &bb)?;
        let mut row = scan_row(from_internal(mu0 * f, Unit::Debye), &p);
        row.push(regime_code(classify_regime(p.omega, p.r_bb)?.regime));
        t.push(row)?;
    }
    Ok(t)
}

/// 0 coherent, 1 incoherent, 2 critical.
pub fn regime_code(r: Regime) -> f64 {
    match r {
        Regime::Coherent => 0.0,
        Regime::Incoherent => 1.0,
        Regime::Critical => 2.0,
    }
}

/// χ_{ee',aa}(t) for a ∈ {f, e, e', g} of a dimer.
pub fn chi_table(name: &str, l: &Liouvillian, times: &[f64]) -> Result<Table> {
    if l.dimension() != 4 {
        return Err(Error::Input("χ panels need a dimer".into()));
    }
    let (e, ep) = (1, 2);
    let mut cols = vec!["t_ps".to_string()];
    for a in 0..4 {
        let tag = format!("chi_e_ep_{0}_{0}", dimer_label(a));
        cols.push(format!("re_{tag}"));
        cols.push(format!("im_{tag}"));
    }
    let p = Propagator::new(l)?;
    let mut t = Table::new(name, cols);
    for &ti in times {
        let m = map_with(&p, l, ti)?;
        let mut row = vec![ti];
        for a in 0..4 {
            let z = m.element(e, ep, a, a);
            row.push(z.re);
            row.push(z.im);
        }
        t.push(row)?;
    }
    Ok(t)
}

fn label_fn(scn: &Scenario, basis: Basis) -> impl Fn(usize) -> String + '_ {
    move |k| state_label(&scn.model, basis, k)
}

/// Population and coherence panels of the single-excitation states in one basis.
fn state_panels(
    scn: &Scenario,
    traj: &Trajectory,
    basis: Basis,
    suffix: &str,
    log_y: bool,
    tables: &mut Vec<Table>,
    panels: &mut Vec<Json>,
) -> Result<()> {
    let tb = traj.in_basis(&scn.basis, basis)?;
    let states = single_excitation_states(&scn.model, &scn.basis, basis);
    let (pops, coh) = manifold_elements(&states);
    let b = basis_name(basis);
    for (kind, elems) in [("populations", pops), ("coherences", coh)] {
        if elems.is_empty() {
            continue;
        }
        let name = format!("{b}_{kind}_{suffix}");
        tables.push(trajectory_table(&name, &tb, &elems, label_fn(scn, basis))?);
        panels.push(panel(&format!("{name}.csv"), &format!("{b} {kind} ({suffix})"), "t_ps", kind, log_y && kind == "populations"));
    }
    Ok(())
}

fn basis_name(b: Basis) -> &'static str {
    match b {
        Basis::Exciton => "exciton",
        Basis::Site => "site",
    }
}

fn with_config(scn: &Scenario, f: impl FnOnce(&mut ScenarioConfig)) -> Result<Scenario> {
    let mut c = scn.config.clone();
    f(&mut c);
    build_scenario(&c)
}

fn run_tagged(scn: &Scenario) -> Result<Vec<(String, RunResult)>> {
    Ok(scn
        .run()?
        .into_iter()
        .map(|r| (lambda_tag(r.reorganization), r))
        .collect())
}

struct Output {
    tables: Vec<Table>,
    panels: Vec<Json>,
    extra: Json,
}

pub fn run_figure(fig: u32, overrides: &[String]) -> Result<Bundle> {
    let mut doc = figure_document(fig)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg = validate(&doc)?;
    let scn = build_scenario(&cfg)?;
    let out = match fig {
        1 => {
            let t = gap_scan_table(&scn)?;
            Output {
                panels: vec![panel("gap_scan.csv", title(1), "delta_cm-1", "gamma_eep_per_ps", false)],
                tables: vec![t],
                extra: json!({ "overlay": "R_bb_eep_eep_per_ps" }),
            }
        }
        2 => {
            let t = ratio_scan_table(&scn)?;
            Output {
                panels: vec![panel("ratio_scan.csv", title(2), "coupling_over_gap", "gamma_eep_per_ps", false)],
                tables: vec![t],
                extra: json!({ "overlay": "R_bb_eep_eep_per_ps" }),
            }
        }
        3 => figure_three(&scn)?,
        4 => figure_four(&scn)?,
        5 => {
            let mut tables = Vec::new();
            let mut panels = Vec::new();
            for (tag, r) in run_tagged(&scn)? {
                for b in [Basis::Exciton, Basis::Site] {
                    state_panels(&scn, &r.trajectory, b, &tag, false, &mut tables, &mut panels)?;
                }
            }
            Output {
                tables,
                panels,
                extra: Json::Null,
            }
        }
        6 | 7 => {
            let mut tables = Vec::new();
            let mut panels = Vec::new();
            let reference = with_config(&scn, |c| c.light_off.clear())?;
            for (tag, r) in run_tagged(&scn)? {
                state_panels(&scn, &r.trajectory, Basis::Site, &tag, true, &mut tables, &mut panels)?;
            }
            let mut ref_tables = Vec::new();
            let mut ref_panels = Vec::new();
            for (tag, r) in run_tagged(&reference)? {
                state_panels(&reference, &r.trajectory, Basis::Site, &tag, true, &mut ref_tables, &mut ref_panels)?;
            }
            for t in &mut ref_tables {
                t.name = format!("reference_{}", t.name);
            }
            for p in &mut ref_panels {
                p["file"] = Json::String(format!("reference_{}", p["file"].as_str().unwrap_or_default()));
                p["reference"] = Json::Bool(true);
            }
            tables.extend(ref_tables);
            panels.extend(ref_panels);
            Output {
                tables,
                panels,
                extra: json!({ "reference": "same run with every chromophore coupled to the light" }),
            }
        }
        8 => {
            let mut tables = Vec::new();
            let mut panels = Vec::new();
            for (tag, r) in run_tagged(&scn)? {
                for b in [Basis::Exciton, Basis::Site] {
                    state_panels(&scn, &r.trajectory, b, &tag, false, &mut tables, &mut panels)?;
                }
            }
            Output {
                tables,
                panels,
                extra: Json::Null,
            }
        }
        9 => figure_nine(&scn)?,
        10 => figure_ten(&scn)?,
        _ => unreachable!("figure_document rejects other ids"),
    };
    let metadata = json!({
        "figure": fig,
        "title": title(fig),
        "version": VERSION,
        "model_hash": scn.model_hash(),
        "config": toml_to_json(&doc),
        "panels": out.panels,
        "site_map": scn.site_map(),
        "state_labels": state_labels(&scn),
        "extra": out.extra,
    });
    Ok(Bundle {
        tables: out.tables,
        metadata,
        config: toml_to_json(&doc),
        model_hash: scn.model_hash(),
    })
}

fn state_labels(scn: &Scenario) -> Json {
    if scn.model.n_sites() == 2 {
        json!({ "f": 1, "e": 2, "ep": 3, "g": 4 })
    } else {
        json!({ "exciton": "e1…e2ᴺ, descending energy, ground last", "site": "excited site labels joined by +" })
    }
}

pub fn toml_to_json(doc: &toml::Value) -> Json {
    serde_json::to_value(doc).unwrap_or(Json::Null)
}

fn figure_three(scn: &Scenario) -> Result<Output> {
    let mut tables = vec![dipole_scan_table(scn)?];
    let mut panels = vec![panel("dipole_scan.csv", "L_ee' vs μ_DBV", "mu_dbv_D", "re_L_eep_per_ps", false)];
    let times = scn.times();
    let tb_only = with_config(scn, |c| c.radiation = false)?;
    for &l in &scn.config.reorganization {
        let name = format!("chi_tb_{}", lambda_tag(l));
        tables.push(chi_table(&name, &tb_only.liouvillian(l)?, &times)?);
        panels.push(panel(&format!("{name}.csv"), "χ^tb_{ee',aa}", "t_ps", "chi", false));
    }
    for f in CHI_DIPOLE_FACTORS {
        let bb_only = with_config(scn, |c| c.dipole_scale *= f)?;
        let name = format!("chi_bb_mu{}", compact(f));
        tables.push(chi_table(&name, &bb_only.liouvillian(0.0)?, &times)?);
        panels.push(panel(&format!("{name}.csv"), "χ^bb_{ee',aa}", "t_ps", "chi", false));
    }
    Ok(Output {
        tables,
        panels,
        extra: json!({ "chi_bb_dipole_factors": CHI_DIPOLE_FACTORS, "dimer_labels": ["f", "e", "ep", "g"] }),
    })
}

fn figure_four(scn: &Scenario) -> Result<Output> {
    require_bb(scn)?;
    let times = scn.times();
    let mut tables = Vec::new();
    let mut panels = Vec::new();
    for &l in &scn.config.reorganization {
        let name = format!("chi_tb_bb_{}", lambda_tag(l));
        tables.push(chi_table(&name, &scn.liouvillian(l)?, &times)?);
        panels.push(panel(&format!("{name}.csv"), "χ^{tb+bb}_{ee',aa}", "t_ps", "chi", false));
    }
    Ok(Output {
        tables,
        panels,
        extra: json!({ "dimer_labels": ["f", "e", "ep", "g"] }),
    })
}

fn figure_nine(scn: &Scenario) -> Result<Output> {
    let dark = with_config(scn, |c| c.radiation = false)?;
    let on = run_tagged(scn)?;
    let off = run_tagged(&dark)?;
    let mut cols = vec!["t_ps".to_string()];
    cols.extend(on.iter().map(|(tag, _)| format!("trace_distance_{tag}")));
    let mut t = Table::new("trace_distance", cols);
    for k in 0..scn.times().len() {
        let mut row = vec![on[0].1.trajectory.times[k]];
        for ((_, a), (_, b)) in on.iter().zip(&off) {
            row.push(trace_distance(&a.trajectory.states[k], &b.trajectory.states[k])?);
        }
        t.push(row)?;
    }
    Ok(Output {
        tables: vec![t],
        panels: vec![panel("trace_distance.csv", title(9), "t_ps", "trace_distance", true)],
        extra: json!({ "trace_distance": "sum of |eigenvalues| of ρ_on − ρ_off" }),
    })
}

fn figure_ten(scn: &Scenario) -> Result<Output> {
    let mut tables = Vec::new();
    let mut panels = Vec::new();
    let sudden = with_config(scn, |c| c.turn_on.alpha = 0.0)?;
    for (tag, r) in run_tagged(&sudden)? {
        state_panels(&sudden, &r.trajectory, Basis::Exciton, &format!("sudden_{tag}"), false, &mut tables, &mut panels)?;
    }
    for a in TURN_ON_ALPHAS {
        let s = with_config(scn, |c| c.turn_on.alpha = a)?;
        for (tag, r) in run_tagged(&s)? {
            let suffix = format!("alpha{}_{tag}", compact(a));
            state_panels(&s, &r.trajectory, Basis::Exciton, &suffix, false, &mut tables, &mut panels)?;
        }
    }
    Ok(Output {
        tables,
        panels,
        extra: json!({ "alphas": TURN_ON_ALPHAS, "mode": scn.config.turn_on.mode }),
    })
}

fn base_metadata(command: &str, scn: &Scenario, doc: &toml::Value, panels: Vec<Json>, extra: Json) -> Json {
    json!({
        "command": command,
        "version": VERSION,
        "model_hash": scn.model_hash(),
        "config": toml_to_json(doc),
        "panels": panels,
        "site_map": scn.site_map(),
        "extra": extra,
    })
}

fn bundle(command: &str, scn: &Scenario, doc: &toml::Value, tables: Vec<Table>, panels: Vec<Json>, extra: Json) -> Bundle {
    Bundle {
        metadata: base_metadata(command, scn, doc, panels, extra),
        config: toml_to_json(doc),
        model_hash: scn.model_hash(),
        tables,
    }
}

/// Trajectories of the requested elements for each Λ, with observables.
pub fn simulate_bundle(doc: &toml::Value) -> Result<Bundle> {
    let cfg = validate(doc)?;
    let scn = build_scenario(&cfg)?;
    let basis = cfg.output_basis;
    let elems = scn.elements();
    let mut tables = Vec::new();
    let mut panels = Vec::new();
    let mut reports = serde_json::Map::new();
    for (tag, r) in run_tagged(&scn)? {
        let tb = r.trajectory.in_basis(&scn.basis, basis)?;
        let name = format!("{}_{tag}", basis_name(basis));
        tables.push(trajectory_table(&name, &tb, &elems, label_fn(&scn, basis))?);
        panels.push(panel(&format!("{name}.csv"), &name, "t_ps", "rho", false));
        let rep = super::observables::observables_report(&tb, &elems, label_fn(&scn, basis));
        reports.insert(tag, serde_json::to_value(rep).unwrap_or(Json::Null));
    }
    Ok(bundle("simulate", &scn, doc, tables, panels, json!({ "observables": reports })))
}

/// Slow turn-on run; the schedule of the fastest and slowest transition is included.
pub fn turnon_bundle(doc: &toml::Value) -> Result<Bundle> {
    let cfg = validate(doc)?;
    if !(cfg.turn_on.alpha > 0.0) {
        return Err(Error::Config("turn_on.alpha must be > 0 for a turn-on run".into()));
    }
    if !cfg.radiation {
        return Err(Error::Config("a turn-on run needs radiation = true".into()));
    }
    let mut b = simulate_bundle(doc)?;
    let scn = build_scenario(&cfg)?;
    let tpl = scn.template(cfg.reorganization[0])?;
    let sched = TurnOnSchedule::new(&tpl, cfg.turn_on.alpha, cfg.turn_on.mode)?;
    let mut omegas: Vec<f64> = Vec::new();
    let d = scn.basis.dimension();
    for a in 0..d {
        for bb in 0..d {
            if a != bb && tpl.scalable_channels().iter().any(|c| c.operator()[(a, bb)] != 0.0) {
                omegas.push(scn.basis.transition(a, bb).abs());
            }
        }
    }
    let w_max = omegas.iter().copied().fold(0.0, f64::max);
    let w_min = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut t = Table::new("schedule", vec!["t_ps".into(), "s_fastest".into(), "s_slowest".into()]);
    for ti in scn.times() {
        t.push(vec![
            ti,
            super::erf_schedule(cfg.turn_on.alpha, w_max, ti, cfg.turn_on.mode)?,
            super::erf_schedule(cfg.turn_on.alpha, w_min, ti, cfg.turn_on.mode)?,
        ])?;
    }
    b.tables.push(t);
    b.metadata["command"] = json!("turnon");
    b.metadata["extra"]["saturation_time_ps"] = json!(crate::dynamics::GeneratorSchedule::saturation_time(&sched));
    Ok(b)
}

/// All χ_{ab,cd}(t) of a small system, one table per Λ.
pub fn map_bundle(doc: &toml::Value) -> Result<Bundle> {
    let cfg = validate(doc)?;
    let scn = build_scenario(&cfg)?;
    let d = scn.basis.dimension();
    if d > 4 {
        return Err(Error::Input(format!(
            "map output lists all d⁴ entries and is limited to dimension ≤ 4 (got {d})"
        )));
    }
    let times = scn.times();
    let label = label_fn(&scn, Basis::Exciton);
    let mut tables = Vec::new();
    let mut panels = Vec::new();
    for &l in &cfg.reorganization {
        let lv = scn.liouvillian(l)?;
        let p = Propagator::new(&lv)?;
        let mut cols = vec!["t_ps".to_string()];
        let mut idx = Vec::new();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let tag = format!("chi_{}_{}_{}_{}", label(a), label(b), label(c), label(e));
                        cols.push(format!("re_{tag}"));
                        cols.push(format!("im_{tag}"));
                        idx.push((a, b, c, e));
                    }
                }
            }
        }
        let name = format!("map_{}", lambda_tag(l));
        let mut t = Table::new(&name, cols);
        for &ti in &times {
            let m = map_with(&p, &lv, ti)?;
            let mut row = vec![ti];
            for &(a, b, c, e) in &idx {
                let z = m.element(a, b, c, e);
                row.push(z.re);
                row.push(z.im);
            }
            t.push(row)?;
        }
        tables.push(t);
        panels.push(panel(&format!("{name}.csv"), "χ_{ab,cd}(t)", "t_ps", "chi", false));
    }
    Ok(bundle("map", &scn, doc, tables, panels, json!({ "propagator_labels": "exciton basis, e1…e2ᴺ" })))
}

fn coherence_pairs(scn: &Scenario) -> Vec<(usize, usize)> {
    let mut states = scn.basis.manifold(1);
    if scn.model.n_sites() == 1 {
        states.push(scn.basis.ground_state());
    }
    manifold_elements(&states).1
}

/// R^bb_{ab,ab} and the coherence eigenvalue per pair, plus the full spectrum.
pub fn rates_bundle(doc: &toml::Value) -> Result<Bundle> {
    let cfg = validate(doc)?;
    let scn = build_scenario(&cfg)?;
    let bb = require_bb(&scn)?;
    let rad = radiative_liouvillian(&scn.model, &bb)?;
    let rad_tensor = {
        let ch = build_channels(&scn.model, &scn.basis, None, Some(&bb))?;
        assemble_tensor(&ch, &scn.basis)?
    };
    let db_rad = compute_damping_basis(&rad)?;
    let full: Vec<(String, DampingBasis)> = cfg
        .reorganization
        .iter()
        .map(|&l| Ok((lambda_tag(l), compute_damping_basis(&scn.liouvillian(l)?)?)))
        .collect::<Result<_>>()?;
    let mut cols: Vec<String> = [
        "pair",
        "a",
        "b",
        "omega_ab_per_ps",
        "R_bb_abab_per_ps",
        "two_R_bb_per_ps",
        "re_L_bb_per_ps",
        "im_L_bb_per_ps",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for (tag, _) in &full {
        cols.push(format!("re_L_full_{tag}_per_ps"));
        cols.push(format!("im_L_full_{tag}_per_ps"));
    }
    let mut t = Table::new("rates", cols);
    for (n, (a, b)) in coherence_pairs(&scn).into_iter().enumerate() {
        let r = rad_tensor.get(a, b, a, b);
        let lr = coherence_eigenvalue(&db_rad, a, b);
        let mut row = vec![n as f64, (a + 1) as f64, (b + 1) as f64, scn.basis.transition(a, b), r, 2.0 * r, lr.re, lr.im];
        for (_, db) in &full {
            let lf = coherence_eigenvalue(db, a, b);
            row.push(lf.re);
            row.push(lf.im);
        }
        t.push(row)?;
    }
    let mut tables = vec![t];
    let mut panels = vec![panel("rates.csv", "radiative coherence rates", "pair", "R_bb_abab_per_ps", true)];
    let mut diagnostics = serde_json::Map::new();
    for (tag, db) in &full {
        let mut ev = db.eigenvalues().to_vec();
        ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
        let mut e = Table::new(
            format!("eigenvalues_{tag}"),
            vec!["index".into(), "re_L_per_ps".into(), "im_L_per_ps".into()],
        );
        for (k, z) in ev.iter().enumerate() {
            e.push(vec![k as f64, z.re, z.im])?;
        }
        panels.push(panel(&format!("{}.csv", e.name), "Liouvillian spectrum", "re_L_per_ps", "im_L_per_ps", false));
        tables.push(e);
        diagnostics.insert(
            tag.clone(),
            json!({ "damping_basis_condition": db.condition(), "damping_basis_residual": db.residual() }),
        );
    }
    Ok(bundle("rates", &scn, doc, tables, panels, Json::Object(diagnostics)))
}

/// Regime of each single-exciton coherence; dimers also get the three scans.
pub fn regime_bundle(doc: &toml::Value) -> Result<Bundle> {
    let cfg = validate(doc)?;
    let scn = build_scenario(&cfg)?;
    let l0 = cfg.reorganization[0];
    let tensor = {
        let ch = scn.channels(l0)?;
        assemble_tensor(&ch, &scn.basis)?
    };
    let mut t = Table::new(
        "regime",
        ["pair", "a", "b", "omega_ab_per_ps", "gamma_abab_per_ps", "regime", "re_zeta", "im_zeta"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for (n, (a, b)) in coherence_pairs(&scn).into_iter().enumerate() {
        let w = scn.basis.transition(a, b).abs();
        let g = tensor.get(a, b, a, b);
        let r = classify_regime(w, g)?;
        t.push(vec![n as f64, (a + 1) as f64, (b + 1) as f64, w, g, regime_code(r.regime), r.zeta.re, r.zeta.im])?;
    }
    let mut tables = vec![t];
    let mut panels = vec![panel("regime.csv", "coherence regimes", "pair", "gamma_abab_per_ps", false)];
    if cfg.model == ModelId::DbvDimer && cfg.radiation {
        tables.push(gap_scan_table(&scn)?);
        tables.push(ratio_scan_table(&scn)?);
        tables.push(dipole_scan_table(&scn)?);
        panels.push(panel("gap_scan.csv", title(1), "delta_cm-1", "gamma_eep_per_ps", false));
        panels.push(panel("ratio_scan.csv", title(2), "coupling_over_gap", "gamma_eep_per_ps", false));
        panels.push(panel("dipole_scan.csv", "L_ee' vs μ_DBV", "mu_dbv_D", "re_L_eep_per_ps", false));
    }
    Ok(bundle("regime", &scn, doc, tables, panels, json!({ "regime_codes": { "0": "coherent", "1": "incoherent", "2": "critical" } })))
}

/// Dipole where γ^bb_{ee'} = ω_{ee'} for a dimer, by bisection in log μ.
pub fn critical_dipole_factor(model: &AggregateModel, bb: &Blackbody) -> Result<f64> {
    let g = |f: f64| -> Result<f64> {
        let p = dimer_point(&model.with_dipoles_scaled(f), bb)?;
        Ok(p.r_bb - p.omega)
    };
    bisect_log(g, 1e-3, 1e6)
}

/// Smallest dipole factor where Im L_ee' drops to (numerically) zero, if any.
pub fn vanishing_frequency_factor(model: &AggregateModel, bb: &Blackbody) -> Result<Option<f64>> {
    let omega0 = dimer_point(model, bb)?.omega;
    let g = |f: f64| -> Result<f64> {
        let p = dimer_point(&model.with_dipoles_scaled(f), bb)?;
        Ok(p.eigenvalue.im.abs() - 1e-6 * omega0)
    };
    if g(1e6)? > 0.0 {
        return Ok(None);
    }
    bisect_log(g, 1e-3, 1e6).map(Some)
}

fn bisect_log(g: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (ga, gb) = (g(lo)?, g(hi)?);
    if ga.signum() == gb.signum() {
        return Err(Error::Numerical(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(m.exp())?.signum() == ga.signum() {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}
