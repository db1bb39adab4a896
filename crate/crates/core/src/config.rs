//! Scenario configuration: TOML with unit-tagged quantities.
//!
//! Physical quantities are written either as `"2.112 eV"` or as
//! `{ value = 2.112, unit = "eV" }`; bare numbers are rejected. Validation collects every
//! problem with its field path instead of stopping at the first one.
//!
//! ```toml
//! model = "pc645"                # single_chromophore | dbv_dimer | pc645 | custom
//! couplings = "placeholder"      # or [[couplings]] tables, see below
//! reorganization = ["0 cm^-1", "13 cm^-1"]
//! cutoff = "100 cm^-1"
//! phonon_temperature = "300 K"
//! radiation_temperature = "5600 K"
//! light_off = ["MBVa", "MBVb"]
//! output_basis = "site"
//! elements = [[12, 12], [12, 13]]
//!
//! [time]
//! start = "0 ps"
//! stop = "2 ps"
//! step = "0.01 ps"
//!
//! [initial]
//! kind = "eigenstate"            # ground | eigenstate | site | matrix
//! index = 13
//!
//! [turn_on]
//! alpha = 10.0
//! mode = "erf"                   # erf | linear
//!
//! [[couplings]]
//! sites = ["DBVc", "DBVd"]
//! value = "320 cm^-1"
//! ```
//!
//! Indices in `initial.index` and `elements` are 1-based, matching the e₁…e₂ᴺ labels
//! (descending energy, ground state last).

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, FieldIssue, Result};
use crate::model::Basis;
use crate::scenarios::builtin;
use crate::units::{wavenumber, Dimension, Quantity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    SingleChromophore,
    DbvDimer,
    Pc645,
    Custom,
}

impl ModelId {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "single_chromophore" => ModelId::SingleChromophore,
            "dbv_dimer" => ModelId::DbvDimer,
            "pc645" => ModelId::Pc645,
            "custom" => ModelId::Custom,
            _ => return None,
        })
    }

    pub fn needs_couplings(self) -> bool {
        matches!(self, ModelId::DbvDimer | ModelId::Pc645)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChromophoreSpec {
    pub label: String,
    /// rad/ps
    pub energy: f64,
    /// C·m
    pub dipole: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingEntry {
    pub a: String,
    pub b: String,
    /// rad/ps
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Couplings {
    /// No couplings given (valid only for uncoupled models).
    Absent,
    /// Explicit opt-in to the shipped non-measured placeholder set.
    Placeholder,
    Explicit(Vec<CouplingEntry>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop > start) {
            return Err(Error::Config(format!(
                "time grid needs step > 0 and stop > start (got {start}, {stop}, {step})"
            )));
        }
        Ok(TimeGrid { start, stop, step })
    }

    /// start, start + step, …, with the last point within half a step of `stop`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 0.5).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Ground,
    /// 1-based eigenstate label.
    Eigenstate(usize),
    /// 1-based site index; the single-excitation site state.
    Site(usize),
    /// Exciton-basis density matrix.
    Matrix { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnOnMode {
    Erf,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurnOn {
    /// 0 = sudden.
    pub alpha: f64,
    pub mode: TurnOnMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub model: ModelId,
    /// Chromophore for `single_chromophore`.
    pub chromophore: String,
    /// Chromophores of a `custom` model.
    pub chromophores: Vec<ChromophoreSpec>,
    pub couplings: Couplings,
    /// Λ values, rad/ps.
    pub reorganization: Vec<f64>,
    /// λ, rad/ps.
    pub cutoff: f64,
    pub phonon_temperature: f64,
    pub radiation: bool,
    pub radiation_temperature: f64,
    pub dipole_scale: f64,
    pub time: TimeGrid,
    pub initial: InitialState,
    pub turn_on: TurnOn,
    pub light_off: Vec<String>,
    pub output_basis: Basis,
    /// 1-based (a, b) pairs; empty = single-exciton manifold defaults.
    pub elements: Vec<(usize, usize)>,
}

impl ScenarioConfig {
    pub fn site_labels(&self) -> Vec<String> {
        match self.model {
            ModelId::SingleChromophore => vec![self.chromophore.clone()],
            ModelId::DbvDimer => builtin::DIMER_SITES.iter().map(|s| s.to_string()).collect(),
            ModelId::Pc645 => builtin::labels().map(String::from).collect(),
            ModelId::Custom => self.chromophores.iter().map(|c| c.label.clone()).collect(),
        }
    }
}

const KNOWN_KEYS: [&str; 16] = [
    "model",
    "chromophore",
    "chromophores",
    "couplings",
    "reorganization",
    "cutoff",
    "phonon_temperature",
    "radiation",
    "radiation_temperature",
    "dipole_scale",
    "time",
    "initial",
    "turn_on",
    "light_off",
    "output_basis",
    "elements",
];

struct Issues(Vec<FieldIssue>);

impl Issues {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldIssue {
            field: field.into(),
            message: message.into(),
        });
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn quantity(v: &Value, field: &str, dim: Dimension, issues: &mut Issues) -> Option<f64> {
    let q = match v {
        Value::String(s) => s.parse::<Quantity>(),
        Value::Table(t) => {
            let value = match t.get("value") {
                Some(Value::Float(x)) => Some(*x),
                Some(Value::Integer(i)) => Some(*i as f64),
                _ => None,
            };
            let unit = t.get("unit").and_then(Value::as_str);
            match (value, unit) {
                (Some(x), Some(u)) => u.parse().map(|u| Quantity::new(x, u)),
                _ => Err(Error::Config("expected { value = <number>, unit = \"<tag>\" }".into())),
            }
        }
        Value::Float(_) | Value::Integer(_) => Err(Error::Config(format!(
            "bare number; attach a unit tag, e.g. \"{} {}\"",
            v,
            default_symbol(dim)
        ))),
        _ => Err(Error::Config("expected a unit-tagged quantity".into())),
    };
    match q {
        Ok(q) if q.unit.dimension() != dim => {
            issues.push(field, format!("unit `{}` is not a {dim} unit", q.unit));
            None
        }
        Ok(q) if !q.value.is_finite() => {
            issues.push(field, "value is not finite");
            None
        }
        Ok(q) => Some(q.internal()),
        Err(e) => {
            issues.push(field, strip_prefix(&e));
            None
        }
    }
}

fn default_symbol(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Frequency => "cm^-1",
        Dimension::Temperature => "K",
        Dimension::Dipole => "D",
        Dimension::Time => "ps",
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

fn number(v: &Value, field: &str, issues: &mut Issues) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => {
            issues.push(field, "expected a number");
            None
        }
    }
}

fn index(v: &Value, field: &str, issues: &mut Issues) -> Option<usize> {
    match v.as_integer() {
        Some(i) if i >= 1 => Some(i as usize),
        Some(_) => {
            issues.push(field, "indices are 1-based and must be ≥ 1");
            None
        }
        None => {
            issues.push(field, "expected an integer");
            None
        }
    }
}

fn string<'a>(v: &'a Value, field: &str, issues: &mut Issues) -> Option<&'a str> {
    let s = v.as_str();
    if s.is_none() {
        issues.push(field, "expected a string");
    }
    s
}

fn matrix(v: &Value, field: &str, issues: &mut Issues) -> Option<Vec<Vec<f64>>> {
    let rows = v.as_array()?;
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let Some(r) = r.as_array() else {
            issues.push(format!("{field}[{i}]"), "expected an array of numbers");
            return None;
        };
        let mut row = Vec::new();
        for (j, x) in r.iter().enumerate() {
            row.push(number(x, &format!("{field}[{i}][{j}]"), issues)?);
        }
        out.push(row);
    }
    Some(out)
}

pub fn read_config(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_document(&text)
}

/// Parse TOML text, reporting syntax errors with line/column.
pub fn parse_document(text: &str) -> Result<Value> {
    text.parse::<Table>()
        .map(Value::Table)
        .map_err(|e| Error::Config(format!("TOML parse error: {e}")))
}

/// Apply a `key.path=value` override. The value is read as TOML when it parses as
/// such and as a plain string otherwise.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{spec}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (n, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{}` is not a table", parts[..n].join("."))))?;
        if n + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
    }
    unreachable!("key has at least one segment")
}

pub fn load(path: &Path, overrides: &[String]) -> Result<(ScenarioConfig, Value)> {
    let mut doc = read_config(path)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg = validate(&doc)?;
    Ok((cfg, doc))
}

pub fn parse_str(text: &str) -> Result<ScenarioConfig> {
    validate(&parse_document(text)?)
}

/// Turn a TOML document into a validated config, collecting every problem.
pub fn validate(doc: &Value) -> Result<ScenarioConfig> {
    let Some(t) = doc.as_table() else {
        return Err(Error::Config("configuration root must be a table".into()));
    };
    let mut issues = Issues(Vec::new());
    for k in t.keys() {
        if !KNOWN_KEYS.contains(&k.as_str()) {
            issues.push(k.as_str(), "unknown key");
        }
    }

    let model = match t.get("model") {
        None => {
            issues.push("model", "required (single_chromophore | dbv_dimer | pc645 | custom)");
            None
        }
        Some(v) => string(v, "model", &mut issues).and_then(|s| {
            let m = ModelId::parse(s);
            if m.is_none() {
                issues.push("model", format!("unknown model id `{s}`"));
            }
            m
        }),
    };

    let chromophore = match t.get("chromophore") {
        Some(v) => string(v, "chromophore", &mut issues).unwrap_or("DBVc").to_string(),
        None => "DBVc".to_string(),
    };
    if model == Some(ModelId::SingleChromophore) && builtin::chromophore(&chromophore).is_err() {
        issues.push(
            "chromophore",
            format!("unknown chromophore `{chromophore}` (expected one of MBVa, MBVb, DBVc, DBVd)"),
        );
    }

    let mut chromophores = Vec::new();
    match t.get("chromophores") {
        Some(Value::Array(list)) => {
            for (i, c) in list.iter().enumerate() {
                let f = format!("chromophores[{i}]");
                let Some(ct) = c.as_table() else {
                    issues.push(f, "expected a table");
                    continue;
                };
                let label = ct.get("label").and_then(|v| string(v, &join(&f, "label"), &mut issues));
                if ct.get("label").is_none() {
                    issues.push(join(&f, "label"), "required");
                }
                let energy = req(ct, &f, "energy", &mut issues)
                    .and_then(|v| quantity(v, &join(&f, "energy"), Dimension::Frequency, &mut issues));
                if let Some(e) = energy {
                    if !(e > 0.0) {
                        issues.push(join(&f, "energy"), "site energy must be positive");
                    }
                }
                let dipole = req(ct, &f, "dipole", &mut issues)
                    .and_then(|v| quantity(v, &join(&f, "dipole"), Dimension::Dipole, &mut issues));
                if let (Some(l), Some(e), Some(d)) = (label, energy, dipole) {
                    chromophores.push(ChromophoreSpec {
                        label: l.to_string(),
                        energy: e,
                        dipole: d,
                    });
                }
            }
        }
        Some(_) => issues.push("chromophores", "expected an array of tables"),
        None => {}
    }
    match model {
        Some(ModelId::Custom) if chromophores.is_empty() && t.get("chromophores").is_none() => {
            issues.push("chromophores", "required for a custom model")
        }
        Some(m) if m != ModelId::Custom && t.get("chromophores").is_some() => issues.push(
            "chromophores",
            "only a custom model takes explicit chromophores",
        ),
        _ => {}
    }
    let mut seen = BTreeSet::new();
    for c in &chromophores {
        if !seen.insert(c.label.clone()) {
            issues.push("chromophores", format!("duplicate label `{}`", c.label));
        }
    }

    let couplings = match t.get("couplings") {
        None => Couplings::Absent,
        Some(Value::String(s)) if s == "placeholder" => Couplings::Placeholder,
        Some(Value::String(s)) => {
            issues.push("couplings", format!("`{s}` is not recognised; use \"placeholder\" or [[couplings]] tables"));
            Couplings::Absent
        }
        Some(Value::Array(list)) => {
            let mut out = Vec::new();
            for (i, c) in list.iter().enumerate() {
                let f = format!("couplings[{i}]");
                let Some(ct) = c.as_table() else {
                    issues.push(f, "expected a table with `sites` and `value`");
                    continue;
                };
                let sites = ct.get("sites").and_then(Value::as_array).and_then(|a| {
                    let v: Option<Vec<&str>> = a.iter().map(Value::as_str).collect();
                    v.filter(|v| v.len() == 2)
                });
                if sites.is_none() {
                    issues.push(join(&f, "sites"), "expected two site labels");
                }
                let value = req(ct, &f, "value", &mut issues)
                    .and_then(|v| quantity(v, &join(&f, "value"), Dimension::Frequency, &mut issues));
                if let (Some(s), Some(v)) = (sites, value) {
                    if s[0] == s[1] {
                        issues.push(join(&f, "sites"), "a site cannot couple to itself");
                    }
                    out.push(CouplingEntry {
                        a: s[0].to_string(),
                        b: s[1].to_string(),
                        value: v,
                    });
                }
            }
            Couplings::Explicit(out)
        }
        Some(_) => {
            issues.push("couplings", "expected \"placeholder\" or an array of tables");
            Couplings::Absent
        }
    };
    if let Some(m) = model {
        if m.needs_couplings() && couplings == Couplings::Absent && t.get("couplings").is_none() {
            issues.push(
                "couplings",
                "required: no published values exist for the inter-chromophore couplings D_jk of \
                 this model; supply [[couplings]] entries or set couplings = \"placeholder\" to use the \
                 shipped non-measured values",
            );
        }
        if m == ModelId::SingleChromophore && matches!(couplings, Couplings::Explicit(ref v) if !v.is_empty()) {
            issues.push("couplings", "a single chromophore has no couplings");
        }
    }

    let reorganization = match t.get("reorganization") {
        None => vec![0.0],
        Some(Value::Array(list)) => {
            if list.is_empty() {
                issues.push("reorganization", "list must not be empty");
            }
            list.iter()
                .enumerate()
                .filter_map(|(i, v)| quantity(v, &format!("reorganization[{i}]"), Dimension::Frequency, &mut issues))
                .collect()
        }
        Some(v) => quantity(v, "reorganization", Dimension::Frequency, &mut issues)
            .into_iter()
            .collect(),
    };
    for (i, l) in reorganization.iter().enumerate() {
        if *l < 0.0 {
            issues.push(format!("reorganization[{i}]"), "Λ must be ≥ 0");
        }
    }

    let cutoff = opt_quantity(t, "", "cutoff", Dimension::Frequency, wavenumber(100.0), &mut issues);
    if !(cutoff > 0.0) {
        issues.push("cutoff", "λ must be positive");
    }
    let phonon_temperature = opt_quantity(t, "", "phonon_temperature", Dimension::Temperature, 300.0, &mut issues);
    if !(phonon_temperature > 0.0) {
        issues.push("phonon_temperature", "temperature must be positive");
    }
    let radiation_temperature =
        opt_quantity(t, "", "radiation_temperature", Dimension::Temperature, 5600.0, &mut issues);
    if !(radiation_temperature > 0.0) {
        issues.push("radiation_temperature", "temperature must be positive");
    }
    let radiation = match t.get("radiation") {
        None => true,
        Some(Value::Boolean(b)) => *b,
        Some(_) => {
            issues.push("radiation", "expected true or false");
            true
        }
    };
    let dipole_scale = t
        .get("dipole_scale")
        .and_then(|v| number(v, "dipole_scale", &mut issues))
        .unwrap_or(1.0);
    if !(dipole_scale >= 0.0) || !dipole_scale.is_finite() {
        issues.push("dipole_scale", "must be a finite number ≥ 0");
    }

    let time = match t.get("time") {
        None => TimeGrid {
            start: 0.0,
            stop: 2.0,
            step: 0.01,
        },
        Some(Value::Table(tt)) => {
            let start = opt_quantity(tt, "time", "start", Dimension::Time, 0.0, &mut issues);
            let stop = opt_quantity(tt, "time", "stop", Dimension::Time, 2.0, &mut issues);
            let step = opt_quantity(tt, "time", "step", Dimension::Time, 0.01, &mut issues);
            if !(step > 0.0) {
                issues.push("time.step", "step must be positive");
            }
            if !(stop > start) {
                issues.push("time.stop", "stop must exceed start");
            }
            if start < 0.0 {
                issues.push("time.start", "the run starts at t = 0; start must be ≥ 0");
            }
            if step > 0.0 && (stop - start) / step > 1e7 {
                issues.push("time.step", "more than 10⁷ output points");
            }
            for k in tt.keys() {
                if !["start", "stop", "step"].contains(&k.as_str()) {
                    issues.push(join("time", k), "unknown key");
                }
            }
            TimeGrid { start, stop, step }
        }
        Some(_) => {
            issues.push("time", "expected a table");
            TimeGrid {
                start: 0.0,
                stop: 2.0,
                step: 0.01,
            }
        }
    };

    let initial = match t.get("initial") {
        None => InitialState::Ground,
        Some(Value::Table(it)) => {
            let kind = it.get("kind").and_then(|v| string(v, "initial.kind", &mut issues)).unwrap_or("ground");
            match kind {
                "ground" => InitialState::Ground,
                "eigenstate" | "site" => {
                    let i = match it.get("index") {
                        Some(v) => index(v, "initial.index", &mut issues),
                        None => {
                            issues.push("initial.index", format!("required for kind = \"{kind}\""));
                            None
                        }
                    }
                    .unwrap_or(1);
                    if kind == "eigenstate" {
                        InitialState::Eigenstate(i)
                    } else {
                        InitialState::Site(i)
                    }
                }
                "matrix" => {
                    let re = it.get("re").and_then(|v| matrix(v, "initial.re", &mut issues));
                    if re.is_none() {
                        issues.push("initial.re", "required: square array of numbers");
                    }
                    let re = re.unwrap_or_default();
                    let im = it
                        .get("im")
                        .and_then(|v| matrix(v, "initial.im", &mut issues))
                        .unwrap_or_else(|| vec![vec![0.0; re.len()]; re.len()]);
                    let square = |m: &Vec<Vec<f64>>| m.iter().all(|r| r.len() == m.len());
                    if !square(&re) || !square(&im) || re.len() != im.len() {
                        issues.push("initial", "re and im must be square and of equal size");
                    }
                    InitialState::Matrix { re, im }
                }
                other => {
                    issues.push("initial.kind", format!("unknown kind `{other}` (ground | eigenstate | site | matrix)"));
                    InitialState::Ground
                }
            }
        }
        Some(_) => {
            issues.push("initial", "expected a table");
            InitialState::Ground
        }
    };

    let turn_on = match t.get("turn_on") {
        None => TurnOn {
            alpha: 0.0,
            mode: TurnOnMode::Erf,
        },
        Some(Value::Table(tt)) => {
            let alpha = tt
                .get("alpha")
                .and_then(|v| number(v, "turn_on.alpha", &mut issues))
                .unwrap_or(0.0);
            if !(alpha >= 0.0) || !alpha.is_finite() {
                issues.push("turn_on.alpha", "α must be a finite number ≥ 0");
            }
            let mode = match tt.get("mode").and_then(|v| string(v, "turn_on.mode", &mut issues)) {
                None | Some("erf") => TurnOnMode::Erf,
                Some("linear") => TurnOnMode::Linear,
                Some(other) => {
                    issues.push("turn_on.mode", format!("unknown mode `{other}` (erf | linear)"));
                    TurnOnMode::Erf
                }
            };
            TurnOn { alpha, mode }
        }
        Some(_) => {
            issues.push("turn_on", "expected a table");
            TurnOn {
                alpha: 0.0,
                mode: TurnOnMode::Erf,
            }
        }
    };

    let light_off: Vec<String> = match t.get("light_off") {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .enumerate()
            .filter_map(|(i, v)| string(v, &format!("light_off[{i}]"), &mut issues).map(String::from))
            .collect(),
        Some(_) => {
            issues.push("light_off", "expected an array of site labels");
            Vec::new()
        }
    };

    let output_basis = match t.get("output_basis").map(|v| string(v, "output_basis", &mut issues)) {
        None | Some(Some("exciton")) => Basis::Exciton,
        Some(Some("site")) => Basis::Site,
        Some(Some(other)) => {
            issues.push("output_basis", format!("unknown basis `{other}` (exciton | site)"));
            Basis::Exciton
        }
        Some(None) => Basis::Exciton,
    };

    let mut elements = Vec::new();
    match t.get("elements") {
        None => {}
        Some(Value::Array(a)) => {
            for (i, e) in a.iter().enumerate() {
                let f = format!("elements[{i}]");
                match e.as_array().map(|p| p.as_slice()) {
                    Some([x, y]) => {
                        if let (Some(x), Some(y)) = (index(x, &f, &mut issues), index(y, &f, &mut issues)) {
                            elements.push((x, y));
                        }
                    }
                    _ => issues.push(f, "expected a pair [a, b]"),
                }
            }
        }
        Some(_) => issues.push("elements", "expected an array of [a, b] pairs"),
    }

    let Some(model) = model else {
        return Err(Error::Validation(issues.0));
    };
    let cfg = ScenarioConfig {
        model,
        chromophore,
        chromophores,
        couplings,
        reorganization,
        cutoff,
        phonon_temperature,
        radiation,
        radiation_temperature,
        dipole_scale,
        time,
        initial,
        turn_on,
        light_off,
        output_basis,
        elements,
    };

    let labels = cfg.site_labels();
    let n = labels.len();
    let dim = 1usize << n.min(20);
    if n > crate::model::MAX_SITES {
        issues.push("chromophores", format!("at most {} sites", crate::model::MAX_SITES));
    }
    for (i, l) in cfg.light_off.iter().enumerate() {
        if !labels.contains(l) {
            issues.push(format!("light_off[{i}]"), format!("unknown site `{l}`"));
        }
    }
    if let Couplings::Explicit(list) = &cfg.couplings {
        let mut pairs = BTreeSet::new();
        for (i, c) in list.iter().enumerate() {
            for s in [&c.a, &c.b] {
                if !labels.contains(s) {
                    issues.push(format!("couplings[{i}].sites"), format!("unknown site `{s}`"));
                }
            }
            let key = if c.a < c.b { (c.a.clone(), c.b.clone()) } else { (c.b.clone(), c.a.clone()) };
            if !pairs.insert(key) {
                issues.push(format!("couplings[{i}]"), "pair given twice");
            }
        }
    }
    match &cfg.initial {
        InitialState::Eigenstate(k) if *k > dim => {
            issues.push("initial.index", format!("eigenstate {k} exceeds dimension {dim}"))
        }
        InitialState::Site(j) if *j > n => issues.push("initial.index", format!("site {j} exceeds {n} sites")),
        InitialState::Matrix { re, .. } if re.len() != dim => issues.push(
            "initial.re",
            format!("matrix is {}×{} but the state space is {dim}×{dim}", re.len(), re.len()),
        ),
        _ => {}
    }
    for (i, &(a, b)) in cfg.elements.iter().enumerate() {
        if a > dim || b > dim {
            issues.push(format!("elements[{i}]"), format!("index exceeds dimension {dim}"));
        }
    }

    if issues.0.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(issues.0))
    }
}

fn req<'a>(t: &'a Table, prefix: &str, key: &str, issues: &mut Issues) -> Option<&'a Value> {
    let v = t.get(key);
    if v.is_none() {
        issues.push(join(prefix, key), "required");
    }
    v
}

fn opt_quantity(t: &Table, prefix: &str, key: &str, dim: Dimension, default: f64, issues: &mut Issues) -> f64 {
    match t.get(key) {
        None => default,
        Some(v) => quantity(v, &join(prefix, key), dim, issues).unwrap_or(default),
    }
}
