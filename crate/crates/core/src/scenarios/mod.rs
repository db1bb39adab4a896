//! Model catalog and experiment runners.

pub mod builtin;
pub mod figures;
pub mod observables;
pub mod turnon;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bath::{Blackbody, DrudeLorentz};
use crate::config::{Couplings, InitialState, ModelId, ScenarioConfig};
use crate::dynamics::{propagate, propagate_timedep, StepOptions, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{CMat, ZERO};
use crate::model::{build_hamiltonian, diagonalize, AggregateModel, Basis, Chromophore, ExcitonBasis};
use crate::redfield::{build_channels, ChannelKind, CouplingChannel, Liouvillian, LiouvillianTemplate};
use faer::c64;

pub use turnon::{erf_schedule, TurnOnSchedule};

/// The physical model a config describes.
pub fn build_model(cfg: &ScenarioConfig) -> Result<AggregateModel> {
    let chromophores: Vec<Chromophore> = match cfg.model {
        ModelId::SingleChromophore => vec![builtin::chromophore(&cfg.chromophore)?],
        ModelId::DbvDimer => builtin::DIMER_SITES
            .iter()
            .map(|l| builtin::chromophore(l))
            .collect::<Result<_>>()?,
        ModelId::Pc645 => builtin::labels().map(builtin::chromophore).collect::<Result<_>>()?,
        ModelId::Custom => cfg
            .chromophores
            .iter()
            .map(|c| Chromophore::new(c.label.clone(), c.energy, c.dipole))
            .collect(),
    };
    let labels: Vec<&str> = chromophores.iter().map(|c| c.label.as_str()).collect();
    let couplings = match &cfg.couplings {
        Couplings::Absent if cfg.model.needs_couplings() => {
            return Err(Error::Config(
                "couplings are required for this model and have no published values; \
                 supply them or opt into the placeholder set"
                    .into(),
            ))
        }
        Couplings::Absent => Vec::new(),
        Couplings::Placeholder => builtin::placeholder_couplings(&labels),
        Couplings::Explicit(list) => list.iter().map(|c| (c.a.clone(), c.b.clone(), c.value)).collect(),
    };
    let mask: Vec<bool> = labels.iter().map(|l| !cfg.light_off.iter().any(|o| o == l)).collect();
    builtin::assemble(chromophores, &couplings)?
        .with_dipoles_scaled(cfg.dipole_scale)
        .with_light_mask(mask)
}

/// Density matrix in the exciton basis.
pub fn initial_state(cfg: &InitialState, model: &AggregateModel, basis: &ExcitonBasis) -> Result<CMat> {
    let d = basis.dimension();
    let pure = |k: usize| CMat::from_fn(d, d, |i, j| if i == k && j == k { c64::new(1.0, 0.0) } else { ZERO });
    match cfg {
        InitialState::Ground => Ok(pure(basis.ground_state())),
        InitialState::Eigenstate(k) => {
            if *k == 0 || *k > d {
                return Err(Error::Input(format!("eigenstate {k} outside 1..={d}")));
            }
            Ok(pure(k - 1))
        }
        InitialState::Site(j) => {
            if *j == 0 || *j > model.n_sites() {
                return Err(Error::Input(format!("site {j} outside 1..={}", model.n_sites())));
            }
            let s = 1usize << (j - 1);
            let u = basis.vectors();
            Ok(CMat::from_fn(d, d, |a, b| c64::new(u[(s, a)] * u[(s, b)], 0.0)))
        }
        InitialState::Matrix { re, im } => {
            if re.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: re.len(),
                });
            }
            let m = CMat::from_fn(d, d, |i, j| c64::new(re[i][j], im[i][j]));
            crate::dynamics::validate_density(&m)?;
            Ok(m)
        }
    }
}

/// Label of basis state `k`: e1…e2ᴺ in the exciton basis, excited site labels joined by
/// `+` (or `g`) in the site basis.
pub fn state_label(model: &AggregateModel, basis: Basis, k: usize) -> String {
    match basis {
        Basis::Exciton => format!("e{}", k + 1),
        Basis::Site => {
            let names: Vec<&str> = (0..model.n_sites())
                .filter(|j| k & (1 << j) != 0)
                .map(|j| model.chromophores()[j].label.as_str())
                .collect();
            if names.is_empty() {
                "g".into()
            } else {
                names.join("+")
            }
        }
    }
}

/// Single-excitation states of the chosen basis (0-based).
pub fn single_excitation_states(model: &AggregateModel, exciton: &ExcitonBasis, basis: Basis) -> Vec<usize> {
    match basis {
        Basis::Exciton => exciton.manifold(1),
        Basis::Site => (0..model.n_sites()).map(|j| 1usize << j).collect(),
    }
}

/// Populations then upper-triangle coherences of the given states.
pub fn manifold_elements(states: &[usize]) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let pops = states.iter().map(|&k| (k, k)).collect();
    let mut coh = Vec::new();
    for (i, &a) in states.iter().enumerate() {
        for &b in &states[i + 1..] {
            coh.push((a, b));
        }
    }
    (pops, coh)
}

#[derive(Debug, Serialize)]
struct HashedModel<'a> {
    labels: Vec<&'a str>,
    site_energies: Vec<f64>,
    dipoles: Vec<f64>,
    light_mask: &'a [bool],
    couplings: &'a [Vec<f64>],
    reorganization: &'a [f64],
    cutoff: f64,
    phonon_temperature: f64,
    radiation: bool,
    radiation_temperature: f64,
}

/// An executable run: model, exciton basis, baths and initial state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: AggregateModel,
    pub basis: ExcitonBasis,
    pub rho0: CMat,
}

pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    let model = build_model(cfg)?;
    let basis = diagonalize(&build_hamiltonian(&model))?;
    let rho0 = initial_state(&cfg.initial, &model, &basis)?;
    Ok(Scenario {
        config: cfg.clone(),
        model,
        basis,
        rho0,
    })
}

/// One trajectory per Λ value.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub reorganization: f64,
    pub trajectory: Trajectory,
}

impl Scenario {
    pub fn phonon_bath(&self, reorganization: f64) -> Result<Option<DrudeLorentz>> {
        if reorganization == 0.0 {
            return Ok(None);
        }
        DrudeLorentz::new(reorganization, self.config.cutoff, self.config.phonon_temperature).map(Some)
    }

    pub fn radiation_bath(&self) -> Result<Option<Blackbody>> {
        if !self.config.radiation {
            return Ok(None);
        }
        Blackbody::new(self.config.radiation_temperature).map(Some)
    }

    pub fn channels(&self, reorganization: f64) -> Result<Vec<CouplingChannel>> {
        build_channels(
            &self.model,
            &self.basis,
            self.phonon_bath(reorganization)?.as_ref(),
            self.radiation_bath()?.as_ref(),
        )
    }

    /// Phonon channels fixed, radiation channel rescalable.
    pub fn template(&self, reorganization: f64) -> Result<LiouvillianTemplate> {
        let (rad, fixed): (Vec<_>, Vec<_>) = self
            .channels(reorganization)?
            .into_iter()
            .partition(|c| c.kind() == ChannelKind::Radiation);
        LiouvillianTemplate::new(self.basis.clone(), &fixed, rad)
    }

    pub fn liouvillian(&self, reorganization: f64) -> Result<Liouvillian> {
        Ok(self.template(reorganization)?.full().clone())
    }

    pub fn times(&self) -> Vec<f64> {
        self.config.time.points()
    }

    /// Exciton-basis trajectory for one Λ.
    pub fn run_one(&self, reorganization: f64) -> Result<Trajectory> {
        let times = self.times();
        let tpl = self.template(reorganization)?;
        let alpha = self.config.turn_on.alpha;
        let mut traj = if alpha > 0.0 && self.config.radiation {
            let sched = TurnOnSchedule::new(&tpl, alpha, self.config.turn_on.mode)?;
            propagate_timedep(&self.rho0, &sched, &times, StepOptions::default())?
        } else {
            propagate(&self.rho0, tpl.full(), &times)?
        };
        traj.metadata.insert("reorganization_rad_per_ps".into(), format!("{reorganization:e}"));
        Ok(traj)
    }

    /// All Λ values, run concurrently; results keep the config order.
    pub fn run(&self) -> Result<Vec<RunResult>> {
        let lambdas = self.config.reorganization.clone();
        let results: Vec<Result<Trajectory>> = std::thread::scope(|s| {
            let handles: Vec<_> = lambdas.iter().map(|&l| s.spawn(move || self.run_one(l))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("worker panicked".into()))))
                .collect()
        });
        lambdas
            .into_iter()
            .zip(results)
            .map(|(l, r)| {
                r.map(|trajectory| RunResult {
                    reorganization: l,
                    trajectory,
                })
            })
            .collect()
    }

    /// Elements to report, 0-based, in the output basis.
    pub fn elements(&self) -> Vec<(usize, usize)> {
        if self.config.elements.is_empty() {
            let states = single_excitation_states(&self.model, &self.basis, self.config.output_basis);
            let (mut p, c) = manifold_elements(&states);
            p.extend(c);
            p
        } else {
            self.config.elements.iter().map(|&(a, b)| (a - 1, b - 1)).collect()
        }
    }

    /// SHA-256 of the physical model and bath parameters.
    pub fn model_hash(&self) -> String {
        let m = &self.model;
        let h = HashedModel {
            labels: m.chromophores().iter().map(|c| c.label.as_str()).collect(),
            site_energies: m.chromophores().iter().map(|c| c.site_energy).collect(),
            dipoles: m.chromophores().iter().map(|c| c.dipole).collect(),
            light_mask: m.light_mask(),
            couplings: m.couplings(),
            reorganization: &self.config.reorganization,
            cutoff: self.config.cutoff,
            phonon_temperature: self.config.phonon_temperature,
            radiation: self.config.radiation,
            radiation_temperature: self.config.radiation_temperature,
        };
        let json = serde_json::to_vec(&h).unwrap_or_default();
        hex(&Sha256::digest(&json))
    }

    /// Site label ↔ site-basis state index ↔ projector label ε_k.
    pub fn site_map(&self) -> serde_json::Value {
        let n = self.model.n_sites();
        let d = 1usize << n;
        let entries: Vec<serde_json::Value> = (0..n)
            .map(|j| {
                serde_json::json!({
                    "site": self.model.chromophores()[j].label,
                    "state_index": (1usize << j) + 1,
                    "projector_label": format!("ε{}", d - (1usize << (n - 1 - j))),
                })
            })
            .collect();
        serde_json::Value::Array(entries)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_str;
    use crate::linalg::trace;

    fn pc645() -> Scenario {
        build_scenario(&parse_str("model = \"pc645\"\ncouplings = \"placeholder\"").unwrap()).unwrap()
    }

    #[test]
    fn pc645_labels() {
        let s = pc645();
        assert_eq!(s.basis.manifold(1), vec![11, 12, 13, 14]);
        assert_eq!(s.basis.ground_state(), 15);
        let map = s.site_map();
        let eps: Vec<&str> = map.as_array().unwrap().iter().map(|e| e["projector_label"].as_str().unwrap()).collect();
        assert_eq!(eps, ["ε8", "ε12", "ε14", "ε15"]);
        assert_eq!(state_label(&s.model, Basis::Site, 0b0101), "MBVa+DBVc");
        assert_eq!(state_label(&s.model, Basis::Exciton, 12), "e13");
    }

    #[test]
    fn initial_states() {
        let s = pc645();
        let g = initial_state(&InitialState::Ground, &s.model, &s.basis).unwrap();
        assert_eq!(g[(15, 15)], c64::new(1.0, 0.0));
        let e = initial_state(&InitialState::Eigenstate(13), &s.model, &s.basis).unwrap();
        assert_eq!(e[(12, 12)], c64::new(1.0, 0.0));
        let site = initial_state(&InitialState::Site(3), &s.model, &s.basis).unwrap();
        assert!((trace(&site) - c64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(initial_state(&InitialState::Eigenstate(17), &s.model, &s.basis).is_err());
    }

    #[test]
    fn light_mask_removes_dipoles() {
        let cfg = parse_str("model = \"pc645\"\ncouplings = \"placeholder\"\nlight_off = [\"MBVa\", \"MBVb\"]").unwrap();
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.light_mask(), &[false, false, true, true]);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = pc645();
        let b = pc645();
        assert_eq!(a.model_hash(), b.model_hash());
        assert_eq!(a.model_hash().len(), 64);
        let c = build_scenario(
            &parse_str("model = \"pc645\"\ncouplings = \"placeholder\"\nreorganization = [\"13 cm^-1\"]").unwrap(),
        )
        .unwrap();
        assert_ne!(a.model_hash(), c.model_hash());
    }

    #[test]
    fn default_elements() {
        let s = pc645();
        let e = s.elements();
        assert_eq!(e.len(), 10);
        assert_eq!(e[0], (11, 11));
        assert_eq!(e[4], (11, 12));
    }
}
