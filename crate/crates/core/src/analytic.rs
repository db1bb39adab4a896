//! Two-level closed forms used as oracles for the numerical engine, regime
//! classification and dimer rate estimates.
//!
//! Two-level states are ordered as the exciton basis orders them: index 0 = |e⟩,
//! index 1 = |g⟩.

use faer::c64;
use serde::Serialize;

use crate::bath::{coth_half, reduced_frequency, Blackbody, DrudeLorentz};
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, diagonalize, AggregateModel, Chromophore, ExcitonBasis};
use crate::redfield::{assemble_tensor, build_channels, liouvillian, Liouvillian, RedfieldTensor};
use crate::units::thermal_frequency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelParams {
    /// ω_eg in rad/ps.
    pub omega: f64,
    /// μ_eg in C·m.
    pub dipole: f64,
    pub phonon: Option<DrudeLorentz>,
    pub radiation: Option<Blackbody>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BathTag {
    Phonon,
    Radiation,
}

impl TwoLevelParams {
    pub fn new(omega: f64, dipole: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("ω_eg must be positive, got {omega}")));
        }
        Ok(TwoLevelParams {
            omega,
            dipole,
            phonon: None,
            radiation: None,
        })
    }

    pub fn with_phonon(mut self, b: DrudeLorentz) -> Self {
        self.phonon = Some(b);
        self
    }

    pub fn with_radiation(mut self, b: Blackbody) -> Self {
        self.radiation = Some(b);
        self
    }

    pub fn model(&self) -> Result<AggregateModel> {
        AggregateModel::uncoupled(vec![Chromophore::new("chromophore", self.omega, self.dipole)])
    }

    /// Numerical Liouvillian for one bath, built with the general machinery.
    pub fn liouvillian(&self, bath: BathTag) -> Result<Liouvillian> {
        let m = self.model()?;
        let basis = diagonalize(&build_hamiltonian(&m))?;
        let (p, r) = match bath {
            BathTag::Phonon => (Some(self.require_phonon()?), None),
            BathTag::Radiation => (None, Some(self.require_radiation()?)),
        };
        let ch = build_channels(&m, &basis, p.as_ref(), r.as_ref())?;
        liouvillian(&basis, &assemble_tensor(&ch, &basis)?)
    }

    fn require_phonon(&self) -> Result<DrudeLorentz> {
        self.phonon
            .ok_or_else(|| Error::Input("two-level parameters lack a phonon bath".into()))
    }

    fn require_radiation(&self) -> Result<Blackbody> {
        self.radiation
            .ok_or_else(|| Error::Input("two-level parameters lack a radiation bath".into()))
    }

    /// Relaxation constant γ of the selected bath.
    pub fn gamma(&self, bath: BathTag) -> Result<f64> {
        match bath {
            BathTag::Phonon => Ok(gamma_tb_closed_form(&self.require_phonon()?)),
            BathTag::Radiation => Ok(gamma_bb_closed_form(self.omega, self.dipole, &self.require_radiation()?)),
        }
    }
}

/// γ = (μ²ω³/3πε₀ħc³)·coth(ħω/2k_BT), in 1/ps.
pub fn gamma_bb_closed_form(omega: f64, dipole: f64, bath: &Blackbody) -> f64 {
    if dipole == 0.0 {
        return 0.0;
    }
    dipole * dipole * bath.spectral_weight(omega) * coth_half(reduced_frequency(omega, bath.temperature))
}

/// High-temperature form of the radiative rate, 2μ²ω²k_BT/(3πε₀ħ²c³).
pub fn gamma_bb_high_temperature(omega: f64, dipole: f64, bath: &Blackbody) -> f64 {
    dipole * dipole * bath.spectral_weight(omega) * 2.0 * thermal_frequency(bath.temperature) / omega
}

/// Γ_{ee,ee}(0) = 2Λk_BT/(ħ²λ).
pub fn gamma_tb_closed_form(bath: &DrudeLorentz) -> f64 {
    bath.zero_frequency_rate()
}

/// Stationary excited population of the radiative two-level system, (coth − 1)/(2 coth).
pub fn radiative_stationary_population(omega: f64, bath: &Blackbody) -> f64 {
    let c = coth_half(reduced_frequency(omega, bath.temperature));
    (c - 1.0) / (2.0 * c)
}

pub fn two_level_eigenvalues(params: &TwoLevelParams, bath: BathTag) -> Result<[c64; 4]> {
    let w = params.omega;
    let g = params.gamma(bath)?;
    Ok(match bath {
        BathTag::Phonon => [
            c64::new(0.0, 0.0),
            c64::new(0.0, 0.0),
            c64::new(-g, w),
            c64::new(-g, -w),
        ],
        BathTag::Radiation => {
            let s = w * w - g * g;
            let (p, m) = if s >= 0.0 {
                (c64::new(-g, s.sqrt()), c64::new(-g, -s.sqrt()))
            } else {
                (c64::new(-g + (-s).sqrt(), 0.0), c64::new(-g - (-s).sqrt(), 0.0))
            };
            [c64::new(0.0, 0.0), c64::new(-2.0 * g, 0.0), p, m]
        }
    })
}

/// Largest distance between two spectra after greedy nearest matching, relative to
/// the spectral radius of `expected`.
pub fn spectral_mismatch(expected: &[c64], got: &[c64]) -> f64 {
    let scale = expected.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut free: Vec<bool> = vec![true; got.len()];
    let mut worst = 0.0f64;
    for e in expected {
        let mut best = (f64::INFINITY, usize::MAX);
        for (k, g) in got.iter().enumerate() {
            if free[k] {
                let d = (e - g).norm();
                if d < best.0 {
                    best = (d, k);
                }
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        free[best.1] = false;
        worst = worst.max(best.0 / scale);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Excited,
    Ground,
}

impl Level {
    fn index(self) -> usize {
        match self {
            Level::Excited => 0,
            Level::Ground => 1,
        }
    }
}

/// Two-level dynamical map with χ_{ab,cd} at [a·2 + b][c·2 + d].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelMap {
    pub entries: [[c64; 4]; 4],
}

impl TwoLevelMap {
    pub fn element(&self, a: Level, b: Level, c: Level, d: Level) -> c64 {
        self.entries[a.index() * 2 + b.index()][c.index() * 2 + d.index()]
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> c64 {
        self.entries[a * 2 + b][c * 2 + d]
    }
}

/// e^{−γt}·(cos ϖt, sin(ϖt)/ϖ) for ϖ² = s, valid on both sides of s = 0.
fn damped_pair(s: f64, g: f64, t: f64) -> (f64, f64) {
    let x = s * t * t;
    if x.abs() < 1e-6 {
        let decay = (-g * t).exp();
        let c = 1.0 - x / 2.0 + x * x / 24.0;
        let sn = t * (1.0 - x / 6.0 + x * x / 120.0);
        (decay * c, decay * sn)
    } else if s > 0.0 {
        let w = s.sqrt();
        let decay = (-g * t).exp();
        (decay * (w * t).cos(), decay * (w * t).sin() / w)
    } else {
        let k = (-s).sqrt();
        let up = ((k - g) * t).exp();
        let down = ((-k - g) * t).exp();
        (0.5 * (up + down), 0.5 * (up - down) / k)
    }
}

pub fn chi_closed_form(params: &TwoLevelParams, bath: BathTag, t: f64) -> Result<TwoLevelMap> {
    let w = params.omega;
    let g = params.gamma(bath)?;
    let z = c64::new(0.0, 0.0);
    let one = c64::new(1.0, 0.0);
    let mut e = [[z; 4]; 4];
    const EE: usize = 0;
    const EG: usize = 1;
    const GE: usize = 2;
    const GG: usize = 3;
    match bath {
        BathTag::Phonon => {
            e[EE][EE] = one;
            e[GG][GG] = one;
            let decay = (-g * t).exp();
            e[EG][EG] = c64::new(0.0, -w * t).exp() * decay;
            e[GE][GE] = c64::new(0.0, w * t).exp() * decay;
        }
        BathTag::Radiation => {
            let p = radiative_stationary_population(w, &params.require_radiation()?);
            let relax = (-2.0 * g * t).exp();
            e[EE][EE] = c64::new(p + (1.0 - p) * relax, 0.0);
            e[EE][GG] = c64::new(p * (1.0 - relax), 0.0);
            e[GG][GG] = c64::new(1.0 - p + p * relax, 0.0);
            e[GG][EE] = c64::new((1.0 - p) * (1.0 - relax), 0.0);
            let (c, s) = damped_pair(w * w - g * g, g, t);
            e[EG][EG] = c64::new(c, -w * s);
            e[GE][GE] = c64::new(c, w * s);
            e[EG][GE] = c64::new(g * s, 0.0);
            e[GE][EG] = c64::new(g * s, 0.0);
        }
    }
    Ok(TwoLevelMap { entries: e })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Coherent,
    Incoherent,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub gamma: f64,
    pub omega: f64,
    /// ϖ = √(ω² − γ²), imaginary in the incoherent regime.
    pub varpi: c64,
    /// ζ = ϖ/ω.
    pub zeta: c64,
}

pub fn classify_regime(omega: f64, gamma: f64) -> Result<RegimeReport> {
    if !(omega >= 0.0) || !(gamma >= 0.0) {
        return Err(Error::Domain(format!(
            "regime needs ω, γ ≥ 0 (got ω = {omega}, γ = {gamma})"
        )));
    }
    let s = omega * omega - gamma * gamma;
    let regime = if (omega - gamma).abs() < 1e-9 * omega {
        Regime::Critical
    } else if s > 0.0 {
        Regime::Coherent
    } else {
        Regime::Incoherent
    };
    let varpi = if s >= 0.0 {
        c64::new(s.sqrt(), 0.0)
    } else {
        c64::new(0.0, (-s).sqrt())
    };
    let zeta = if omega > 0.0 { varpi / omega } else { c64::new(0.0, 0.0) };
    Ok(RegimeReport {
        regime,
        gamma,
        omega,
        varpi,
        zeta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimerRates {
    /// R^bb_{ee',ee'}, the coherence decay estimate.
    pub gamma_estimate: f64,
    /// 2R^bb_{ee',ee'}, the transfer estimate.
    pub transfer_estimate: f64,
    /// ω_{ee'} in rad/ps.
    pub omega: f64,
}

/// Radiative tensor of a model, with its exciton basis.
pub fn radiative_tensor(model: &AggregateModel, bath: &Blackbody) -> Result<(ExcitonBasis, RedfieldTensor)> {
    let basis = diagonalize(&build_hamiltonian(model))?;
    let ch = build_channels(model, &basis, None, Some(bath))?;
    let t = assemble_tensor(&ch, &basis)?;
    Ok((basis, t))
}

pub fn dimer_rate_estimates(model: &AggregateModel, bath: &Blackbody) -> Result<DimerRates> {
    if model.n_sites() != 2 {
        return Err(Error::Model(format!(
            "dimer estimates need 2 sites, got {}",
            model.n_sites()
        )));
    }
    let (basis, t) = radiative_tensor(model, bath)?;
    let single = basis.manifold(1);
    let (e, ep) = (single[0], single[1]);
    let r = t.get(e, ep, e, ep);
    Ok(DimerRates {
        gamma_estimate: r,
        transfer_estimate: 2.0 * r,
        omega: basis.transition(e, ep),
    })
}

/// The Liouvillian eigenvalue whose eigenvector carries the most weight on ρ_ab.
pub fn coherence_eigenvalue(basis: &crate::dynamics::DampingBasis, a: usize, b: usize) -> c64 {
    let d = basis.dimension();
    let row = a * d + b;
    let mut best = (0.0, 0usize);
    for k in 0..d * d {
        let w = basis.vectors()[(row, k)].norm() * basis.inverse()[(k, row)].norm();
        if w > best.0 {
            best = (w, k);
        }
    }
    basis.eigenvalues()[best.1]
}
