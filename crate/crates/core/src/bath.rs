//! Spectral weights, thermal factors and the real rate functions γ(ω).
//!
//! All frequencies are rad/ps. γ(ω) is half the full Fourier transform of the bath
//! correlation function, so ω > 0 carries the emission weight coth + 1 and ω < 0 the
//! absorption weight coth − 1.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::{thermal_frequency, CODATA, PS_PER_S};

const SERIES_THRESHOLD: f64 = 1e-6;

/// x/(1 − e^{−x}) = ½x[coth(x/2) + 1], with the removable singularity at 0 handled by series.
fn detailed_balance_weight(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        1.0 + 0.5 * x + x * x / 12.0
    } else {
        -x / (-x).exp_m1()
    }
}

/// coth(x/2).
pub fn coth_half(x: f64) -> f64 {
    1.0 / (0.5 * x).tanh()
}

/// ħω/k_BT for ω in rad/ps.
pub fn reduced_frequency(omega: f64, temperature: f64) -> f64 {
    omega / thermal_frequency(temperature)
}

/// Mean thermal occupation 1/(e^{βħω} − 1).
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "bose occupation needs ω > 0, got {omega}"
        )));
    }
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "bose occupation needs T > 0, got {temperature}"
        )));
    }
    Ok(1.0 / reduced_frequency(omega, temperature).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalFactors {
    /// 1/k_BT in 1/J.
    pub beta: f64,
    /// ħ/k_BT in ps.
    pub coherence_time: f64,
}

impl ThermalFactors {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
        }
        Ok(ThermalFactors {
            beta: 1.0 / (CODATA.k_boltzmann * temperature),
            coherence_time: 1.0 / thermal_frequency(temperature),
        })
    }
}

/// Drude–Lorentz phonon bath. Λ and λ are stored as angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrudeLorentz {
    pub reorganization: f64,
    pub cutoff: f64,
    pub temperature: f64,
}

impl DrudeLorentz {
    pub fn new(reorganization: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        if !(reorganization >= 0.0) || !reorganization.is_finite() {
            return Err(Error::Domain(format!("reorganization energy must be ≥ 0, got {reorganization}")));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::Domain(format!("cutoff must be > 0, got {cutoff}")));
        }
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::Domain(format!("temperature must be > 0, got {temperature}")));
        }
        Ok(DrudeLorentz {
            reorganization,
            cutoff,
            temperature,
        })
    }

    /// ω²J(ω) = 2λΛω/(ω² + λ²), odd in ω.
    pub fn spectral_weight(&self, omega: f64) -> f64 {
        2.0 * self.cutoff * self.reorganization * omega / (omega * omega + self.cutoff * self.cutoff)
    }

    pub fn gamma_real(&self, omega: f64) -> f64 {
        let theta = thermal_frequency(self.temperature);
        let lorentz = 2.0 * self.cutoff * self.reorganization / (omega * omega + self.cutoff * self.cutoff);
        lorentz * theta * detailed_balance_weight(omega / theta)
    }

    /// γ(0) = 2Λk_BT/(ħ²λ).
    pub fn zero_frequency_rate(&self) -> f64 {
        2.0 * self.reorganization * thermal_frequency(self.temperature) / self.cutoff
    }
}

/// Rate prefactor ω³/(3πε₀ħc³) per unit dipole², with ω in rad/ps, μ in C·m, result in 1/ps.
pub fn radiative_prefactor() -> f64 {
    let si = 1.0 / (3.0 * PI * CODATA.epsilon0 * CODATA.hbar * CODATA.c_light.powi(3));
    // ω³ carries (1/ps)³ = 1e36 (1/s)³; the rate comes back in 1/s
    si * PS_PER_S.powi(3) / PS_PER_S
}

/// Blackbody radiation at temperature T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Blackbody {
    pub temperature: f64,
}

impl Blackbody {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::Domain(format!("temperature must be > 0, got {temperature}")));
        }
        Ok(Blackbody { temperature })
    }

    /// Spontaneous-emission weight per unit dipole², odd and cubic in ω.
    pub fn spectral_weight(&self, omega: f64) -> f64 {
        radiative_prefactor() * omega.powi(3)
    }

    /// Per unit dipole²; multiply by μ² (C·m)² for a rate in 1/ps.
    pub fn gamma_real(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return 0.0;
        }
        let theta = thermal_frequency(self.temperature);
        radiative_prefactor() * omega * omega * theta * detailed_balance_weight(omega / theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spectrum {
    DrudeLorentz(DrudeLorentz),
    Blackbody(Blackbody),
}

impl Spectrum {
    pub fn gamma_real(&self, omega: f64) -> f64 {
        match self {
            Spectrum::DrudeLorentz(b) => b.gamma_real(omega),
            Spectrum::Blackbody(b) => b.gamma_real(omega),
        }
    }
}
