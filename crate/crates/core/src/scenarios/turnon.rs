//! Slow turn-on of the light–matter coupling: each dipole-allowed transition a↔b is
//! ramped by s_ab(t) = erf(|ω_ab|t/α).

use std::f64::consts::PI;

use crate::config::TurnOnMode;
use crate::dynamics::GeneratorSchedule;
use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::redfield::{LiouvillianTemplate, ScaleFactors};

/// Beyond this argument erf(x) rounds to 1 in double precision.
const ERF_SATURATION: f64 = 6.0;

pub fn erf_schedule(alpha: f64, omega: f64, t: f64, mode: TurnOnMode) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("turn-on rate needs α > 0, got {alpha}")));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let x = omega.abs() * t / alpha;
    Ok(match mode {
        TurnOnMode::Erf => {
            if x >= ERF_SATURATION {
                1.0
            } else {
                libm::erf(x)
            }
        }
        TurnOnMode::Linear => (2.0 * x / PI).min(1.0),
    })
}

fn saturation_argument(mode: TurnOnMode) -> f64 {
    match mode {
        TurnOnMode::Erf => ERF_SATURATION,
        TurnOnMode::Linear => PI / 2.0,
    }
}

/// Turn-on applied to the scalable (radiation) channels of a template.
pub struct TurnOnSchedule<'a> {
    template: &'a LiouvillianTemplate,
    alpha: f64,
    mode: TurnOnMode,
    /// |ω_ab| for dipole-allowed pairs, 0 elsewhere.
    omegas: RMat,
    resolution: f64,
    saturation: f64,
}

impl<'a> TurnOnSchedule<'a> {
    pub fn new(template: &'a LiouvillianTemplate, alpha: f64, mode: TurnOnMode) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("turn-on rate needs finite α > 0, got {alpha}")));
        }
        let basis = template.basis();
        let d = basis.dimension();
        let allowed = |a: usize, b: usize| {
            template
                .scalable_channels()
                .iter()
                .any(|c| c.operator()[(a, b)] != 0.0)
        };
        let omegas = RMat::from_fn(d, d, |a, b| {
            if a != b && allowed(a, b) {
                basis.transition(a, b).abs()
            } else {
                0.0
            }
        });
        let mut w_min = f64::INFINITY;
        let mut w_max = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let w = omegas[(a, b)];
                if w > 0.0 {
                    w_min = w_min.min(w);
                    w_max = w_max.max(w);
                }
            }
        }
        let (resolution, saturation) = if w_max > 0.0 {
            (alpha / w_max, saturation_argument(mode) * alpha / w_min)
        } else {
            (f64::INFINITY, 0.0)
        };
        Ok(TurnOnSchedule {
            template,
            alpha,
            mode,
            omegas,
            resolution,
            saturation,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl GeneratorSchedule for TurnOnSchedule<'_> {
    fn template(&self) -> &LiouvillianTemplate {
        self.template
    }

    fn scales(&self, t: f64) -> Result<ScaleFactors> {
        let d = self.omegas.nrows();
        let mut s = RMat::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let w = self.omegas[(a, b)];
                s[(a, b)] = if w > 0.0 {
                    erf_schedule(self.alpha, w, t, self.mode)?
                } else {
                    1.0
                };
            }
        }
        ScaleFactors::new(s)
    }

    fn resolution(&self) -> f64 {
        self.resolution
    }

    fn saturation_time(&self) -> Option<f64> {
        Some(self.saturation)
    }
}
