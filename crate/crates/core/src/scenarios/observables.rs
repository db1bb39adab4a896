//! Summaries of trajectory elements: peak amplitude, envelope decay, oscillation
//! frequency and stationary value.

use faer::c64;
use serde::Serialize;

use crate::dynamics::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub value: f64,
    /// RMS residual of the fit (log units for decay, relative spacing scatter for frequency).
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitOutcome {
    Fit(Fit),
    Degenerate { reason: String },
}

impl FitOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            FitOutcome::Fit(f) => Some(f.value),
            FitOutcome::Degenerate { .. } => None,
        }
    }

    fn degenerate(reason: impl Into<String>) -> Self {
        FitOutcome::Degenerate { reason: reason.into() }
    }
}

/// Ordinary least squares y = a + b·x; returns (a, b, rms residual).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / n as f64).sqrt();
    Some((a, b, rms))
}

/// Local maxima of |y|, the envelope samples of an oscillating signal.
fn envelope(t: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut et = Vec::new();
    let mut ey = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        let (a, b, c) = (y[i - 1].abs(), y[i].abs(), y[i + 1].abs());
        if b > a && b >= c {
            et.push(t[i]);
            ey.push(b);
        }
    }
    (et, ey)
}

/// Decay rate γ of |y| ~ e^{−γt}, from a log-linear regression.
///
/// Real signals that change sign are reduced to their envelope first.
pub fn fit_decay(t: &[f64], y: &[f64]) -> FitOutcome {
    if t.len() != y.len() || t.len() < 3 {
        return FitOutcome::degenerate("fewer than 3 samples");
    }
    let first = y[0];
    if y.iter().all(|v| *v == first) {
        return if first == 0.0 {
            FitOutcome::degenerate("identically zero signal")
        } else {
            FitOutcome::Fit(Fit {
                value: 0.0,
                residual: 0.0,
                points: y.len(),
            })
        };
    }
    let oscillates = y.windows(2).any(|w| w[0] * w[1] < 0.0);
    let (ft, fy) = if oscillates { envelope(t, y) } else { (t.to_vec(), y.iter().map(|v| v.abs()).collect()) };
    let keep: Vec<(f64, f64)> = ft.into_iter().zip(fy).filter(|(_, v)| *v > 0.0).map(|(a, v)| (a, v.ln())).collect();
    if keep.len() < 3 {
        return FitOutcome::degenerate("fewer than 3 positive envelope samples");
    }
    let (x, l): (Vec<f64>, Vec<f64>) = keep.into_iter().unzip();
    match linear_fit(&x, &l) {
        Some((_, b, rms)) => FitOutcome::Fit(Fit {
            value: -b,
            residual: rms,
            points: x.len(),
        }),
        None => FitOutcome::degenerate("degenerate abscissae"),
    }
}

/// Angular frequency from the spacing of zero crossings (after removing the mean).
///
/// Needs at least three full periods.
pub fn fit_frequency(t: &[f64], y: &[f64]) -> FitOutcome {
    if t.len() != y.len() || t.len() < 3 {
        return FitOutcome::degenerate("fewer than 3 samples");
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let z: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut crossings = Vec::new();
    for i in 0..z.len() - 1 {
        if z[i] == 0.0 && (i == 0 || z[i - 1] != 0.0) {
            crossings.push(t[i]);
        } else if z[i] * z[i + 1] < 0.0 {
            crossings.push(t[i] + (t[i + 1] - t[i]) * z[i] / (z[i] - z[i + 1]));
        }
    }
    if crossings.len() < 7 {
        return FitOutcome::degenerate(format!(
            "{} zero crossings; three periods need at least 7",
            crossings.len()
        ));
    }
    let gaps: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let half = (crossings[crossings.len() - 1] - crossings[0]) / gaps.len() as f64;
    let scatter = (gaps.iter().map(|g| (g - half).powi(2)).sum::<f64>() / gaps.len() as f64).sqrt() / half;
    FitOutcome::Fit(Fit {
        value: std::f64::consts::PI / half,
        residual: scatter,
        points: crossings.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementSummary {
    pub label: String,
    pub a: usize,
    pub b: usize,
    pub peak_amplitude: f64,
    pub peak_time: f64,
    pub decay: FitOutcome,
    pub frequency: FitOutcome,
    pub stationary_re: f64,
    pub stationary_im: f64,
}

/// Peak of |z| and its time.
pub fn peak(t: &[f64], z: &[c64]) -> (f64, f64) {
    let mut best = (0.0, t.first().copied().unwrap_or(0.0));
    for (ti, zi) in t.iter().zip(z) {
        if zi.norm() > best.0 {
            best = (zi.norm(), *ti);
        }
    }
    best
}

/// Decay from the modulus, frequency from the real part.
pub fn summarize(label: impl Into<String>, a: usize, b: usize, t: &[f64], z: &[c64]) -> ElementSummary {
    let (amp, at) = peak(t, z);
    let modulus: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    let re: Vec<f64> = z.iter().map(|v| v.re).collect();
    let last = z.last().copied().unwrap_or(c64::new(0.0, 0.0));
    ElementSummary {
        label: label.into(),
        a,
        b,
        peak_amplitude: amp,
        peak_time: at,
        decay: fit_decay(t, &modulus),
        frequency: if a == b {
            FitOutcome::degenerate("populations do not oscillate")
        } else {
            fit_frequency(t, &re)
        },
        stationary_re: last.re,
        stationary_im: last.im,
    }
}

pub fn observables_report(
    traj: &Trajectory,
    elements: &[(usize, usize)],
    label: impl Fn(usize) -> String,
) -> Vec<ElementSummary> {
    elements
        .iter()
        .map(|&(a, b)| {
            summarize(
                format!("{}_{}", label(a), label(b)),
                a,
                b,
                &traj.times,
                &traj.element(a, b),
            )
        })
        .collect()
}
