//! Phonon rate against time-domain quadrature of the Drude–Lorentz correlation function.
//!
//! C(t) for t ≥ 0 is evaluated from its Matsubara expansion and Re ∫₀^∞ C(t)e^{iωt} dt is
//! integrated numerically on graded panels; the Matsubara tail beyond the explicit terms
//! enters through its exact time integral.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sunlit::bath::DrudeLorentz;
use sunlit::units::{thermal_frequency, wavenumber};

const EXPLICIT_TERMS: usize = 100;
const TAIL_TERMS: usize = 2_000_000;

fn quadrature_rate(bath: &DrudeLorentz, omega: f64) -> f64 {
    let big = bath.reorganization;
    let lam = bath.cutoff;
    let theta = thermal_frequency(bath.temperature);
    let cot = 1.0 / (lam / (2.0 * theta)).tan();
    let nu = |k: usize| 2.0 * PI * k as f64 * theta;
    let weight = |k: usize| 4.0 * big * lam * theta * nu(k) / (nu(k).powi(2) - lam * lam);

    let integrand = |t: f64| {
        let (s, c) = (omega * t).sin_cos();
        let mut v = big * lam * (-lam * t).exp() * (cot * c + s);
        for k in 1..=EXPLICIT_TERMS {
            v += weight(k) * (-nu(k) * t).exp() * c;
        }
        v
    };

    let gl = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let wide = (0.25 * 2.0 * PI / omega.max(1.0)).min(0.1 / lam);
    let end = 50.0 / lam;
    let mut a = 0.0;
    let mut w = 0.1 / nu(EXPLICIT_TERMS);
    let mut total = 0.0;
    while a < end {
        let b = (a + w).min(end);
        total += gl.integrate(a, b, integrand);
        a = b;
        w = (2.0 * w).min(wide);
    }

    let mut tail = 0.0;
    for k in (EXPLICIT_TERMS + 1..=TAIL_TERMS).rev() {
        tail += weight(k) * nu(k) / (nu(k).powi(2) + omega * omega);
    }
    tail += 4.0 * big * lam * theta / (2.0 * PI * theta).powi(2) / TAIL_TERMS as f64;
    total + tail
}

#[test]
fn closed_form_matches_time_domain_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let bath = DrudeLorentz::new(
            wavenumber(rng.random_range(1.0..200.0)),
            wavenumber(rng.random_range(20.0..500.0)),
            rng.random_range(150.0..600.0),
        )
        .unwrap();
        let omega = rng.random_range(0.0..400.0);
        let want = quadrature_rate(&bath, omega);
        let got = bath.gamma_real(omega);
        assert!(((got - want) / want).abs() < 1e-6, "ω={omega} {bath:?}: {got} vs {want}");
    }
}

#[test]
fn zero_frequency_limit_by_quadrature() {
    let bath = DrudeLorentz::new(wavenumber(13.0), wavenumber(100.0), 300.0).unwrap();
    let q = quadrature_rate(&bath, 0.0);
    assert!(((bath.zero_frequency_rate() - q) / q).abs() < 1e-6);
    assert!(((bath.gamma_real(0.0) - q) / q).abs() < 1e-6);
}

#[test]
fn negative_frequency_obeys_detailed_balance_by_quadrature() {
    let bath = DrudeLorentz::new(wavenumber(35.0), wavenumber(100.0), 300.0).unwrap();
    let w = 150.0;
    let ratio = quadrature_rate(&bath, -w) / quadrature_rate(&bath, w);
    let boltzmann = (-w / thermal_frequency(300.0)).exp();
    assert!((ratio / boltzmann - 1.0).abs() < 1e-6, "{ratio} vs {boltzmann}");
}
