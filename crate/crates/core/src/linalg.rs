//! Small dense-matrix helpers on top of faer.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn to_complex(m: &RMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

pub fn identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

/// Row-major vectorization: element (a, b) sits at a·d + b.
pub fn vectorize(rho: &CMat) -> Vec<c64> {
    let d = rho.nrows();
    let mut v = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            v.push(rho[(a, b)]);
        }
    }
    v
}

pub fn unvectorize(v: &[c64], d: usize) -> CMat {
    CMat::from_fn(d, d, |a, b| v[a * d + b])
}

pub fn matvec(m: &CMat, v: &[c64]) -> Vec<c64> {
    let mut out = vec![ZERO; m.nrows()];
    matvec_into(m, v, &mut out);
    out
}

pub fn matvec_into(m: &CMat, v: &[c64], out: &mut [c64]) {
    let n = m.nrows();
    let k = m.ncols();
    for o in out.iter_mut() {
        *o = ZERO;
    }
    // column sweep keeps faer's column-major storage contiguous
    for j in 0..k {
        let x = v[j];
        if x == ZERO {
            continue;
        }
        let col = m.col(j);
        for i in 0..n {
            out[i] += col[i] * x;
        }
    }
}

pub fn trace(m: &CMat) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Largest entry of |M − M†|.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_inf(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    let h = CMat::from_fn(m.nrows(), m.ncols(), |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * 0.5
    });
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver failed: {e:?}")))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension {
            expected: n,
            found: a.ncols(),
        });
    }
    if !a.as_ref().is_all_finite() {
        return Err(Error::Numerical("expm of a non-finite matrix".into()));
    }
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a = CMat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize, m: &CMat| faer::Scale(c64::new(PADE13[k], 0.0)) * m;
    let u_inner = &a6 * (b(13, &a6) + b(11, &a4) + b(9, &a2)) + b(7, &a6) + b(5, &a4) + b(3, &a2) + b(1, &id);
    let u = &a * u_inner;
    let v = &a6 * (b(12, &a6) + b(10, &a4) + b(8, &a2)) + b(6, &a6) + b(4, &a4) + b(2, &a2) + b(0, &id);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.as_ref().is_all_finite() {
        return Err(Error::Numerical("expm produced non-finite entries".into()));
    }
    Ok(r)
}

/// Settings for the embedded Dormand–Prince 5(4) integrator.
#[derive(Debug, Clone, Copy)]
pub struct OdeTolerance {
    pub rtol: f64,
    pub atol: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        OdeTolerance {
            rtol: 1e-12,
            atol: 1e-14,
            min_step: 1e-16,
            max_steps: 50_000_000,
        }
    }
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates y' = f(t, y) from `times[0]`, returning y at every requested time.
pub fn dopri5<F>(mut f: F, y0: &[c64], times: &[f64], tol: OdeTolerance) -> Result<Vec<Vec<c64>>>
where
    F: FnMut(f64, &[c64], &mut [c64]),
{
    let n = y0.len();
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return Ok(out);
    }
    let mut t = times[0];
    let mut y = y0.to_vec();
    out.push(y.clone());
    let mut k: Vec<Vec<c64>> = vec![vec![ZERO; n]; 7];
    let mut tmp = vec![ZERO; n];
    let mut h = {
        f(t, &y, &mut k[0]);
        let fnorm = k[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let ynorm = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if fnorm > 0.0 {
            0.01 * (ynorm.max(tol.atol) / fnorm)
        } else {
            1e-3
        }
    };
    let mut steps = 0usize;
    for &target in &times[1..] {
        while t < target {
            if steps > tol.max_steps {
                return Err(Error::Numerical("dopri5: step budget exhausted".into()));
            }
            let last = t + h >= target;
            let hh = if last { target - t } else { h };
            f(t, &y, &mut k[0]);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = DP_A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (hh * a);
                        }
                    }
                    tmp[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                f(t + DP_C[s] * hh, &tmp, &mut tail[0]);
            }
            let mut err = 0.0f64;
            let mut ynew = vec![ZERO; n];
            for i in 0..n {
                let mut acc = y[i];
                let mut e = ZERO;
                for s in 0..7 {
                    acc += k[s][i] * (hh * DP_B[s]);
                    e += k[s][i] * (hh * DP_E[s]);
                }
                ynew[i] = acc;
                let sc = tol.atol + tol.rtol * y[i].norm().max(acc.norm());
                err = err.max(e.norm() / sc);
            }
            steps += 1;
            if err <= 1.0 {
                t = if last { target } else { t + hh };
                y = ynew;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 && last {
                h = h.max(hh);
            } else {
                h = hh * fac;
            }
            if h < tol.min_step {
                return Err(Error::Numerical(format!(
                    "dopri5: step size underflow at t = {t}"
                )));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[c64]) -> CMat {
        CMat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { ZERO })
    }

    #[test]
    fn expm_of_diagonal() {
        let d = [c64::new(-1.0, 3.0), c64::new(0.0, -40.0), c64::new(-7.0, 0.0)];
        let e = expm(&diag(&d)).unwrap();
        for i in 0..3 {
            assert!((e[(i, i)] - d[i].exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_of_nilpotent() {
        let mut n = CMat::zeros(3, 3);
        n[(0, 1)] = ONE;
        n[(1, 2)] = ONE;
        let e = expm(&n).unwrap();
        assert!((e[(0, 2)] - c64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((e[(0, 1)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn expm_rotation_large_norm() {
        // exp of [[0, w], [-w, 0]] is a rotation by w
        let w = 1234.5;
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = c64::new(w, 0.0);
        a[(1, 0)] = c64::new(-w, 0.0);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - w.cos()).abs() < 1e-10);
        assert!((e[(0, 1)].re - w.sin()).abs() < 1e-10);
    }

    #[test]
    fn dopri_matches_exponential() {
        let lam = c64::new(-0.3, 5.0);
        let out = dopri5(
            |_, y, dy| dy[0] = lam * y[0],
            &[ONE],
            &[0.0, 0.5, 2.0],
            OdeTolerance::default(),
        )
        .unwrap();
        for (k, t) in [0.0, 0.5, 2.0].iter().enumerate() {
            assert!((out[k][0] - (lam * t).exp()).norm() < 1e-10);
        }
    }

    #[test]
    fn vectorization_round_trip() {
        let m = CMat::from_fn(3, 3, |i, j| c64::new(i as f64, j as f64));
        let v = vectorize(&m);
        assert_eq!(v[1 * 3 + 2], m[(1, 2)]);
        assert_eq!(unvectorize(&v, 3), m);
    }
}
