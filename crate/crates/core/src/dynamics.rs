//! Damping-basis propagation, dynamical maps and time-dependent stepping.

use std::collections::{BTreeMap, HashMap};

use faer::c64;
use faer::linalg::solvers::DenseSolveCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    dopri5, expm, hermitian_eigenvalues, hermiticity_defect, matvec, matvec_into, norm1, norm_inf,
    trace, unvectorize, vectorize, CMat, OdeTolerance, ZERO,
};
use crate::model::{transform, Basis, Direction, ExcitonBasis};
use crate::redfield::{Liouvillian, LiouvillianTemplate, ScaleFactors};

pub const RESIDUAL_LIMIT: f64 = 1e-8;
pub const CONDITION_LIMIT: f64 = 1e12;
pub const NULL_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BasisStatus {
    Accepted,
    Rejected(String),
}

/// Eigendecomposition L̄ = A·diag(λ)·A⁻¹ of a Liouvillian.
#[derive(Debug, Clone)]
pub struct DampingBasis {
    dim: usize,
    eigenvalues: Vec<c64>,
    vectors: CMat,
    inverse: CMat,
    condition: f64,
    residual: f64,
    status: BasisStatus,
}

impl DampingBasis {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    /// Right eigenvectors as columns, each of unit 2-norm.
    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    pub fn inverse(&self) -> &CMat {
        &self.inverse
    }

    /// ‖A‖₁‖A⁻¹‖₁.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// ‖A diag(λ) A⁻¹ − L̄‖_F / ‖L̄‖_F.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn status(&self) -> &BasisStatus {
        &self.status
    }

    pub fn is_accepted(&self) -> bool {
        self.status == BasisStatus::Accepted
    }

    /// A·diag(e^{λt})·A⁻¹·v.
    pub fn advance(&self, v: &[c64], t: f64) -> Vec<c64> {
        let mut c = matvec(&self.inverse, v);
        for (ci, l) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= (l * t).exp();
        }
        matvec(&self.vectors, &c)
    }

    /// Null-space eigenvectors (|λ| < 1e-10) as density matrices, unit trace where the trace is nonzero.
    pub fn stationary_states(&self) -> Vec<CMat> {
        let mut out = Vec::new();
        for (k, l) in self.eigenvalues.iter().enumerate() {
            if l.norm() >= NULL_THRESHOLD {
                continue;
            }
            let v: Vec<c64> = (0..self.dim * self.dim).map(|i| self.vectors[(i, k)]).collect();
            let rho = unvectorize(&v, self.dim);
            let tr = trace(&rho);
            if tr.norm() > 1e-12 {
                out.push(CMat::from_fn(self.dim, self.dim, |i, j| rho[(i, j)] / tr));
            } else {
                out.push(rho);
            }
        }
        out
    }
}

pub fn compute_damping_basis(l: &Liouvillian) -> Result<DampingBasis> {
    let m = l.matrix();
    if !m.as_ref().is_all_finite() {
        return Err(Error::Numerical("liouvillian has non-finite entries".into()));
    }
    let n = m.nrows();
    let eig = m
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigensolver failed on {n}×{n} liouvillian: {e:?}")))?;
    let s = eig.S().column_vector();
    let eigenvalues: Vec<c64> = (0..n).map(|i| s[i]).collect();
    let u = eig.U();
    let mut vectors = CMat::from_fn(n, n, |i, j| u[(i, j)]);
    for j in 0..n {
        let nrm = (0..n).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for i in 0..n {
                vectors[(i, j)] /= nrm;
            }
        }
    }
    let inverse = vectors.partial_piv_lu().inverse();
    let finite = inverse.as_ref().is_all_finite();
    let condition = if finite {
        norm1(&vectors) * norm1(&inverse)
    } else {
        f64::INFINITY
    };
    let residual = if finite {
        let scaled = CMat::from_fn(n, n, |i, j| vectors[(i, j)] * eigenvalues[j]);
        let rec = &scaled * &inverse;
        let diff = (&rec - m).norm_l2();
        let base = m.norm_l2();
        if base > 0.0 {
            diff / base
        } else {
            diff
        }
    } else {
        f64::INFINITY
    };
    let status = if !(residual < RESIDUAL_LIMIT) {
        BasisStatus::Rejected(format!("reconstruction residual {residual:.3e}"))
    } else if !(condition < CONDITION_LIMIT) {
        BasisStatus::Rejected(format!("eigenvector condition {condition:.3e}"))
    } else {
        BasisStatus::Accepted
    };
    Ok(DampingBasis {
        dim: l.dimension(),
        eigenvalues,
        vectors,
        inverse,
        condition,
        residual,
        status,
    })
}

/// Constant-generator evolution, through the damping basis when it is accepted.
#[derive(Debug, Clone)]
pub enum Propagator {
    Damping(DampingBasis),
    Exponential(ExponentialPropagator),
}

#[derive(Debug, Clone)]
pub struct ExponentialPropagator {
    generator: Liouvillian,
    cache: std::cell::RefCell<HashMap<u64, CMat>>,
}

impl ExponentialPropagator {
    pub fn new(generator: Liouvillian) -> Self {
        ExponentialPropagator {
            generator,
            cache: Default::default(),
        }
    }

    fn step_matrix(&self, dt: f64) -> Result<CMat> {
        if let Some(m) = self.cache.borrow().get(&dt.to_bits()) {
            return Ok(m.clone());
        }
        let a = self.generator.matrix();
        let scaled = CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * dt);
        let e = expm(&scaled)?;
        self.cache.borrow_mut().insert(dt.to_bits(), e.clone());
        Ok(e)
    }

    pub fn advance(&self, v: &[c64], dt: f64) -> Result<Vec<c64>> {
        if dt == 0.0 {
            return Ok(v.to_vec());
        }
        Ok(matvec(&self.step_matrix(dt)?, v))
    }
}

impl Propagator {
    pub fn new(l: &Liouvillian) -> Result<Self> {
        let basis = compute_damping_basis(l)?;
        Ok(if basis.is_accepted() {
            Propagator::Damping(basis)
        } else {
            Propagator::Exponential(ExponentialPropagator::new(l.clone()))
        })
    }

    pub fn exponential(l: &Liouvillian) -> Self {
        Propagator::Exponential(ExponentialPropagator::new(l.clone()))
    }

    pub fn method(&self) -> &'static str {
        match self {
            Propagator::Damping(_) => "damping-basis",
            Propagator::Exponential(_) => "matrix-exponential",
        }
    }

    pub fn advance(&self, v: &[c64], dt: f64) -> Result<Vec<c64>> {
        match self {
            Propagator::Damping(b) => Ok(b.advance(v, dt)),
            Propagator::Exponential(e) => e.advance(v, dt),
        }
    }

    /// States at each time, with `v0` taken as the state at t = 0.
    pub fn evolve(&self, v0: &[c64], times: &[f64]) -> Result<Vec<Vec<c64>>> {
        check_times(times)?;
        match self {
            Propagator::Damping(b) => {
                let c = matvec(&b.inverse, v0);
                let mut out = Vec::with_capacity(times.len());
                let mut w = vec![ZERO; c.len()];
                for &t in times {
                    for k in 0..c.len() {
                        w[k] = c[k] * (b.eigenvalues[k] * t).exp();
                    }
                    out.push(matvec(&b.vectors, &w));
                }
                Ok(out)
            }
            Propagator::Exponential(e) => {
                let mut out = Vec::with_capacity(times.len());
                let mut v = v0.to_vec();
                let mut t_prev = 0.0;
                for &t in times {
                    v = e.advance(&v, t - t_prev)?;
                    t_prev = t;
                    out.push(v.clone());
                }
                Ok(out)
            }
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::Input(
                "time grid must be finite, nonnegative and nondecreasing".into(),
            ));
        }
        prev = t;
    }
    Ok(())
}

/// Checks that ρ is a density matrix: Hermitian, unit trace, positive semidefinite.
pub fn validate_density(rho: &CMat) -> Result<()> {
    let d = rho.nrows();
    if rho.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            found: rho.ncols(),
        });
    }
    if !rho.as_ref().is_all_finite() {
        return Err(Error::Input("initial state has non-finite entries".into()));
    }
    let h = hermiticity_defect(rho);
    if h > 1e-10 {
        return Err(Error::Input(format!("initial state is not Hermitian (defect {h:.3e})")));
    }
    let tr = trace(rho);
    if (tr - c64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::Input(format!("initial state has trace {tr}")));
    }
    let min = hermitian_eigenvalues(rho)?.first().copied().unwrap_or(0.0);
    if min < -1e-9 {
        return Err(Error::Input(format!(
            "initial state is not positive semidefinite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.max_trace_error < 1e-9 && self.max_hermiticity_error < 1e-10 && self.min_eigenvalue >= -1e-7
    }
}

/// Density matrices on a time grid in a declared basis.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub basis: Basis,
    pub metadata: BTreeMap<String, String>,
}

impl Trajectory {
    pub fn from_vectors(times: &[f64], vectors: Vec<Vec<c64>>, dim: usize, basis: Basis) -> Self {
        Trajectory {
            times: times.to_vec(),
            states: vectors.iter().map(|v| unvectorize(v, dim)).collect(),
            basis,
            metadata: BTreeMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.states.first().map_or(0, |s| s.nrows())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn element(&self, a: usize, b: usize) -> Vec<c64> {
        self.states.iter().map(|s| s[(a, b)]).collect()
    }

    pub fn last(&self) -> Option<&CMat> {
        self.states.last()
    }

    pub fn invariants(&self) -> Result<InvariantReport> {
        let mut r = InvariantReport {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        };
        for s in &self.states {
            r.max_trace_error = r.max_trace_error.max((trace(s) - c64::new(1.0, 0.0)).norm());
            r.max_hermiticity_error = r.max_hermiticity_error.max(hermiticity_defect(s));
            let ev = hermitian_eigenvalues(s)?;
            r.min_eigenvalue = r.min_eigenvalue.min(ev[0]);
        }
        Ok(r)
    }

    /// Re-expresses every state in the other basis.
    pub fn in_basis(&self, exciton: &ExcitonBasis, target: Basis) -> Result<Trajectory> {
        if target == self.basis {
            return Ok(self.clone());
        }
        let dir = match target {
            Basis::Site => Direction::ExcitonToSite,
            Basis::Exciton => Direction::SiteToExciton,
        };
        let states = self
            .states
            .iter()
            .map(|s| transform(s, exciton, dir))
            .collect::<Result<_>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            states,
            basis: target,
            metadata: self.metadata.clone(),
        })
    }

    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| crate::linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }
}

/// Propagates an exciton-basis density matrix under a constant Liouvillian.
pub fn propagate(rho0: &CMat, l: &Liouvillian, times: &[f64]) -> Result<Trajectory> {
    let p = Propagator::new(l)?;
    propagate_with(&p, rho0, times)
}

pub fn propagate_with(p: &Propagator, rho0: &CMat, times: &[f64]) -> Result<Trajectory> {
    validate_density(rho0)?;
    let d = rho0.nrows();
    let v = p.evolve(&vectorize(rho0), times)?;
    let mut t = Trajectory::from_vectors(times, v, d, Basis::Exciton);
    t.metadata.insert("propagator".into(), p.method().into());
    Ok(t)
}

/// Independent check path: adaptive Dormand–Prince integration of ρ̇ = L̄ρ.
pub fn integrate_adaptive(rho0: &CMat, l: &Liouvillian, times: &[f64], tol: OdeTolerance) -> Result<Trajectory> {
    validate_density(rho0)?;
    check_times(times)?;
    let d = rho0.nrows();
    let mut grid = Vec::with_capacity(times.len() + 1);
    grid.push(0.0);
    grid.extend_from_slice(times);
    let m = l.matrix();
    let sol = dopri5(|_, y, dy| matvec_into(m, y, dy), &vectorize(rho0), &grid, tol)?;
    let mut t = Trajectory::from_vectors(times, sol[1..].to_vec(), d, Basis::Exciton);
    t.metadata.insert("propagator".into(), "dopri5".into());
    Ok(t)
}

/// χ(t) as a d²×d² matrix: χ_{ab,cd} at row a·d + b, column c·d + d'.
#[derive(Debug, Clone)]
pub struct DynamicalMap {
    pub t: f64,
    dim: usize,
    matrix: CMat,
}

impl DynamicalMap {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn element(&self, a: usize, b: usize, c: usize, d: usize) -> c64 {
        self.matrix[(a * self.dim + b, c * self.dim + d)]
    }

    /// Composition (self ∘ other).
    pub fn compose(&self, other: &DynamicalMap) -> Result<DynamicalMap> {
        if other.dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(DynamicalMap {
            t: self.t + other.t,
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Largest |Σ_a χ_{aa,cd} − δ_cd|.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for c in 0..d {
            for e in 0..d {
                let s: c64 = (0..d).map(|a| self.element(a, a, c, e)).sum();
                let target = if c == e { 1.0 } else { 0.0 };
                worst = worst.max((s - c64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest |χ_{ab,cd} − χ*_{ba,dc}|.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        worst = worst.max((self.element(a, b, c, e) - self.element(b, a, e, c).conj()).norm());
                    }
                }
            }
        }
        worst
    }
}

pub fn map_tensor(basis: &DampingBasis, t: f64) -> Result<DynamicalMap> {
    if !basis.is_accepted() {
        return Err(Error::Numerical(
            "dynamical map requested from a rejected damping basis; use map_exponential".into(),
        ));
    }
    let n = basis.dim * basis.dim;
    let scaled = CMat::from_fn(n, n, |i, j| basis.vectors[(i, j)] * (basis.eigenvalues[j] * t).exp());
    Ok(DynamicalMap {
        t,
        dim: basis.dim,
        matrix: &scaled * &basis.inverse,
    })
}

/// χ(t) = exp(L̄t), for use when the damping basis is rejected.
pub fn map_exponential(l: &Liouvillian, t: f64) -> Result<DynamicalMap> {
    let a = l.matrix();
    let scaled = CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * t);
    Ok(DynamicalMap {
        t,
        dim: l.dimension(),
        matrix: expm(&scaled)?,
    })
}

pub fn map_with(p: &Propagator, l: &Liouvillian, t: f64) -> Result<DynamicalMap> {
    match p {
        Propagator::Damping(b) => map_tensor(b, t),
        Propagator::Exponential(_) => map_exponential(l, t),
    }
}

pub fn apply_map(map: &DynamicalMap, rho0: &CMat) -> Result<CMat> {
    if rho0.nrows() != map.dim || rho0.ncols() != map.dim {
        return Err(Error::Dimension {
            expected: map.dim,
            found: rho0.nrows(),
        });
    }
    Ok(unvectorize(&matvec(&map.matrix, &vectorize(rho0)), map.dim))
}

/// tr|ρ₁ − ρ₂| (no ½ factor: orthogonal pure states give 2).
pub fn trace_distance(rho1: &CMat, rho2: &CMat) -> Result<f64> {
    if rho1.nrows() != rho2.nrows() || rho1.ncols() != rho2.ncols() {
        return Err(Error::Dimension {
            expected: rho1.nrows(),
            found: rho2.nrows(),
        });
    }
    let diff = rho1 - rho2;
    let scale = crate::linalg::max_abs(rho1).max(crate::linalg::max_abs(rho2)).max(1.0);
    if hermiticity_defect(&diff) > 1e-8 * scale {
        return Err(Error::Input("trace distance needs Hermitian arguments".into()));
    }
    Ok(hermitian_eigenvalues(&diff)?.iter().map(|x| x.abs()).sum())
}

/// Time-dependent generator L̄(t) = L̄_static + D(s(t)), where D holds the rescalable channels.
pub trait GeneratorSchedule {
    fn template(&self) -> &LiouvillianTemplate;
    fn scales(&self, t: f64) -> Result<ScaleFactors>;
    /// Time scale on which the factors change appreciably.
    fn resolution(&self) -> f64;
    /// From this time on every factor equals 1 exactly.
    fn saturation_time(&self) -> Option<f64>;
}

/// Schedule with all factors fixed at 1; exercises the stepping path.
pub struct ConstantSchedule<'a> {
    pub template: &'a LiouvillianTemplate,
    pub resolution: f64,
}

impl GeneratorSchedule for ConstantSchedule<'_> {
    fn template(&self) -> &LiouvillianTemplate {
        self.template
    }

    fn scales(&self, _t: f64) -> Result<ScaleFactors> {
        Ok(ScaleFactors::ones(self.template.basis().dimension()))
    }

    fn resolution(&self) -> f64 {
        self.resolution
    }

    fn saturation_time(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    /// Steps per schedule resolution.
    pub per_resolution: f64,
    /// Upper bound on h·‖L̄_static‖∞.
    pub static_phase: f64,
    /// Upper bound on h·‖D‖∞, the frozen midpoint part.
    pub driven_phase: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            per_resolution: 8.0,
            static_phase: 1.0,
            driven_phase: 0.05,
            max_step: f64::INFINITY,
            max_steps: 20_000_000,
        }
    }
}

impl StepOptions {
    pub fn halved(self) -> Self {
        StepOptions {
            per_resolution: self.per_resolution * 2.0,
            static_phase: self.static_phase * 0.5,
            driven_phase: self.driven_phase * 0.5,
            max_step: self.max_step * 0.5,
            ..self
        }
    }
}

/// Piecewise-constant midpoint stepping under a time-dependent generator.
///
/// Each step of length h applies exp(L̄_static h/2), then exp(D(t + h/2) h) by
/// second-order Taylor series, then exp(L̄_static h/2). Once the schedule saturates
/// the remaining interval is propagated with the constant full generator.
pub fn propagate_timedep(
    rho0: &CMat,
    schedule: &dyn GeneratorSchedule,
    times: &[f64],
    opts: StepOptions,
) -> Result<Trajectory> {
    validate_density(rho0)?;
    check_times(times)?;
    let tpl = schedule.template();
    let d = tpl.basis().dimension();
    if rho0.nrows() != d {
        return Err(Error::Dimension {
            expected: d,
            found: rho0.nrows(),
        });
    }
    let static_norm = norm_inf(tpl.static_part().matrix());
    let driven_norm = norm_inf(&tpl.scaled_dissipator(&ScaleFactors::ones(d))?);
    let mut h_max = opts.max_step.min(schedule.resolution() / opts.per_resolution);
    if static_norm > 0.0 {
        h_max = h_max.min(opts.static_phase / static_norm);
    }
    if driven_norm > 0.0 {
        h_max = h_max.min(opts.driven_phase / driven_norm);
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    if !(h_max > 0.0) || (horizon > 0.0 && h_max < 1e-15 * horizon) {
        return Err(Error::Numerical(format!("step size underflow (h = {h_max:.3e})")));
    }
    let t_sat = schedule.saturation_time().unwrap_or(f64::INFINITY);
    let mut half_steps: HashMap<u64, CMat> = HashMap::new();
    let static_prop = ExponentialPropagator::new(tpl.static_part().clone());
    let mut full_prop: Option<Propagator> = None;
    let mut v = vectorize(rho0);
    let mut t = 0.0f64;
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(times.len());
    let mut work = vec![ZERO; v.len()];
    let mut work2 = vec![ZERO; v.len()];
    for &target in times {
        let ramp_end = target.min(t_sat);
        if ramp_end > t {
            let span = ramp_end - t;
            let n = (span / h_max).ceil().max(1.0) as usize;
            steps += n;
            if steps > opts.max_steps {
                return Err(Error::Numerical(format!(
                    "time-dependent propagation needs more than {} steps",
                    opts.max_steps
                )));
            }
            let h = span / n as f64;
            let key = h.to_bits();
            if !half_steps.contains_key(&key) {
                let m = static_prop.step_matrix(0.5 * h)?;
                half_steps.insert(key, m);
            }
            let e_half = &half_steps[&key];
            let t0 = t;
            for k in 0..n {
                let mid = t0 + (k as f64 + 0.5) * h;
                let dmat = tpl.scaled_dissipator(&schedule.scales(mid)?)?;
                matvec_into(e_half, &v, &mut work);
                matvec_into(&dmat, &work, &mut work2);
                let first = work2.clone();
                matvec_into(&dmat, &first, &mut work2);
                for i in 0..work.len() {
                    work[i] += first[i] * h + work2[i] * (0.5 * h * h);
                }
                matvec_into(e_half, &work, &mut v);
            }
            t = ramp_end;
        }
        if target > t {
            if full_prop.is_none() {
                full_prop = Some(Propagator::new(tpl.full())?);
            }
            v = full_prop.as_ref().map(|p| p.advance(&v, target - t)).transpose()?.unwrap_or(v);
            t = target;
        }
        out.push(v.clone());
    }
    let mut traj = Trajectory::from_vectors(times, out, d, Basis::Exciton);
    traj.metadata.insert("propagator".into(), "midpoint-split".into());
    traj.metadata.insert("max_step_ps".into(), format!("{h_max:e}"));
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{Blackbody, DrudeLorentz};
    use crate::linalg::{identity, max_abs_diff, to_complex};
    use crate::model::{build_hamiltonian, diagonalize, AggregateModel, Chromophore};
    use crate::redfield::{assemble_tensor, build_channels, liouvillian};
    use crate::units::{debye, ev, wavenumber};

    fn dimer_template(lam: f64) -> LiouvillianTemplate {
        let m = AggregateModel::new(
            vec![
                Chromophore::new("c", ev(2.112), debye(13.2)),
                Chromophore::new("d", ev(2.122), debye(13.1)),
            ],
            vec![vec![0.0, wavenumber(320.0)], vec![wavenumber(320.0), 0.0]],
        )
        .unwrap();
        let b = diagonalize(&build_hamiltonian(&m)).unwrap();
        let p = DrudeLorentz::new(wavenumber(lam), wavenumber(100.0), 300.0).unwrap();
        let r = Blackbody::new(5600.0).unwrap();
        let tb = build_channels(&m, &b, Some(&p), None).unwrap();
        let bb = build_channels(&m, &b, None, Some(&r)).unwrap();
        LiouvillianTemplate::new(b, &tb, bb).unwrap()
    }

    fn projector(d: usize, k: usize) -> CMat {
        CMat::from_fn(d, d, |i, j| if i == j && i == k { c64::new(1.0, 0.0) } else { ZERO })
    }

    #[test]
    fn diagonal_liouvillian_basis() {
        let diag = [c64::new(0.0, 0.0), c64::new(-1.0, 2.0), c64::new(-1.0, -2.0), c64::new(-3.0, 0.0)];
        let m = CMat::from_fn(4, 4, |i, j| if i == j { diag[i] } else { ZERO });
        let l = Liouvillian::from_matrix(2, m).unwrap();
        let b = compute_damping_basis(&l).unwrap();
        assert!(b.is_accepted());
        for j in 0..4 {
            let big: Vec<f64> = (0..4).map(|i| b.vectors()[(i, j)].norm()).filter(|x| *x > 1e-12).collect();
            assert_eq!(big.len(), 1);
            assert!((big[0] - 1.0).abs() < 1e-12);
        }
        let mut got: Vec<(f64, f64)> = b.eigenvalues().iter().map(|z| (z.re, z.im)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<(f64, f64)> = diag.iter().map(|z| (z.re, z.im)).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g.0 - w.0).abs() < 1e-12 && (g.1 - w.1).abs() < 1e-12);
        }
    }

    #[test]
    fn defective_generator_is_rejected_and_falls_back() {
        // Jordan block: eigenvectors coalesce
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = c64::new(-1.0, 0.0);
        m[(1, 1)] = c64::new(-1.0, 0.0);
        m[(0, 1)] = c64::new(1.0, 0.0);
        let l = Liouvillian::from_matrix(2, m).unwrap();
        let b = compute_damping_basis(&l).unwrap();
        assert!(!b.is_accepted());
        assert!(map_tensor(&b, 1.0).is_err());
        let p = Propagator::new(&l).unwrap();
        assert_eq!(p.method(), "matrix-exponential");
        let v = p.advance(&[ZERO, c64::new(1.0, 0.0), ZERO, ZERO], 2.0).unwrap();
        // exp of [[-1, 1], [0, -1]]·t gives t·e^{-t} in the corner
        assert!((v[0].re - 2.0 * (-2.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn map_basics_and_semigroup() {
        let tpl = dimer_template(13.0);
        let l = tpl.full();
        let b = compute_damping_basis(l).unwrap();
        assert!(b.is_accepted(), "{:?}", b.status());
        let m0 = map_tensor(&b, 0.0).unwrap();
        assert!(max_abs_diff(m0.matrix(), &identity(16)) < 1e-12);
        let m1 = map_tensor(&b, 0.7).unwrap();
        let m2 = map_tensor(&b, 1.9).unwrap();
        let m12 = map_tensor(&b, 2.6).unwrap();
        assert!(max_abs_diff(&m1.compose(&m2).unwrap().matrix().clone(), m12.matrix()) < 1e-9);
        assert!(m12.trace_defect() < 1e-9);
        assert!(m12.hermiticity_defect() < 1e-10);
        let ex = map_exponential(l, 2.6).unwrap();
        assert!(max_abs_diff(ex.matrix(), m12.matrix()) < 1e-8);
    }

    #[test]
    fn ground_column_equals_density() {
        let tpl = dimer_template(13.0);
        let b = compute_damping_basis(tpl.full()).unwrap();
        let g = 3;
        let rho0 = projector(4, g);
        let traj = propagate(&rho0, tpl.full(), &[0.5, 1.5]).unwrap();
        for (k, &t) in [0.5, 1.5].iter().enumerate() {
            let m = map_tensor(&b, t).unwrap();
            for a in 0..4 {
                for c in 0..4 {
                    assert!((m.element(a, c, g, g) - traj.states[k][(a, c)]).norm() < 1e-12);
                }
            }
            let applied = apply_map(&m, &rho0).unwrap();
            assert!(max_abs_diff(&applied, &traj.states[k]) < 1e-9);
        }
    }

    #[test]
    fn propagation_paths_agree() {
        let tpl = dimer_template(13.0);
        let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let rho0 = projector(4, 2);
        let a = propagate(&rho0, tpl.full(), &times).unwrap();
        let b = propagate_with(&Propagator::exponential(tpl.full()), &rho0, &times).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-8);
        assert_eq!(a.metadata["propagator"], "damping-basis");
    }

    #[test]
    fn invalid_initial_states() {
        let tpl = dimer_template(13.0);
        let bad_trace = CMat::from_fn(4, 4, |i, j| if i == j { c64::new(0.5, 0.0) } else { ZERO });
        assert!(matches!(propagate(&bad_trace, tpl.full(), &[1.0]), Err(Error::Input(_))));
        let mut nonherm = projector(4, 3);
        nonherm[(0, 1)] = c64::new(0.1, 0.0);
        assert!(propagate(&nonherm, tpl.full(), &[1.0]).is_err());
        let mut neg = CMat::zeros(4, 4);
        neg[(0, 0)] = c64::new(1.5, 0.0);
        neg[(1, 1)] = c64::new(-0.5, 0.0);
        assert!(propagate(&neg, tpl.full(), &[1.0]).is_err());
        assert!(propagate(&projector(4, 3), tpl.full(), &[1.0, 0.5]).is_err());
    }

    #[test]
    fn stationary_state_is_constant() {
        let tpl = dimer_template(13.0);
        let b = compute_damping_basis(tpl.full()).unwrap();
        let ss = b.stationary_states();
        assert_eq!(ss.len(), 1);
        let rho = &ss[0];
        let h = CMat::from_fn(4, 4, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
        let traj = propagate(&h, tpl.full(), &[0.0, 3.0, 30.0]).unwrap();
        for s in &traj.states {
            assert!(max_abs_diff(s, &h) < 1e-10);
        }
    }

    #[test]
    fn trace_distance_values() {
        let a = projector(2, 0);
        let b = projector(2, 1);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(trace_distance(&a, &b).unwrap(), trace_distance(&b, &a).unwrap());
        let mut nh = CMat::zeros(2, 2);
        nh[(0, 1)] = c64::new(1.0, 0.0);
        assert!(trace_distance(&nh, &a).is_err());
    }

    #[test]
    fn constant_schedule_matches_propagate() {
        let tpl = dimer_template(13.0);
        let times: Vec<f64> = (1..=5).map(|k| 0.02 * k as f64).collect();
        let rho0 = projector(4, 3);
        let sched = ConstantSchedule { template: &tpl, resolution: 1.0 };
        let stepped = propagate_timedep(&rho0, &sched, &times, StepOptions::default()).unwrap();
        let exact = propagate(&rho0, tpl.full(), &times).unwrap();
        assert!(stepped.max_abs_diff(&exact) < 1e-8, "{}", stepped.max_abs_diff(&exact));
    }

    #[test]
    fn site_basis_round_trip() {
        let tpl = dimer_template(13.0);
        let traj = propagate(&projector(4, 2), tpl.full(), &[0.3]).unwrap();
        let site = traj.in_basis(tpl.basis(), Basis::Site).unwrap();
        let back = site.in_basis(tpl.basis(), Basis::Exciton).unwrap();
        assert!(back.max_abs_diff(&traj) < 1e-13);
        let u = to_complex(tpl.basis().vectors());
        let manual = &u * &traj.states[0] * u.adjoint();
        assert!(max_abs_diff(&manual, &site.states[0]) < 1e-14);
    }

    #[test]
    fn plain_liouvillian_path() {
        let tpl = dimer_template(0.0);
        let l = liouvillian(tpl.basis(), &assemble_tensor(&[], tpl.basis()).unwrap()).unwrap();
        let b = compute_damping_basis(&l).unwrap();
        assert!(b.is_accepted());
        // purely coherent: every eigenvalue is imaginary
        assert!(b.eigenvalues().iter().all(|z| z.re.abs() < 1e-9));
    }
}
