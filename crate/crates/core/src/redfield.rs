//! Non-secular Redfield tensor and its Liouvillian matrix.
//!
//! Γ_{ab,cd} = γ(ω_dc)·K_ab·K_cd and
//! R_{ab,cd} = δ_ac Σ_e Γ_{be,ed} + δ_bd Σ_e Γ_{ae,ec} − Γ_{ca,bd} − Γ_{db,ac}.
//! The master equation reads ρ̇_ab = −iω_ab ρ_ab − Σ_cd R_{ab,cd} ρ_cd.

use faer::c64;
use serde::Serialize;

use crate::bath::{Blackbody, DrudeLorentz, Spectrum};
use crate::error::{Error, Result};
use crate::linalg::{unvectorize, vectorize, CMat, RMat};
use crate::model::{dipole_operator, site_projector, AggregateModel, ExcitonBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelKind {
    Phonon { site: usize },
    Radiation,
}

/// One system operator K (exciton basis) coupled to one bath spectrum.
#[derive(Debug, Clone)]
pub struct CouplingChannel {
    label: String,
    kind: ChannelKind,
    operator: RMat,
    spectrum: Spectrum,
}

impl CouplingChannel {
    pub fn new(
        label: impl Into<String>,
        kind: ChannelKind,
        operator: RMat,
        spectrum: Spectrum,
    ) -> Result<Self> {
        let d = operator.nrows();
        if operator.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                found: operator.ncols(),
            });
        }
        let scale = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| operator[(i, j)].abs())
            .fold(0.0, f64::max);
        for i in 0..d {
            for j in 0..i {
                if (operator[(i, j)] - operator[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Model("coupling operator is not Hermitian".into()));
                }
            }
        }
        let mut operator = operator;
        if kind == ChannelKind::Radiation {
            for a in 0..d {
                if operator[(a, a)].abs() > 1e-12 * scale {
                    return Err(Error::Model(
                        "radiation coupling must be off-diagonal in the exciton basis".into(),
                    ));
                }
                operator[(a, a)] = 0.0;
            }
        }
        Ok(CouplingChannel {
            label: label.into(),
            kind,
            operator,
            spectrum,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn operator(&self) -> &RMat {
        &self.operator
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dimension(&self) -> usize {
        self.operator.nrows()
    }

    /// Γ_{ab,cd}(ω_dc).
    pub fn gamma_element(&self, basis: &ExcitonBasis, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let k = &self.operator;
        self.spectrum.gamma_real(basis.transition(d, c)) * k[(a, b)] * k[(c, d)]
    }

    /// Copy with K_ab multiplied by s_ab.
    pub fn scaled(&self, scales: &ScaleFactors) -> Result<CouplingChannel> {
        let d = self.dimension();
        if scales.dimension() != d {
            return Err(Error::Dimension {
                expected: d,
                found: scales.dimension(),
            });
        }
        let mut out = self.clone();
        out.operator = RMat::from_fn(d, d, |i, j| self.operator[(i, j)] * scales.get(i, j));
        Ok(out)
    }
}

/// Per-site phonon channels (site projectors) and one global radiation channel (total dipole).
pub fn build_channels(
    model: &AggregateModel,
    basis: &ExcitonBasis,
    phonon: Option<&DrudeLorentz>,
    radiation: Option<&Blackbody>,
) -> Result<Vec<CouplingChannel>> {
    if basis.dimension() != model.dimension() {
        return Err(Error::Dimension {
            expected: model.dimension(),
            found: basis.dimension(),
        });
    }
    let mut out = Vec::new();
    if let Some(p) = phonon {
        for j in 0..model.n_sites() {
            let k = basis.to_exciton_real(&site_projector(model, j)?)?;
            out.push(CouplingChannel::new(
                format!("phonon:{}", model.chromophores()[j].label),
                ChannelKind::Phonon { site: j },
                k,
                Spectrum::DrudeLorentz(*p),
            )?);
        }
    }
    if let Some(r) = radiation {
        let k = basis.to_exciton_real(&dipole_operator(model))?;
        out.push(CouplingChannel::new(
            "radiation",
            ChannelKind::Radiation,
            k,
            Spectrum::Blackbody(*r),
        )?);
    }
    Ok(out)
}

/// Rank-4 relaxation tensor in the exciton basis, R_{ab,cd} at ((a·d + b)·d + c)·d + d'.
#[derive(Debug, Clone, PartialEq)]
pub struct RedfieldTensor {
    dim: usize,
    data: Vec<f64>,
    provenance: Vec<String>,
}

impl RedfieldTensor {
    pub fn zeros(dim: usize) -> Self {
        RedfieldTensor {
            dim,
            data: vec![0.0; dim.pow(4)],
            provenance: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Labels of the channels summed into this tensor.
    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn add(&self, other: &RedfieldTensor) -> Result<RedfieldTensor> {
        if other.dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out.provenance.extend(other.provenance.iter().cloned());
        Ok(out)
    }

    /// Largest |R_{ab,cd} − R_{ba,dc}| (the tensor is real).
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        worst = worst.max((self.get(a, b, c, e) - self.get(b, a, e, c)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest |Σ_a R_{aa,cd}|.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for c in 0..d {
            for e in 0..d {
                let s: f64 = (0..d).map(|a| self.get(a, a, c, e)).sum();
                worst = worst.max(s.abs());
            }
        }
        worst
    }
}

fn accumulate_channel(channel: &CouplingChannel, energies: &[f64], data: &mut [f64]) {
    let d = energies.len();
    let k = channel.operator();
    // G_cd = γ(ω_dc) K_cd, Y = K·G
    let g = RMat::from_fn(d, d, |c, e| {
        let kk = k[(c, e)];
        if kk == 0.0 {
            0.0
        } else {
            channel.spectrum().gamma_real(energies[e] - energies[c]) * kk
        }
    });
    let y = k * &g;
    for a in 0..d {
        for b in 0..d {
            let row = (a * d + b) * d * d;
            for c in 0..d {
                let kca = k[(c, a)];
                let gac = g[(a, c)];
                for e in 0..d {
                    let mut r = -kca * g[(b, e)] - k[(e, b)] * gac;
                    if a == c {
                        r += y[(b, e)];
                    }
                    if b == e {
                        r += y[(a, c)];
                    }
                    data[row + c * d + e] += r;
                }
            }
        }
    }
}

pub fn assemble_tensor(channels: &[CouplingChannel], basis: &ExcitonBasis) -> Result<RedfieldTensor> {
    let d = basis.dimension();
    let mut t = RedfieldTensor::zeros(d);
    for ch in channels {
        if ch.dimension() != d {
            return Err(Error::Dimension {
                expected: d,
                found: ch.dimension(),
            });
        }
        accumulate_channel(ch, basis.energies(), &mut t.data);
        t.provenance.push(ch.label.clone());
    }
    Ok(t)
}

/// d²×d² generator acting on row-major vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    dim: usize,
    matrix: CMat,
}

impl Liouvillian {
    pub fn from_matrix(dim: usize, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                found: matrix.nrows(),
            });
        }
        Ok(Liouvillian { dim, matrix })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.dim + b
    }

    pub fn element(&self, a: usize, b: usize, c: usize, d: usize) -> c64 {
        self.matrix[(self.index(a, b), self.index(c, d))]
    }

    /// dρ/dt for a density matrix in the exciton basis.
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        let v = crate::linalg::matvec(&self.matrix, &vectorize(rho));
        Ok(unvectorize(&v, self.dim))
    }

    /// Largest |Σ_a L_{aa,cd}|: the trace functional is a left null vector.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for col in 0..d * d {
            let s: c64 = (0..d).map(|a| self.matrix[(a * d + a, col)]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }
}

pub fn liouvillian(basis: &ExcitonBasis, tensor: &RedfieldTensor) -> Result<Liouvillian> {
    let d = basis.dimension();
    if tensor.dimension() != d {
        return Err(Error::Dimension {
            expected: d,
            found: tensor.dimension(),
        });
    }
    let n = d * d;
    let e = basis.energies();
    let data = tensor.as_slice();
    let mut m = CMat::from_fn(n, n, |i, j| c64::new(-data[i * n + j], 0.0));
    for a in 0..d {
        for b in 0..d {
            let i = a * d + b;
            m[(i, i)].im -= e[a] - e[b];
        }
    }
    Liouvillian::from_matrix(d, m)
}

/// Symmetric per-element factors s_ab ∈ [0, 1] applied to coupling operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFactors(RMat);

impl ScaleFactors {
    pub fn new(values: RMat) -> Result<Self> {
        let d = values.nrows();
        if values.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                found: values.ncols(),
            });
        }
        for i in 0..d {
            for j in 0..d {
                let s = values[(i, j)];
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Domain(format!(
                        "scale factor s[{i}][{j}] = {s} is outside [0, 1]"
                    )));
                }
            }
        }
        Ok(ScaleFactors(values))
    }

    pub fn uniform(dim: usize, s: f64) -> Result<Self> {
        Self::new(RMat::from_fn(dim, dim, |_, _| s))
    }

    pub fn ones(dim: usize) -> Self {
        ScaleFactors(RMat::from_fn(dim, dim, |_, _| 1.0))
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[(a, b)]
    }

    pub fn is_all_ones(&self) -> bool {
        let d = self.dimension();
        (0..d).all(|i| (0..d).all(|j| self.0[(i, j)] == 1.0))
    }
}

/// Generator split into a fixed part and channels whose couplings can be rescaled in time.
#[derive(Debug, Clone)]
pub struct LiouvillianTemplate {
    basis: ExcitonBasis,
    static_tensor: RedfieldTensor,
    scalable: Vec<CouplingChannel>,
    static_part: Liouvillian,
    full: Liouvillian,
}

impl LiouvillianTemplate {
    pub fn new(
        basis: ExcitonBasis,
        static_channels: &[CouplingChannel],
        scalable: Vec<CouplingChannel>,
    ) -> Result<Self> {
        let static_tensor = assemble_tensor(static_channels, &basis)?;
        let static_part = liouvillian(&basis, &static_tensor)?;
        let mut tpl = LiouvillianTemplate {
            full: static_part.clone(),
            basis,
            static_tensor,
            scalable,
            static_part,
        };
        tpl.full = tpl.rebuild(&ScaleFactors::ones(tpl.basis.dimension()))?;
        Ok(tpl)
    }

    pub fn basis(&self) -> &ExcitonBasis {
        &self.basis
    }

    /// Generator with the scalable channels at full strength.
    pub fn full(&self) -> &Liouvillian {
        &self.full
    }

    /// Generator without the scalable channels.
    pub fn static_part(&self) -> &Liouvillian {
        &self.static_part
    }

    pub fn scalable_channels(&self) -> &[CouplingChannel] {
        &self.scalable
    }

    fn scaled_tensor(&self, scales: &ScaleFactors) -> Result<RedfieldTensor> {
        let scaled: Vec<CouplingChannel> = self
            .scalable
            .iter()
            .map(|c| c.scaled(scales))
            .collect::<Result<_>>()?;
        assemble_tensor(&scaled, &self.basis)
    }

    fn rebuild(&self, scales: &ScaleFactors) -> Result<Liouvillian> {
        let t = self.static_tensor.add(&self.scaled_tensor(scales)?)?;
        liouvillian(&self.basis, &t)
    }

    /// −R of the scaled channels alone, as a d²×d² matrix.
    pub fn scaled_dissipator(&self, scales: &ScaleFactors) -> Result<CMat> {
        let t = self.scaled_tensor(scales)?;
        let n = self.basis.dimension().pow(2);
        let data = t.as_slice();
        Ok(CMat::from_fn(n, n, |i, j| c64::new(-data[i * n + j], 0.0)))
    }
}

pub fn rebuild_scaled(template: &LiouvillianTemplate, scales: &ScaleFactors) -> Result<Liouvillian> {
    if scales.is_all_ones() {
        return Ok(template.full.clone());
    }
    template.rebuild(scales)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{Blackbody, DrudeLorentz};
    use crate::model::{build_hamiltonian, diagonalize, Chromophore};
    use crate::units::{debye, ev, wavenumber};

    fn dimer_model() -> AggregateModel {
        AggregateModel::new(
            vec![
                Chromophore::new("c", ev(2.112), debye(13.2)),
                Chromophore::new("d", ev(2.122), debye(13.1)),
            ],
            vec![vec![0.0, wavenumber(320.0)], vec![wavenumber(320.0), 0.0]],
        )
        .unwrap()
    }

    fn setup(tb: bool, bb: bool) -> (ExcitonBasis, Vec<CouplingChannel>) {
        let m = dimer_model();
        let b = diagonalize(&build_hamiltonian(&m)).unwrap();
        let p = DrudeLorentz::new(wavenumber(13.0), wavenumber(100.0), 300.0).unwrap();
        let r = Blackbody::new(5600.0).unwrap();
        let ch = build_channels(&m, &b, tb.then_some(&p), bb.then_some(&r)).unwrap();
        (b, ch)
    }

    #[test]
    fn zero_channels_give_zero_tensor() {
        let (b, _) = setup(false, false);
        let t = assemble_tensor(&[], &b).unwrap();
        assert!(t.as_slice().iter().all(|&x| x == 0.0));
        let l = liouvillian(&b, &t).unwrap();
        for a in 0..4 {
            for c in 0..4 {
                let z = l.element(a, c, a, c);
                assert_eq!(z.re, 0.0);
                assert_eq!(z.im, -(b.energies()[a] - b.energies()[c]));
            }
        }
    }

    #[test]
    fn zero_operator_channel() {
        let (b, ch) = setup(false, true);
        let z = CouplingChannel::new("z", ChannelKind::Radiation, RMat::zeros(4, 4), *ch[0].spectrum()).unwrap();
        let t = assemble_tensor(&[z.clone()], &b).unwrap();
        assert!(t.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!(z.gamma_element(&b, 0, 1, 1, 0), 0.0);
    }

    #[test]
    fn tensor_symmetries() {
        let (b, ch) = setup(true, true);
        let t = assemble_tensor(&ch, &b).unwrap();
        let scale = t.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(t.hermiticity_defect() <= 1e-12 * scale.max(1.0));
        assert!(t.trace_defect() <= 1e-10);
        let l = liouvillian(&b, &t).unwrap();
        assert!(l.trace_defect() <= 1e-10);
        for a in 0..4 {
            for c in 0..4 {
                if a != c {
                    assert!(-t.get(a, a, c, c) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn additivity() {
        let (b, ch) = setup(true, true);
        let (tb, bb) = ch.split_at(2);
        let whole = assemble_tensor(&ch, &b).unwrap();
        let parts = assemble_tensor(tb, &b).unwrap().add(&assemble_tensor(bb, &b).unwrap()).unwrap();
        for (x, y) in whole.as_slice().iter().zip(parts.as_slice()) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
        }
        assert_eq!(whole.provenance(), parts.provenance());
    }

    #[test]
    fn radiation_operator_rejects_diagonal() {
        let (_, ch) = setup(false, true);
        let k = RMat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.5 });
        assert!(CouplingChannel::new("x", ChannelKind::Radiation, k, *ch[0].spectrum()).is_err());
        let asym = RMat::from_fn(2, 2, |i, j| (i + 2 * j) as f64);
        assert!(CouplingChannel::new("x", ChannelKind::Phonon { site: 0 }, asym, *ch[0].spectrum()).is_err());
    }

    #[test]
    fn liouvillian_reproduces_equation_of_motion() {
        let (b, ch) = setup(true, true);
        let t = assemble_tensor(&ch, &b).unwrap();
        let l = liouvillian(&b, &t).unwrap();
        for seed in 0..20u64 {
            let rho = CMat::from_fn(4, 4, |i, j| {
                let x = ((seed * 31 + (i * 4 + j) as u64 * 17) % 97) as f64 / 97.0;
                c64::new(x - 0.5, 0.1 * (i as f64 - j as f64))
            });
            let got = l.apply(&rho).unwrap();
            for a in 0..4 {
                for c in 0..4 {
                    let mut want = c64::new(0.0, -(b.energies()[a] - b.energies()[c])) * rho[(a, c)];
                    for x in 0..4 {
                        for y in 0..4 {
                            want -= rho[(x, y)] * t.get(a, c, x, y);
                        }
                    }
                    assert!((got[(a, c)] - want).norm() <= 1e-12 * want.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn scaling_rules() {
        let (b, ch) = setup(true, true);
        let (tb, bb) = ch.split_at(2);
        let tpl = LiouvillianTemplate::new(b.clone(), tb, bb.to_vec()).unwrap();
        let direct = liouvillian(&b, &assemble_tensor(&ch, &b).unwrap()).unwrap();
        assert!(crate::linalg::max_abs_diff(tpl.full().matrix(), direct.matrix()) <= 1e-13);
        let one = rebuild_scaled(&tpl, &ScaleFactors::ones(4)).unwrap();
        assert_eq!(&one, tpl.full());
        let zero = rebuild_scaled(&tpl, &ScaleFactors::uniform(4, 0.0).unwrap()).unwrap();
        assert_eq!(zero.matrix(), tpl.static_part().matrix());
        let s = 0.37;
        let half = tpl.scaled_dissipator(&ScaleFactors::uniform(4, s).unwrap()).unwrap();
        let full = tpl.scaled_dissipator(&ScaleFactors::ones(4)).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert!((half[(i, j)] - full[(i, j)] * (s * s)).norm() <= 1e-15 * full[(i, j)].norm().max(1e-300));
            }
        }
        assert!(ScaleFactors::uniform(4, 1.5).is_err());
        assert!(ScaleFactors::uniform(4, -0.1).is_err());
    }
}
