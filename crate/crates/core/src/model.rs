//! System Hamiltonian, dipole operator and site projectors on the 2^N product space,
//! plus the exciton basis.
//!
//! Basis state index m is an occupation bitmask: bit j set means site j is excited.

use std::cmp::Ordering;

use faer::Side;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chromophore {
    pub label: String,
    /// ε_j/ħ in rad/ps.
    pub site_energy: f64,
    /// E_gj/ħ in rad/ps.
    pub ground_energy: f64,
    /// Signed transition dipole in C·m (all dipoles parallel).
    pub dipole: f64,
}

impl Chromophore {
    pub fn new(label: impl Into<String>, site_energy: f64, dipole: f64) -> Self {
        Chromophore {
            label: label.into(),
            site_energy,
            ground_energy: 0.0,
            dipole,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    n_sites: usize,
}

impl StateSpace {
    pub fn new(n_sites: usize) -> Self {
        StateSpace { n_sites }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dimension(&self) -> usize {
        1 << self.n_sites
    }

    pub fn is_excited(&self, state: usize, site: usize) -> bool {
        state >> site & 1 == 1
    }

    pub fn excitation_number(&self, state: usize) -> usize {
        state.count_ones() as usize
    }

    pub fn states(&self) -> std::ops::Range<usize> {
        0..self.dimension()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateModel {
    chromophores: Vec<Chromophore>,
    /// D_jk in rad/ps.
    couplings: Vec<Vec<f64>>,
    light_mask: Vec<bool>,
}

pub const MAX_SITES: usize = 10;

impl AggregateModel {
    /// `couplings` is the N×N matrix D_jk in rad/ps.
    pub fn new(chromophores: Vec<Chromophore>, couplings: Vec<Vec<f64>>) -> Result<Self> {
        let n = chromophores.len();
        if n == 0 {
            return Err(Error::Model("an aggregate needs at least one chromophore".into()));
        }
        if n > MAX_SITES {
            return Err(Error::Model(format!(
                "{n} sites exceeds the supported maximum of {MAX_SITES}"
            )));
        }
        if couplings.len() != n || couplings.iter().any(|r| r.len() != n) {
            return Err(Error::Model(format!("coupling matrix must be {n}×{n}")));
        }
        for (j, c) in chromophores.iter().enumerate() {
            if !(c.site_energy > 0.0) || !c.site_energy.is_finite() {
                return Err(Error::Model(format!(
                    "site energy of chromophore {j} ({}) must be positive",
                    c.label
                )));
            }
            if !c.dipole.is_finite() || !c.ground_energy.is_finite() {
                return Err(Error::Model(format!("chromophore {} has non-finite data", c.label)));
            }
        }
        for j in 0..n {
            if couplings[j][j] != 0.0 {
                return Err(Error::Model(format!("coupling D[{j}][{j}] must be zero")));
            }
            for k in 0..n {
                if !couplings[j][k].is_finite() {
                    return Err(Error::Model(format!("coupling D[{j}][{k}] is not finite")));
                }
                if couplings[j][k] != couplings[k][j] {
                    return Err(Error::Model(format!(
                        "coupling matrix is not symmetric at ({j}, {k})"
                    )));
                }
            }
        }
        Ok(AggregateModel {
            chromophores,
            couplings,
            light_mask: vec![true; n],
        })
    }

    pub fn uncoupled(chromophores: Vec<Chromophore>) -> Result<Self> {
        let n = chromophores.len();
        Self::new(chromophores, vec![vec![0.0; n]; n])
    }

    pub fn with_light_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.n_sites() {
            return Err(Error::Dimension {
                expected: self.n_sites(),
                found: mask.len(),
            });
        }
        self.light_mask = mask;
        Ok(self)
    }

    /// Returns a copy with every dipole multiplied by `factor`.
    pub fn with_dipoles_scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for c in &mut m.chromophores {
            c.dipole *= factor;
        }
        m
    }

    pub fn chromophores(&self) -> &[Chromophore] {
        &self.chromophores
    }

    pub fn chromophores_mut(&mut self) -> &mut [Chromophore] {
        &mut self.chromophores
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.couplings
    }

    pub fn set_coupling(&mut self, j: usize, k: usize, value: f64) -> Result<()> {
        let n = self.n_sites();
        if j >= n || k >= n || j == k {
            return Err(Error::Model(format!("invalid coupling pair ({j}, {k})")));
        }
        self.couplings[j][k] = value;
        self.couplings[k][j] = value;
        Ok(())
    }

    pub fn light_mask(&self) -> &[bool] {
        &self.light_mask
    }

    pub fn n_sites(&self) -> usize {
        self.chromophores.len()
    }

    pub fn dimension(&self) -> usize {
        1 << self.n_sites()
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.n_sites())
    }

    pub fn site_index(&self, label: &str) -> Option<usize> {
        self.chromophores.iter().position(|c| c.label == label)
    }
}

pub fn build_hamiltonian(model: &AggregateModel) -> RMat {
    let space = model.space();
    let d = space.dimension();
    let n = space.n_sites();
    let mut h = RMat::zeros(d, d);
    for m in space.states() {
        let mut e = 0.0;
        for (j, c) in model.chromophores().iter().enumerate() {
            e += if space.is_excited(m, j) {
                c.site_energy
            } else {
                c.ground_energy
            };
        }
        h[(m, m)] = e;
        // hopping moves an excitation from j to an empty site k
        for j in 0..n {
            if !space.is_excited(m, j) {
                continue;
            }
            for k in 0..n {
                if k == j || space.is_excited(m, k) {
                    continue;
                }
                let target = m ^ (1 << j) ^ (1 << k);
                h[(target, m)] = model.couplings()[j][k];
            }
        }
    }
    h
}

pub fn dipole_operator(model: &AggregateModel) -> RMat {
    let space = model.space();
    let d = space.dimension();
    let mut v = RMat::zeros(d, d);
    for (j, c) in model.chromophores().iter().enumerate() {
        if !model.light_mask()[j] {
            continue;
        }
        for m in space.states() {
            v[(m ^ (1 << j), m)] = c.dipole;
        }
    }
    v
}

pub fn site_projector(model: &AggregateModel, site: usize) -> Result<RMat> {
    let space = model.space();
    if site >= space.n_sites() {
        return Err(Error::Input(format!(
            "site index {site} out of range for {} sites",
            space.n_sites()
        )));
    }
    let d = space.dimension();
    Ok(RMat::from_fn(d, d, |i, j| {
        if i == j && space.is_excited(i, site) {
            1.0
        } else {
            0.0
        }
    }))
}

pub fn excitation_number_operator(model: &AggregateModel) -> RMat {
    let space = model.space();
    let d = space.dimension();
    RMat::from_fn(d, d, |i, j| {
        if i == j {
            space.excitation_number(i) as f64
        } else {
            0.0
        }
    })
}

/// Energy eigenbasis, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct ExcitonBasis {
    energies: Vec<f64>,
    vectors: RMat,
    excitation: Vec<usize>,
}

impl ExcitonBasis {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns are eigenvectors in the product basis.
    pub fn vectors(&self) -> &RMat {
        &self.vectors
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    /// Excitation number of each eigenstate.
    pub fn excitation_numbers(&self) -> &[usize] {
        &self.excitation
    }

    /// ω_ab = e_a − e_b.
    pub fn transition(&self, a: usize, b: usize) -> f64 {
        self.energies[a] - self.energies[b]
    }

    /// Indices of eigenstates with exactly `n` excitations, in descending energy order.
    pub fn manifold(&self, n: usize) -> Vec<usize> {
        (0..self.dimension())
            .filter(|&k| self.excitation[k] == n)
            .collect()
    }

    pub fn ground_state(&self) -> usize {
        self.dimension() - 1
    }

    /// Expresses a product-basis operator in this basis, Uᵀ O U.
    pub fn to_exciton_real(&self, op: &RMat) -> Result<RMat> {
        check_dim(self.dimension(), op.nrows(), op.ncols())?;
        Ok(self.vectors.transpose() * op * &self.vectors)
    }
}

fn check_dim(d: usize, r: usize, c: usize) -> Result<()> {
    if r != d {
        return Err(Error::Dimension { expected: d, found: r });
    }
    if c != d {
        return Err(Error::Dimension { expected: d, found: c });
    }
    Ok(())
}

fn round8(x: f64) -> i64 {
    (x * 1e8).round() as i64
}

/// Diagonalizes a real symmetric Hamiltonian that conserves excitation number.
///
/// Each excitation-number block is diagonalized separately so eigenvectors never mix
/// manifolds even at accidental cross-manifold degeneracies.
pub fn diagonalize(h: &RMat) -> Result<ExcitonBasis> {
    let d = h.nrows();
    check_dim(d, d, h.ncols())?;
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::Model(format!("dimension {d} is not a power of two")));
    }
    let scale = (0..d).map(|i| h[(i, i)].abs()).fold(1.0, f64::max);
    for i in 0..d {
        for j in 0..d {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Model("hamiltonian is not symmetric".into()));
            }
            if h[(i, j)] != 0.0 && i.count_ones() != j.count_ones() {
                return Err(Error::Model(
                    "hamiltonian does not conserve excitation number".into(),
                ));
            }
        }
    }
    let n_sites = d.trailing_zeros() as usize;
    let mut pairs: Vec<(f64, Vec<f64>, usize)> = Vec::with_capacity(d);
    for n in 0..=n_sites {
        let members: Vec<usize> = (0..d).filter(|m| m.count_ones() as usize == n).collect();
        let k = members.len();
        let block = RMat::from_fn(k, k, |i, j| h[(members[i], members[j])]);
        let eig = block
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
        let s = eig.S().column_vector();
        let u = eig.U();
        for c in 0..k {
            let mut v = vec![0.0; d];
            for (i, &m) in members.iter().enumerate() {
                v[m] = u[(i, c)];
            }
            fix_phase(&mut v);
            pairs.push((s[c], v, n));
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    // near-degenerate runs are reordered by their rounded components
    let tol = 1e-9 * scale;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() <= tol {
            end += 1;
        }
        pairs[start..end].sort_by_cached_key(|p| {
            std::cmp::Reverse(p.1.iter().map(|&x| round8(x)).collect::<Vec<i64>>())
        });
        start = end;
    }
    let energies = pairs.iter().map(|p| p.0).collect();
    let excitation = pairs.iter().map(|p| p.2).collect();
    let vectors = RMat::from_fn(d, d, |i, j| pairs[j].1[i]);
    Ok(ExcitonBasis {
        energies,
        vectors,
        excitation,
    })
}

/// Makes the largest-magnitude component positive (first one on ties).
fn fix_phase(v: &mut [f64]) {
    let big = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if let Some(pos) = v.iter().position(|x| x.abs() >= big - 1e-12) {
        if v[pos] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Site,
    Exciton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    SiteToExciton,
    ExcitonToSite,
}

/// Similarity transform of an operator or density matrix between bases.
pub fn transform(m: &CMat, basis: &ExcitonBasis, direction: Direction) -> Result<CMat> {
    check_dim(basis.dimension(), m.nrows(), m.ncols())?;
    let u = crate::linalg::to_complex(basis.vectors());
    Ok(match direction {
        Direction::SiteToExciton => u.adjoint() * m * &u,
        Direction::ExcitonToSite => &u * m * u.adjoint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_defect, max_abs, trace};
    use crate::units::{debye, ev, wavenumber};
    use faer::c64;
    use proptest::prelude::*;

    fn dimer(e1: f64, e2: f64, d: f64) -> AggregateModel {
        AggregateModel::new(
            vec![
                Chromophore::new("A", e1, debye(13.2)),
                Chromophore::new("B", e2, debye(13.1)),
            ],
            vec![vec![0.0, d], vec![d, 0.0]],
        )
        .unwrap()
    }

    fn pc645_like() -> AggregateModel {
        let e = [1.990, 2.030, 2.112, 2.122];
        let mu = [14.5, 14.5, 13.2, 13.1];
        let ch = (0..4)
            .map(|j| Chromophore::new(format!("s{j}"), ev(e[j]), debye(mu[j])))
            .collect();
        let w = wavenumber(1.0);
        let d = vec![
            vec![0.0, 8.0 * w, -40.0 * w, 40.0 * w],
            vec![8.0 * w, 0.0, 25.0 * w, -25.0 * w],
            vec![-40.0 * w, 25.0 * w, 0.0, 320.0 * w],
            vec![40.0 * w, -25.0 * w, 320.0 * w, 0.0],
        ];
        AggregateModel::new(ch, d).unwrap()
    }

    #[test]
    fn single_chromophore_hamiltonian() {
        let m = AggregateModel::uncoupled(vec![Chromophore::new("DBV", ev(2.112), debye(13.2))])
            .unwrap();
        let h = build_hamiltonian(&m);
        assert_eq!(h[(0, 0)], 0.0);
        assert_eq!(h[(1, 1)], ev(2.112));
        assert_eq!(h[(0, 1)], 0.0);
        let v = dipole_operator(&m);
        assert_eq!(v[(0, 1)], debye(13.2));
        assert_eq!(v[(1, 0)], debye(13.2));
        assert_eq!(v[(0, 0)], 0.0);
    }

    #[test]
    fn decoupled_dimer_spectrum() {
        let m = dimer(100.0, 130.0, 0.0);
        let b = diagonalize(&build_hamiltonian(&m)).unwrap();
        assert_eq!(b.energies(), &[230.0, 130.0, 100.0, 0.0]);
        // diagonal H: U is a permutation
        for j in 0..4 {
            let nonzero: Vec<f64> = (0..4).map(|i| b.vectors()[(i, j)]).filter(|x| *x != 0.0).collect();
            assert_eq!(nonzero, vec![1.0]);
        }
    }

    #[test]
    fn symmetric_dimer_splitting() {
        let (e, d) = (3000.0, 60.0);
        let b = diagonalize(&build_hamiltonian(&dimer(e, e, d))).unwrap();
        assert!((b.energies()[1] - (e + d)).abs() < 1e-10);
        assert!((b.energies()[2] - (e - d)).abs() < 1e-10);
        let s = 0.5f64.sqrt();
        let u = b.vectors();
        // |e⟩ = (|01⟩+|10⟩)/√2, |e'⟩ = (|01⟩−|10⟩)/√2 with positive leading component
        assert!((u[(1, 1)] - s).abs() < 1e-12 && (u[(2, 1)] - s).abs() < 1e-12);
        assert!((u[(1, 2)] - s).abs() < 1e-12 && (u[(2, 2)] + s).abs() < 1e-12);
    }

    #[test]
    fn hopping_has_single_factor_of_d() {
        let d = 17.0;
        let h = build_hamiltonian(&dimer(10.0, 20.0, d));
        assert_eq!(h[(1, 2)], d);
        assert_eq!(h[(2, 1)], d);
        assert_eq!(h[(3, 0)], 0.0);
    }

    #[test]
    fn dimer_dipole_two_exciton_element() {
        let m = dimer(1.0, 2.0, 0.0);
        let v = dipole_operator(&m);
        // |f⟩ = |11⟩ = 3; from |01⟩ (site 0 excited) the added excitation is on site 1
        assert_eq!(v[(3, 1)], debye(13.1));
        assert_eq!(v[(3, 2)], debye(13.2));
        assert_eq!(v[(3, 0)], 0.0);
    }

    #[test]
    fn masked_dipole_vanishes() {
        let m = dimer(1.0, 2.0, 0.5).with_light_mask(vec![false, false]).unwrap();
        assert_eq!(max_abs(&crate::linalg::to_complex(&dipole_operator(&m))), 0.0);
    }

    #[test]
    fn projectors_sum_to_number_operator() {
        let m = pc645_like();
        let mut sum = RMat::zeros(16, 16);
        for j in 0..4 {
            sum = sum + site_projector(&m, j).unwrap();
        }
        assert_eq!(sum, excitation_number_operator(&m));
        assert!(site_projector(&m, 4).is_err());
        let p0 = site_projector(&dimer(1.0, 2.0, 0.0), 0).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| p0[(i, i)]).collect();
        assert_eq!(diag, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn invalid_models_rejected() {
        let c = || vec![Chromophore::new("a", 1.0, 0.0), Chromophore::new("b", 1.0, 0.0)];
        assert!(AggregateModel::new(c(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(AggregateModel::new(c(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(AggregateModel::new(vec![], vec![]).is_err());
        assert!(AggregateModel::uncoupled(vec![Chromophore::new("z", 0.0, 1.0)]).is_err());
    }

    #[test]
    fn hamiltonian_commutes_with_number() {
        let m = pc645_like();
        let h = build_hamiltonian(&m);
        let n = excitation_number_operator(&m);
        let c = &h * &n - &n * &h;
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(c[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn pc645_exciton_structure() {
        let m = pc645_like();
        let h = build_hamiltonian(&m);
        let b = diagonalize(&h).unwrap();
        let u = b.vectors();
        let utu = u.transpose() * u;
        for i in 0..16 {
            for j in 0..16 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((utu[(i, j)] - id).abs() < 1e-12);
            }
        }
        let hu = &h * u;
        for j in 0..16 {
            for i in 0..16 {
                assert!((hu[(i, j)] - u[(i, j)] * b.energies()[j]).abs() < 1e-10 * 13000.0);
            }
        }
        let counts: Vec<usize> = (0..=4).map(|n| b.manifold(n).len()).collect();
        assert_eq!(counts, vec![1, 4, 6, 4, 1]);
        assert!(b.energies().windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(b.manifold(1), vec![11, 12, 13, 14]);
        assert_eq!(b.ground_state(), 15);
        // U never mixes manifolds
        for j in 0..16 {
            for i in 0..16 {
                if u[(i, j)] != 0.0 {
                    assert_eq!(i.count_ones() as usize, b.excitation_numbers()[j]);
                }
            }
        }
    }

    #[test]
    fn exciton_dipole_is_off_diagonal() {
        let m = pc645_like();
        let b = diagonalize(&build_hamiltonian(&m)).unwrap();
        let v = b.to_exciton_real(&dipole_operator(&m)).unwrap();
        for a in 0..16 {
            assert!(v[(a, a)].abs() < 1e-12 * debye(15.0));
        }
        for a in 0..16 {
            for c in 0..16 {
                let dn = b.excitation_numbers()[a] as i64 - b.excitation_numbers()[c] as i64;
                if dn.abs() != 1 {
                    assert!(v[(a, c)].abs() < 1e-12 * debye(15.0));
                }
            }
        }
    }

    #[test]
    fn projector_of_symmetric_dimer_in_exciton_basis() {
        let m = dimer(3000.0, 3000.0, 50.0);
        let b = diagonalize(&build_hamiltonian(&m)).unwrap();
        let p = b.to_exciton_real(&site_projector(&m, 0).unwrap()).unwrap();
        // |e⟩ = 1, |e'⟩ = 2; P_0 = ½(|e⟩⟨e| + |e'⟩⟨e'| + |e⟩⟨e'| + |e'⟩⟨e|) plus |f⟩⟨f|
        assert!((p[(1, 1)] - 0.5).abs() < 1e-12);
        assert!((p[(2, 2)] - 0.5).abs() < 1e-12);
        assert!((p[(1, 2)] - 0.5).abs() < 1e-12);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(p[(3, 3)].abs() < 1e-12);
    }

    #[test]
    fn transform_identity_and_dimension_check() {
        let m = pc645_like();
        let b = diagonalize(&build_hamiltonian(&m)).unwrap();
        let id = crate::linalg::identity(16);
        let t = transform(&id, &b, Direction::SiteToExciton).unwrap();
        assert!(crate::linalg::max_abs_diff(&t, &id) < 1e-13);
        assert!(transform(&crate::linalg::identity(4), &b, Direction::SiteToExciton).is_err());
    }

    fn random_density(seed: &[f64], d: usize) -> CMat {
        let a = CMat::from_fn(d, d, |i, j| {
            let k = (i * d + j) % seed.len();
            c64::new(seed[k] * (1.0 + i as f64), seed[(k + 3) % seed.len()] - j as f64 * 0.1)
        });
        let rho = &a * a.adjoint();
        let tr = trace(&rho);
        CMat::from_fn(d, d, |i, j| rho[(i, j)] / tr)
    }

    proptest! {
        #[test]
        fn transform_preserves_trace_and_hermiticity(seed in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let m = pc645_like();
            let b = diagonalize(&build_hamiltonian(&m)).unwrap();
            let rho = random_density(&seed, 16);
            let t = transform(&rho, &b, Direction::SiteToExciton).unwrap();
            prop_assert!((trace(&t) - trace(&rho)).norm() < 1e-13);
            prop_assert!(hermiticity_defect(&t) < 1e-13);
            let back = transform(&t, &b, Direction::ExcitonToSite).unwrap();
            prop_assert!(crate::linalg::max_abs_diff(&back, &rho) < 1e-12);
        }

        #[test]
        fn dipole_changes_excitation_by_one(e in proptest::collection::vec(1.0f64..10.0, 3), mu in proptest::collection::vec(-2.0f64..2.0, 3)) {
            let ch = (0..3).map(|j| Chromophore::new(format!("{j}"), e[j], mu[j])).collect();
            let m = AggregateModel::uncoupled(ch).unwrap();
            let v = dipole_operator(&m);
            for i in 0..8usize {
                for j in 0..8usize {
                    let dn = (i.count_ones() as i64 - j.count_ones() as i64).abs();
                    if dn != 1 { prop_assert_eq!(v[(i, j)], 0.0); }
                }
            }
        }
    }
}
