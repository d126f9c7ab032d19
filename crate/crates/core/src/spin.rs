//! Spin operators and the composite spaces and states built from them.
//!
//! Basis convention used everywhere in the crate: the states of a spin `s`
//! are ordered `m = s, s-1, ..., -s`, and composite spaces use the Kronecker
//! order of their site list (site 0 is the most significant factor).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest composite dimension accepted by the dense representation.
pub const MAX_DIM: usize = 4096;

/// Relative Frobenius tolerance for the Hermiticity invariant.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Supported spin quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Half,
    One,
    ThreeHalves,
}

impl Spin {
    pub fn from_f64(s: f64) -> Result<Self> {
        match (2.0 * s).round() as i64 {
            1 if (s - 0.5).abs() < 1e-12 => Ok(Spin::Half),
            2 if (s - 1.0).abs() < 1e-12 => Ok(Spin::One),
            3 if (s - 1.5).abs() < 1e-12 => Ok(Spin::ThreeHalves),
            _ => Err(Error::UnsupportedSpin(s)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Spin::Half => 0.5,
            Spin::One => 1.0,
            Spin::ThreeHalves => 1.5,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
            Spin::ThreeHalves => 4,
        }
    }

    /// Magnetic quantum number of basis index `k`.
    pub fn m(self, k: usize) -> f64 {
        self.value() - k as f64
    }

    /// Basis index of magnetic quantum number `m`.
    pub fn index_of(self, m: f64) -> Option<usize> {
        let k = self.value() - m;
        let r = k.round();
        ((k - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.dim()).then_some(r as usize)
    }
}

/// A dense complex matrix acting on a spin Hilbert space.
///
/// Hamiltonian-valued operators are in kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn from_matrix(m: CMatrix) -> Self {
        assert!(m.is_square(), "operators are square matrices");
        Operator(m)
    }

    pub fn from_real(rows: usize, data: &[f64]) -> Self {
        Operator(CMatrix::from_row_iterator(
            rows,
            rows,
            data.iter().map(|&x| c(x)),
        ))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(CMatrix::identity(dim, dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Operator(CMatrix::from_diagonal(&CVector::from_iterator(
            values.len(),
            values.iter().map(|&x| c(x)),
        )))
    }

    /// `|v><v|`, with `v` normalized first.
    pub fn projector(v: &CVector) -> Self {
        let v = v.normalize();
        Operator(&v * v.adjoint())
    }

    /// `|a><b|`.
    pub fn outer(a: &CVector, b: &CVector) -> Self {
        Operator(a * b.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Operator(self.0.kronecker(&other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Operator(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `||A - A^dag||_F / ||A||_F`, zero for the zero operator.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.0.norm();
        if n == 0.0 {
            return 0.0;
        }
        (&self.0 - self.0.adjoint()).norm() / n
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let e = self.hermiticity_error();
        if e > HERMITIAN_TOL {
            Err(Error::NotHermitian(e))
        } else {
            Ok(())
        }
    }

    /// Checks `P = P^dag` and `P^2 = P` to `tol`.
    pub fn ensure_projector(&self, tol: f64) -> Result<()> {
        self.ensure_hermitian()?;
        let dev = (&self.0 * &self.0 - &self.0).norm();
        if dev > tol {
            return Err(Error::NotProjector(dev));
        }
        Ok(())
    }

    /// Replaces `A` by `(A + A^dag)/2`, removing round-off asymmetry.
    pub fn hermitize(&self) -> Self {
        Operator((&self.0 + self.0.adjoint()) * c(0.5))
    }

    /// Largest absolute eigenvalue of a Hermitian operator.
    pub fn spectral_radius(&self) -> f64 {
        self.0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Operator(&self.0 * c(s))
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Operator> for &Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                Operator(&self.0 $op &rhs.0)
            }
        }
        impl $tr<Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                Operator(self.0 $op rhs.0)
            }
        }
        impl $tr<&Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                Operator(self.0 $op &rhs.0)
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        Operator(self.0 * c(s))
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        Operator(&self.0 * c(s))
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, s: C64) -> Operator {
        Operator(self.0 * s)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-self.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Operator> for Operator {
    fn add_assign(&mut self, rhs: Operator) {
        self.0 += rhs.0;
    }
}

/// Cartesian spin matrices and ladder operators for one spin.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub splus: Operator,
    pub sminus: Operator,
}

impl SpinOperators {
    /// `n . S` for a (not necessarily unit) vector `n`.
    pub fn along(&self, n: &Vector3<f64>) -> Operator {
        &self.sx * n.x + &self.sy * n.y + &self.sz * n.z
    }

    pub fn dim(&self) -> usize {
        self.sz.dim()
    }
}

/// Angular momentum matrices for spin `s` in the `m = s..-s` basis.
pub fn spin_operators(s: Spin) -> SpinOperators {
    let d = s.dim();
    let j = s.value();
    let mut splus = CMatrix::zeros(d, d);
    for k in 1..d {
        // S+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, with |m+1> one index lower.
        let m = s.m(k);
        splus[(k - 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus) * c(0.5);
    let sy = (&splus - &sminus) * C64::new(0.0, -0.5);
    let sz = CMatrix::from_diagonal(&CVector::from_iterator(d, (0..d).map(|k| c(s.m(k)))));
    SpinOperators {
        sx: Operator(sx),
        sy: Operator(sy),
        sz: Operator(sz),
        splus: Operator(splus),
        sminus: Operator(sminus),
    }
}

/// A spin at a position relative to the NV center (NV axis is +z).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSite {
    pub label: String,
    pub spin: Spin,
    /// Gyromagnetic ratio magnitude, kHz/G.
    pub gamma: f64,
    /// Position in nm.
    pub position: Vector3<f64>,
    /// Tabulated species, when the site is one.
    pub species: Option<crate::constants::Species>,
}

impl SpinSite {
    pub fn new(label: impl Into<String>, spin: Spin, gamma: f64, position: Vector3<f64>) -> Self {
        SpinSite {
            label: label.into(),
            spin,
            gamma,
            position,
            species: None,
        }
    }

    pub fn of_species(species: crate::constants::Species, position: Vector3<f64>) -> Self {
        let spin = match species.twice_spin() {
            1 => Spin::Half,
            2 => Spin::One,
            _ => Spin::ThreeHalves,
        };
        SpinSite {
            species: Some(species),
            ..SpinSite::new(species.name(), spin, species.gamma(), position)
        }
    }

    /// The NV electron spin restricted to the driven `{|0>, |+1>}` pair.
    pub fn nv_two_level() -> Self {
        SpinSite::new(
            "NV",
            Spin::Half,
            crate::constants::GAMMA_ELECTRON,
            Vector3::zeros(),
        )
    }

    /// The NV electron spin with all three `m_s` levels.
    pub fn nv_triplet() -> Self {
        SpinSite::new(
            "NV",
            Spin::One,
            crate::constants::GAMMA_ELECTRON,
            Vector3::zeros(),
        )
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }
}

/// An ordered tensor product of spin sites.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpace {
    sites: Vec<SpinSite>,
    dims: Vec<usize>,
    total_dim: usize,
}

impl CompositeSpace {
    pub fn new(sites: Vec<SpinSite>) -> Result<Self> {
        let dims: Vec<usize> = sites.iter().map(SpinSite::dim).collect();
        let mut total: usize = 1;
        for &d in &dims {
            total = total.saturating_mul(d);
            if total > MAX_DIM {
                return Err(Error::DimensionCap(total));
            }
        }
        Ok(CompositeSpace {
            sites,
            dims,
            total_dim: total,
        })
    }

    pub fn sites(&self) -> &[SpinSite] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Result<&SpinSite> {
        self.sites.get(index).ok_or(Error::SiteIndex {
            index,
            len: self.sites.len(),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn identity(&self) -> Operator {
        Operator::identity(self.total_dim)
    }

    /// Places `op` on one site and the identity elsewhere.
    pub fn embed(&self, op: &Operator, site_index: usize) -> Result<Operator> {
        self.embed_many(&[(site_index, op)])
    }

    /// Tensor product with the given factors at their sites and identities
    /// elsewhere. Site indices must be distinct.
    pub fn embed_many(&self, factors: &[(usize, &Operator)]) -> Result<Operator> {
        let mut slots: Vec<Option<&Operator>> = vec![None; self.sites.len()];
        for &(i, op) in factors {
            let d = *self.dims.get(i).ok_or(Error::SiteIndex {
                index: i,
                len: self.sites.len(),
            })?;
            if op.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: op.dim(),
                });
            }
            if slots[i].is_some() {
                return Err(Error::InvalidParameter(format!("site {i} given twice")));
            }
            slots[i] = Some(op);
        }
        // Collapse runs of identities into single identity blocks.
        let mut acc: Option<CMatrix> = None;
        let mut pending_identity = 1usize;
        let flush = |acc: Option<CMatrix>, n: usize| -> Option<CMatrix> {
            if n == 1 {
                return acc;
            }
            let id = CMatrix::identity(n, n);
            Some(match acc {
                None => id,
                Some(a) => a.kronecker(&id),
            })
        };
        for (slot, &d) in slots.iter().zip(&self.dims) {
            match slot {
                None => pending_identity *= d,
                Some(op) => {
                    acc = flush(acc, pending_identity);
                    pending_identity = 1;
                    acc = Some(match acc {
                        None => op.0.clone(),
                        Some(a) => a.kronecker(&op.0),
                    });
                }
            }
        }
        acc = flush(acc, pending_identity);
        Ok(Operator(acc.unwrap_or_else(|| {
            CMatrix::identity(self.total_dim, self.total_dim)
        })))
    }

    /// Spin operators of one site, embedded in the full space.
    pub fn site_spin(&self, site_index: usize) -> Result<SpinOperators> {
        let local = spin_operators(self.site(site_index)?.spin);
        Ok(SpinOperators {
            sx: self.embed(&local.sx, site_index)?,
            sy: self.embed(&local.sy, site_index)?,
            sz: self.embed(&local.sz, site_index)?,
            splus: self.embed(&local.splus, site_index)?,
            sminus: self.embed(&local.sminus, site_index)?,
        })
    }
}

/// Free-function form of [`CompositeSpace::embed`].
pub fn embed(op: &Operator, site_index: usize, space: &CompositeSpace) -> Result<Operator> {
    space.embed(op, site_index)
}

/// A pure state vector or a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(CVector),
    Mixed(CMatrix),
}

impl State {
    /// Normalized pure state; rejects the zero vector.
    pub fn pure(v: CVector) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(State::Pure(v / c(n)))
    }

    /// Density matrix; checked for Hermiticity and unit trace.
    pub fn mixed(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState("density matrix is not square".into()));
        }
        let op = Operator(rho);
        op.ensure_hermitian()
            .map_err(|_| Error::InvalidState("density matrix is not Hermitian".into()))?;
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        Ok(State::Mixed(op.0))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0);
        State::Pure(v)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        State::Mixed(CMatrix::identity(dim, dim) * c(1.0 / dim as f64))
    }

    /// Spin-1/2 state polarized along +x.
    pub fn x_up() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        State::Pure(CVector::from_vec(vec![c(s), c(s)]))
    }

    /// Spin-1/2 state polarized along -x.
    pub fn x_down() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        State::Pure(CVector::from_vec(vec![c(s), c(-s)]))
    }

    pub fn dim(&self) -> usize {
        match self {
            State::Pure(v) => v.len(),
            State::Mixed(m) => m.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, State::Pure(_))
    }

    pub fn density(&self) -> CMatrix {
        match self {
            State::Pure(v) => v * v.adjoint(),
            State::Mixed(m) => m.clone(),
        }
    }

    /// Tensor product in the given order; pure only if every factor is pure.
    pub fn tensor(factors: &[State]) -> State {
        if factors.iter().all(State::is_pure) {
            let v = factors
                .iter()
                .fold(CVector::from_element(1, c(1.0)), |acc, f| match f {
                    State::Pure(v) => acc.kronecker(v),
                    State::Mixed(_) => unreachable!(),
                });
            State::Pure(v)
        } else {
            let m = factors
                .iter()
                .fold(CMatrix::from_element(1, 1, c(1.0)), |acc, f| {
                    acc.kronecker(&f.density())
                });
            State::Mixed(m)
        }
    }

    /// Norm of a pure state or trace of a density matrix.
    pub fn norm_or_trace(&self) -> f64 {
        match self {
            State::Pure(v) => v.norm(),
            State::Mixed(m) => m.trace().re,
        }
    }

    /// Reduced density matrix of one site.
    pub fn reduce_to(&self, space: &CompositeSpace, site: usize) -> Result<CMatrix> {
        if self.dim() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                found: self.dim(),
            });
        }
        let dims = space.dims();
        let d = *dims.get(site).ok_or(Error::SiteIndex {
            index: site,
            len: dims.len(),
        })?;
        let left: usize = dims[..site].iter().product();
        let right: usize = dims[site + 1..].iter().product();
        let rho = self.density();
        let mut out = CMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut acc = c(0.0);
                for l in 0..left {
                    for r in 0..right {
                        let i = (l * d + a) * right + r;
                        let j = (l * d + b) * right + r;
                        acc += rho[(i, j)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        Ok(out)
    }
}

/// `Tr(rho O)` or `<psi|O|psi>` for a Hermitian observable.
pub fn expectation(state: &State, obs: &Operator) -> Result<f64> {
    if state.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            found: state.dim(),
        });
    }
    obs.ensure_hermitian()?;
    let value = match state {
        State::Pure(v) => v.dotc(&(obs.matrix() * v)),
        State::Mixed(rho) => (rho * obs.matrix()).trace(),
    };
    let scale = obs.matrix().camax().max(1.0);
    if value.im.abs() > 1e-10 * scale {
        return Err(Error::InvalidState(format!(
            "expectation has imaginary part {:.3e}; state is not Hermitian",
            value.im
        )));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a.matrix() - b.matrix()).norm() <= tol
    }

    #[test]
    fn ladder_coefficients() {
        let half = spin_operators(Spin::Half);
        assert!(close(&half.sz, &Operator::diagonal(&[0.5, -0.5]), 0.0));

        let one = spin_operators(Spin::One);
        assert!(close(&one.sz, &Operator::diagonal(&[1.0, 0.0, -1.0]), 0.0));
        let r2 = 2f64.sqrt();
        assert!((one.splus.matrix()[(0, 1)].re - r2).abs() < 1e-15);
        assert!((one.splus.matrix()[(1, 2)].re - r2).abs() < 1e-15);

        let tq = spin_operators(Spin::ThreeHalves);
        let sup: Vec<f64> = (0..3).map(|k| tq.splus.matrix()[(k, k + 1)].re).collect();
        let want = [3f64.sqrt(), 2.0, 3f64.sqrt()];
        for (a, b) in sup.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn commutation_and_casimir() {
        for s in [Spin::Half, Spin::One, Spin::ThreeHalves] {
            let o = spin_operators(s);
            let comm = o.sx.commutator(&o.sy);
            assert!(close(&comm, &(o.sz.clone() * C64::i()), 1e-13));
            let cas = &o.sx * &o.sx + &o.sy * &o.sy + &o.sz * &o.sz;
            let j = s.value();
            assert!(close(
                &cas,
                &(Operator::identity(s.dim()) * (j * (j + 1.0))),
                1e-13
            ));
        }
    }

    #[test]
    fn unsupported_spin_rejected() {
        assert!(matches!(
            Spin::from_f64(2.0),
            Err(Error::UnsupportedSpin(_))
        ));
        assert!(matches!(
            Spin::from_f64(0.7),
            Err(Error::UnsupportedSpin(_))
        ));
        assert_eq!(Spin::from_f64(1.5).unwrap(), Spin::ThreeHalves);
    }

    fn two_halves() -> CompositeSpace {
        let s = SpinSite::new("a", Spin::Half, 1.0, Vector3::x());
        CompositeSpace::new(vec![s.clone(), s]).unwrap()
    }

    #[test]
    fn embed_kronecker_order() {
        let sp = two_halves();
        let sz = spin_operators(Spin::Half).sz;
        let e = sp.embed(&sz, 0).unwrap();
        assert!(close(&e, &Operator::diagonal(&[0.5, 0.5, -0.5, -0.5]), 0.0));
        let id = sp.embed(&Operator::identity(2), 1).unwrap();
        assert!(close(&id, &Operator::identity(4), 0.0));
    }

    #[test]
    fn disjoint_supports_commute() {
        let sp = two_halves();
        let o = spin_operators(Spin::Half);
        let a = sp.embed(&o.sx, 0).unwrap();
        let b = sp.embed(&o.sy, 1).unwrap();
        assert!(a.commutator(&b).norm() < 1e-15);
    }

    #[test]
    fn embed_rejects_mismatch() {
        let sp = two_halves();
        let sz1 = spin_operators(Spin::One).sz;
        assert!(matches!(
            sp.embed(&sz1, 0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(sp.embed(&sz1, 5), Err(Error::SiteIndex { .. })));
    }

    #[test]
    fn embed_many_matches_products() {
        let site = |s| SpinSite::new("x", s, 1.0, Vector3::z());
        let sp = CompositeSpace::new(vec![
            site(Spin::Half),
            site(Spin::One),
            site(Spin::ThreeHalves),
        ])
        .unwrap();
        let a = spin_operators(Spin::Half).sx;
        let b = spin_operators(Spin::ThreeHalves).sy;
        let joint = sp.embed_many(&[(0, &a), (2, &b)]).unwrap();
        let prod = sp.embed(&a, 0).unwrap() * sp.embed(&b, 2).unwrap();
        assert!(close(&joint, &prod, 1e-14));
    }

    #[test]
    fn dimension_cap() {
        let s = SpinSite::new("c", Spin::Half, 1.0, Vector3::z());
        assert!(CompositeSpace::new(vec![s.clone(); 12]).is_ok());
        assert!(matches!(
            CompositeSpace::new(vec![s; 13]),
            Err(Error::DimensionCap(8192))
        ));
    }

    #[test]
    fn expectation_examples() {
        let o = spin_operators(Spin::Half);
        assert!(
            expectation(&State::maximally_mixed(2), &o.sz)
                .unwrap()
                .abs()
                < 1e-15
        );
        let up_x = State::x_up();
        let proj = Operator::from_matrix(up_x.density());
        assert!((expectation(&up_x, &proj).unwrap() - 1.0).abs() < 1e-15);
        let p_up = Operator::diagonal(&[1.0, 0.0]);
        assert!((expectation(&State::maximally_mixed(2), &p_up).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let o = spin_operators(Spin::Half);
        assert!(matches!(
            expectation(&State::x_up(), &o.splus),
            Err(Error::NotHermitian(_))
        ));
        assert!(expectation(&State::basis(3, 0), &o.sz).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let sp = two_halves();
        let s = State::tensor(&[State::x_up(), State::basis(2, 1)]);
        let r0 = s.reduce_to(&sp, 0).unwrap();
        assert!((r0 - State::x_up().density()).norm() < 1e-15);
        let r1 = s.reduce_to(&sp, 1).unwrap();
        assert!((r1[(1, 1)].re - 1.0).abs() < 1e-15);
    }
}
