//! Truncated representation of the doubled (non-tilde ⊗ tilde) thermal space.
//!
//! Basis states are `|n, ñ⟩` with `0 <= n, ñ <= N`, stored at index
//! `n + (N + 1) * ñ` (non-tilde occupation fastest). A ket `Σ ρ_{nm} |n, m̃⟩`
//! is the vectorised density matrix, so `⟨1|A|ρ⟩ = Tr(A ρ)` and a tilde
//! operator `Ã` acts as right multiplication by `A†`.
//!
//! Ladder relations such as `[a, a†] = 1` fail on the top level of a finite
//! ladder. Exactness checks are therefore restricted to the *guarded
//! subspace*: occupations `<= N - G - 1` in both factors.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::linalg;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Cutoff `N` (max occupation per factor) and guard band `G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TruncatedFockSpace {
    cutoff: usize,
    guard: usize,
}

impl TruncatedFockSpace {
    pub fn new(cutoff: usize, guard: usize) -> Result<Self> {
        if cutoff < 2 || guard >= cutoff {
            return Err(Error::InvalidCutoff { cutoff, guard });
        }
        Ok(Self { cutoff, guard })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    /// Levels per factor, `N + 1`.
    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    /// Dimension of the doubled space, `(N + 1)^2`.
    pub fn dim(&self) -> usize {
        self.levels() * self.levels()
    }

    pub fn index(&self, n: usize, nt: usize) -> usize {
        n + self.levels() * nt
    }

    pub fn occupations(&self, idx: usize) -> (usize, usize) {
        (idx % self.levels(), idx / self.levels())
    }

    /// Largest occupation inside the guarded subspace.
    pub fn guarded_max(&self) -> usize {
        self.cutoff - self.guard - 1
    }

    pub fn is_guarded(&self, idx: usize) -> bool {
        let (n, nt) = self.occupations(idx);
        n <= self.guarded_max() && nt <= self.guarded_max()
    }

    /// True when either factor sits in the top `G` levels.
    pub fn in_guard_band(&self, idx: usize) -> bool {
        let (n, nt) = self.occupations(idx);
        let lim = self.cutoff - self.guard;
        n > lim || nt > lim
    }

    /// Single-factor annihilation matrix `a|n⟩ = √n |n-1⟩`.
    fn single_annihilation(&self) -> Vec<(usize, usize, C64)> {
        (1..=self.cutoff)
            .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
            .collect()
    }

    /// Embed a single-factor matrix (given as triplets) on the non-tilde
    /// factor.
    pub fn non_tilde(&self, single: &[(usize, usize, C64)]) -> ThermalOperator {
        let l = self.levels();
        let mut tri = TriMat::new((self.dim(), self.dim()));
        for nt in 0..l {
            for &(r, c, v) in single {
                tri.add_triplet(self.index(r, nt), self.index(c, nt), v);
            }
        }
        ThermalOperator::from_csr(*self, tri.to_csr())
    }

    /// Embed a single-factor matrix on the tilde factor as given (no
    /// conjugation applied).
    pub fn on_tilde_factor(&self, single: &[(usize, usize, C64)]) -> ThermalOperator {
        let l = self.levels();
        let mut tri = TriMat::new((self.dim(), self.dim()));
        for n in 0..l {
            for &(r, c, v) in single {
                tri.add_triplet(self.index(n, r), self.index(n, c), v);
            }
        }
        ThermalOperator::from_csr(*self, tri.to_csr())
    }

    pub fn identity(&self) -> ThermalOperator {
        ThermalOperator::from_csr(*self, CsMat::eye(self.dim()))
    }

    pub fn zero(&self) -> ThermalOperator {
        ThermalOperator::from_csr(*self, CsMat::zero((self.dim(), self.dim())))
    }

    /// Projector onto the guarded subspace.
    pub fn guard_projector(&self) -> ThermalOperator {
        let mut tri = TriMat::new((self.dim(), self.dim()));
        for i in (0..self.dim()).filter(|&i| self.is_guarded(i)) {
            tri.add_triplet(i, i, ONE);
        }
        ThermalOperator::from_csr(*self, tri.to_csr())
    }

    pub fn ladder(&self) -> Ladder {
        let a = self.non_tilde(&self.single_annihilation());
        let at = a.tilde();
        Ladder {
            a_dag: a.adjoint(),
            at_dag: at.adjoint(),
            a,
            at,
        }
    }
}

/// The four ladder operators `{a, a†, ã, ã†}` of one mode.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: ThermalOperator,
    pub a_dag: ThermalOperator,
    pub at: ThermalOperator,
    pub at_dag: ThermalOperator,
}

/// Build the ladder operators for cutoff `n` and guard `g`.
pub fn build_space(cutoff: usize, guard: usize) -> Result<(TruncatedFockSpace, Ladder)> {
    let space = TruncatedFockSpace::new(cutoff, guard)?;
    let ladder = space.ladder();
    Ok((space, ladder))
}

/// Complex sparse operator on the doubled space.
#[derive(Clone, Debug)]
pub struct ThermalOperator {
    space: TruncatedFockSpace,
    mat: Arc<CsMat<C64>>,
}

impl ThermalOperator {
    pub fn from_csr(space: TruncatedFockSpace, mat: CsMat<C64>) -> Self {
        assert_eq!(mat.rows(), space.dim());
        assert_eq!(mat.cols(), space.dim());
        let mat = if mat.is_csr() { mat } else { mat.to_csr() };
        Self {
            space,
            mat: Arc::new(prune(mat)),
        }
    }

    pub fn from_dense(space: TruncatedFockSpace, dense: &Array2<C64>) -> Result<Self> {
        if dense.dim() != (space.dim(), space.dim()) {
            return Err(Error::ShapeMismatch(format!(
                "dense {:?} vs dim {}",
                dense.dim(),
                space.dim()
            )));
        }
        let mut tri = TriMat::new((space.dim(), space.dim()));
        for ((r, c), &v) in dense.indexed_iter() {
            if v != ZERO {
                tri.add_triplet(r, c, v);
            }
        }
        Ok(Self::from_csr(space, tri.to_csr()))
    }

    pub fn space(&self) -> TruncatedFockSpace {
        self.space
    }

    pub fn csr(&self) -> &CsMat<C64> {
        &self.mat
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.mat.to_dense()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat.get(row, col).copied().unwrap_or(ZERO)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::ShapeMismatch(format!(
                "operators on {:?} and {:?}",
                self.space, other.space
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_csr(self.space, &*self.mat + &*other.mat))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_csr(self.space, &*self.mat - &*other.mat))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_csr(self.space, &*self.mat * &*other.mat))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_csr(self.space, self.mat.map(|&v| v * c))
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// Hermitian adjoint (conjugate transpose).
    pub fn adjoint(&self) -> Self {
        let t = self.mat.transpose_view().to_csr();
        Self::from_csr(self.space, t.map(|v| v.conj()))
    }

    /// Tilde conjugation: swap the two tensor factors and conjugate every
    /// matrix element. Antilinear, product preserving and an involution.
    pub fn tilde(&self) -> Self {
        let s = self.space;
        let mut tri = TriMat::new((s.dim(), s.dim()));
        for (r, row) in self.mat.outer_iterator().enumerate() {
            let (n, nt) = s.occupations(r);
            for (c, v) in row.iter() {
                let (m, mt) = s.occupations(c);
                tri.add_triplet(s.index(nt, n), s.index(mt, m), v.conj());
            }
        }
        Self::from_csr(s, tri.to_csr())
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.data().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-abs of the block with both row and column in the guarded
    /// subspace.
    pub fn guarded_max_abs(&self) -> f64 {
        let s = self.space;
        let mut best = 0.0_f64;
        for (r, row) in self.mat.outer_iterator().enumerate() {
            if !s.is_guarded(r) {
                continue;
            }
            for (c, v) in row.iter() {
                if s.is_guarded(c) {
                    best = best.max(v.norm());
                }
            }
        }
        best
    }

    /// Entries outside the guarded block, max-abs.
    pub fn unguarded_max_abs(&self) -> f64 {
        let s = self.space;
        let mut best = 0.0_f64;
        for (r, row) in self.mat.outer_iterator().enumerate() {
            for (c, v) in row.iter() {
                if !(s.is_guarded(r) && s.is_guarded(c)) {
                    best = best.max(v.norm());
                }
            }
        }
        best
    }

    pub fn apply(&self, ket: &ThermalKet) -> Result<ThermalKet> {
        if ket.space != self.space {
            return Err(Error::ShapeMismatch("operator/ket space".into()));
        }
        Ok(ThermalKet {
            space: self.space,
            data: linalg::csr_mul_vec(&self.mat, &ket.data),
        })
    }

    pub fn apply_left(&self, bra: &ThermalBra) -> Result<ThermalBra> {
        if bra.space != self.space {
            return Err(Error::ShapeMismatch("bra/operator space".into()));
        }
        Ok(ThermalBra {
            space: self.space,
            data: linalg::vec_mul_csr(&bra.data, &self.mat),
        })
    }

    /// Induced infinity-norm; bounds the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        linalg::csr_norm_inf(&self.mat)
    }

    /// Multiplicative power, `self^k`.
    pub fn pow(&self, k: u32) -> Self {
        let mut out = self.space.identity();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }
}

/// Drop explicit zeros left over from cancellation.
fn prune(mat: CsMat<C64>) -> CsMat<C64> {
    if mat.data().iter().all(|v| *v != ZERO) {
        return mat;
    }
    let mut tri = TriMat::new((mat.rows(), mat.cols()));
    for (r, row) in mat.outer_iterator().enumerate() {
        for (c, &v) in row.iter() {
            if v != ZERO {
                tri.add_triplet(r, c, v);
            }
        }
    }
    tri.to_csr()
}

impl<'a> Add<&'a ThermalOperator> for &'a ThermalOperator {
    type Output = ThermalOperator;
    fn add(self, rhs: &'a ThermalOperator) -> ThermalOperator {
        self.try_add(rhs).expect("operator spaces differ")
    }
}

impl<'a> Sub<&'a ThermalOperator> for &'a ThermalOperator {
    type Output = ThermalOperator;
    fn sub(self, rhs: &'a ThermalOperator) -> ThermalOperator {
        self.try_sub(rhs).expect("operator spaces differ")
    }
}

impl<'a> Mul<&'a ThermalOperator> for &'a ThermalOperator {
    type Output = ThermalOperator;
    fn mul(self, rhs: &'a ThermalOperator) -> ThermalOperator {
        self.try_mul(rhs).expect("operator spaces differ")
    }
}

impl Mul<C64> for &ThermalOperator {
    type Output = ThermalOperator;
    fn mul(self, rhs: C64) -> ThermalOperator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ThermalOperator {
    type Output = ThermalOperator;
    fn mul(self, rhs: f64) -> ThermalOperator {
        self.scale_re(rhs)
    }
}

impl Neg for &ThermalOperator {
    type Output = ThermalOperator;
    fn neg(self) -> ThermalOperator {
        self.scale_re(-1.0)
    }
}

pub fn tilde_conjugate(op: &ThermalOperator) -> ThermalOperator {
    op.tilde()
}

/// `(c A)~ = c* Ã`.
pub fn tilde_conjugate_scaled(op: &ThermalOperator, c: C64) -> ThermalOperator {
    op.tilde().scale(c.conj())
}

pub fn commutator(a: &ThermalOperator, b: &ThermalOperator) -> Result<ThermalOperator> {
    a.try_mul(b)?.try_sub(&b.try_mul(a)?)
}

/// Thermal ket vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalKet {
    pub(crate) space: TruncatedFockSpace,
    pub(crate) data: Array1<C64>,
}

/// Thermal bra, stored as a row vector (no implicit conjugation).
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalBra {
    pub(crate) space: TruncatedFockSpace,
    pub(crate) data: Array1<C64>,
}

macro_rules! vector_common {
    ($t:ty) => {
        impl $t {
            pub fn from_vec(space: TruncatedFockSpace, data: Array1<C64>) -> Result<Self> {
                if data.len() != space.dim() {
                    return Err(Error::ShapeMismatch(format!(
                        "vector length {} vs dim {}",
                        data.len(),
                        space.dim()
                    )));
                }
                Ok(Self { space, data })
            }

            pub fn space(&self) -> TruncatedFockSpace {
                self.space
            }

            pub fn data(&self) -> &Array1<C64> {
                &self.data
            }

            pub fn get(&self, n: usize, nt: usize) -> C64 {
                self.data[self.space.index(n, nt)]
            }

            /// Tilde conjugate: swap factors and conjugate components.
            pub fn tilde(&self) -> Self {
                let s = self.space;
                let mut out = Array1::<C64>::zeros(s.dim());
                for (i, v) in self.data.iter().enumerate() {
                    let (n, nt) = s.occupations(i);
                    out[s.index(nt, n)] = v.conj();
                }
                Self {
                    space: s,
                    data: out,
                }
            }

            /// Max-abs restricted to guarded components.
            pub fn guarded_max_abs(&self) -> f64 {
                self.data
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| self.space.is_guarded(*i))
                    .map(|(_, v)| v.norm())
                    .fold(0.0, f64::max)
            }

            pub fn max_abs(&self) -> f64 {
                self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }

            /// Sum of moduli over components in the top `G` levels.
            pub fn guard_band_weight(&self) -> f64 {
                self.data
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| self.space.in_guard_band(*i))
                    .map(|(_, v)| v.norm())
                    .sum()
            }

            pub fn scale(&self, c: C64) -> Self {
                Self {
                    space: self.space,
                    data: self.data.mapv(|v| v * c),
                }
            }

            pub fn sub(&self, other: &Self) -> Self {
                Self {
                    space: self.space,
                    data: &self.data - &other.data,
                }
            }

            pub fn add(&self, other: &Self) -> Self {
                Self {
                    space: self.space,
                    data: &self.data + &other.data,
                }
            }

            /// Euclidean norm of the component vector.
            pub fn norm2(&self) -> f64 {
                self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
            }
        }
    };
}

vector_common!(ThermalKet);
vector_common!(ThermalBra);

impl ThermalBra {
    /// `⟨bra|ket⟩`.
    pub fn contract(&self, ket: &ThermalKet) -> Result<C64> {
        if self.space != ket.space {
            return Err(Error::ShapeMismatch("bra/ket space".into()));
        }
        Ok(self
            .data
            .iter()
            .zip(ket.data.iter())
            .map(|(b, k)| b * k)
            .sum())
    }
}

/// `⟨1| = Σ_n ⟨n|⊗⟨ñ|`.
pub fn thermal_bra(space: TruncatedFockSpace) -> ThermalBra {
    let mut data = Array1::<C64>::zeros(space.dim());
    for n in 0..space.levels() {
        data[space.index(n, n)] = ONE;
    }
    ThermalBra { space, data }
}

/// `f = n / (1 + n)`.
pub fn occupation_to_f(n0: f64) -> f64 {
    n0 / (1.0 + n0)
}

/// Thermal ket `|0⟩ ∝ exp(f a† ã†)|vac⟩`, normalised so `⟨1|0⟩ = 1`.
pub fn initial_vacuum(space: TruncatedFockSpace, n0: f64) -> Result<ThermalKet> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::NegativeOccupation(n0));
    }
    let f = occupation_to_f(n0);
    let top = f.powi(space.cutoff() as i32);
    if top > 1e-10 {
        log::warn!(
            "cutoff N = {} is small for n0 = {n0}: f^N = {top:.3e}",
            space.cutoff()
        );
    }
    let weights: Vec<f64> = (0..space.levels()).map(|n| f.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut data = Array1::<C64>::zeros(space.dim());
    for (n, w) in weights.iter().enumerate() {
        data[space.index(n, n)] = C64::new(w / total, 0.0);
    }
    Ok(ThermalKet { space, data })
}

/// Ket of a density matrix given on one factor: `Σ ρ_{nm} |n, m̃⟩`.
pub fn ket_from_density(space: TruncatedFockSpace, rho: &Array2<C64>) -> Result<ThermalKet> {
    let l = space.levels();
    if rho.dim() != (l, l) {
        return Err(Error::ShapeMismatch(format!("density {:?}", rho.dim())));
    }
    let mut data = Array1::<C64>::zeros(space.dim());
    for ((n, m), &v) in rho.indexed_iter() {
        data[space.index(n, m)] = v;
    }
    Ok(ThermalKet { space, data })
}

/// Displaced thermal ket: `D(α) ρ_th D(α)†` with occupation `n0`, normalised
/// to `⟨1|0⟩ = 1`. Gives non-zero means for the position/momentum models.
pub fn displaced_vacuum(space: TruncatedFockSpace, n0: f64, alpha: C64) -> Result<ThermalKet> {
    if !(n0 >= 0.0) {
        return Err(Error::NegativeOccupation(n0));
    }
    let l = space.levels();
    let f = occupation_to_f(n0);
    // displace on a larger ladder then crop, so the top-level defect of the
    // truncated generator does not leak into the kept block
    let pad = l + 40;
    let mut big = Array2::<C64>::zeros((pad, pad));
    for n in 1..pad {
        let s = (n as f64).sqrt();
        big[[n, n - 1]] = alpha * s;
        big[[n - 1, n]] = -alpha.conj() * s;
    }
    let disp = linalg::expm(&big);
    let mut rho_th = Array2::<C64>::zeros((pad, pad));
    let z: f64 = (0..pad).map(|n| f.powi(n as i32)).sum();
    for n in 0..pad {
        rho_th[[n, n]] = C64::new(f.powi(n as i32) / z, 0.0);
    }
    let dag = disp.t().mapv(|v| v.conj());
    let rho = disp.dot(&rho_th).dot(&dag);
    let crop = rho.slice(ndarray::s![0..l, 0..l]).to_owned();
    let trace: C64 = (0..l).map(|n| crop[[n, n]]).sum();
    ket_from_density(space, &crop.mapv(|v| v / trace))
}

/// `⟨bra|A|ket⟩`.
pub fn expectation(bra: &ThermalBra, op: &ThermalOperator, ket: &ThermalKet) -> Result<C64> {
    bra.contract(&op.apply(ket)?)
}
