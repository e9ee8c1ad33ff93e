//! Spectral calculus on complex Hermitian matrices.
//!
//! Every transpose in this crate is taken in the fixed computational basis;
//! bipartite operators are laid out output-factor first (`B ⊗ A`).

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{cplx, modulus, Real};

/// Dense complex matrix in the computational basis.
pub type ComplexMatrix<T> = DMatrix<Complex<T>>;

/// Which factor of a bipartite space `A ⊗ B` to keep in a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Scalar function applied through the spectral theorem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralFn<T> {
    Sqrt,
    Log,
    Inv,
    InvSqrt,
    Exp,
    Power(T),
}

impl<T: Real> SpectralFn<T> {
    fn requires_psd(&self) -> bool {
        !matches!(self, SpectralFn::Exp)
    }

    fn eval(&self, x: T) -> T {
        match *self {
            SpectralFn::Sqrt => x.sqrt(),
            SpectralFn::Log => x.ln(),
            SpectralFn::Inv => x.recip(),
            SpectralFn::InvSqrt => x.sqrt().recip(),
            SpectralFn::Exp => x.exp(),
            SpectralFn::Power(p) => x.powf(p),
        }
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored column by column.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Real> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `V diag(f(λ)) V^dag`.
    pub fn compose_with(&self, mut f: impl FnMut(T) -> T) -> HermitianMatrix<T> {
        let d = self.dim();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::<T>::zeros(d, d);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == T::zero() {
                continue;
            }
            let col = v.column(k);
            out += (col * col.adjoint()) * cplx(w);
        }
        HermitianMatrix::hermitize(out)
    }

    pub fn reconstruct(&self) -> HermitianMatrix<T> {
        self.compose_with(|x| x)
    }

    /// Number of eigenvalues strictly above `cutoff * max|λ|`.
    pub fn rank(&self, cutoff: T) -> usize {
        let thr = cutoff * self.max_abs_eigenvalue();
        self.eigenvalues.iter().filter(|&&l| l > thr).count()
    }

    /// Orthogonal projector onto the span of eigenvectors above the cutoff.
    pub fn support_projector(&self, cutoff: T) -> HermitianMatrix<T> {
        let thr = cutoff * self.max_abs_eigenvalue();
        self.compose_with(|l| if l > thr { T::one() } else { T::zero() })
    }
}

/// Makes the first non-negligible component of `v` real and positive.
fn fix_phase<T: Real>(v: &mut DVector<Complex<T>>) {
    let tol = T::lit(1e-12);
    if let Some(c) = v.iter().find(|c| modulus(**c) > tol).copied() {
        let phase = c / cplx(modulus(c));
        let rot = phase.conj();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

/// Self-adjoint complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T: Real> {
    m: ComplexMatrix<T>,
}

impl<T: Real> HermitianMatrix<T> {
    /// Validates hermiticity within [`Real::hermiticity_tol`] and stores the
    /// re-Hermitized matrix `(M + M^dag)/2`.
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = max_abs(&(&m - m.adjoint()));
        if dev > T::hermiticity_tol() {
            return Err(Error::NonHermitianInput { max_dev: dev.as_f64() });
        }
        Ok(Self::hermitize(m))
    }

    /// `(M + M^dag)/2` without any check. For products that are Hermitian in
    /// exact arithmetic.
    pub fn hermitize(m: ComplexMatrix<T>) -> Self {
        debug_assert!(m.is_square());
        let half = cplx(T::lit(0.5));
        let a = m.adjoint();
        Self { m: (m + a) * half }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: ComplexMatrix::identity(d, d) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { m: ComplexMatrix::zeros(d, d) }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let d = diag.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = cplx(x);
        }
        Self { m }
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &DVector<Complex<T>>) -> Self {
        Self::hermitize(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> T {
        self.m.diagonal().iter().fold(T::zero(), |s, z| s + z.re)
    }

    /// `Re Tr[self · other]`, which is the full trace for Hermitian pairs.
    pub fn trace_product(&self, other: &Self) -> T {
        trace_product(&self.m, &other.m)
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &DVector<Complex<T>>) -> T {
        (v.adjoint() * &self.m * v)[(0, 0)].re
    }

    pub fn eig(&self) -> EigenDecomposition<T> {
        let d = self.dim();
        let se = self.m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            se.eigenvalues[a]
                .partial_cmp(&se.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut vectors = ComplexMatrix::zeros(d, d);
        let mut values = Vec::with_capacity(d);
        for (k, &src) in order.iter().enumerate() {
            let mut col: DVector<Complex<T>> = se.eigenvectors.column(src).into_owned();
            fix_phase(&mut col);
            vectors.set_column(k, &col);
            values.push(se.eigenvalues[src]);
        }
        EigenDecomposition { eigenvalues: values, eigenvectors: vectors }
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eig().eigenvalues
    }

    /// Applies `f` via the spectral theorem using [`Real::support_cutoff`].
    pub fn apply(&self, f: SpectralFn<T>) -> Result<Self> {
        spectral_fn(self, f, T::support_cutoff())
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.apply(SpectralFn::Sqrt)
    }

    pub fn log(&self) -> Result<Self> {
        self.apply(SpectralFn::Log)
    }

    /// Moore–Penrose inverse on the support.
    pub fn pinv(&self) -> Result<Self> {
        self.apply(SpectralFn::Inv)
    }

    pub fn inv_sqrt(&self) -> Result<Self> {
        self.apply(SpectralFn::InvSqrt)
    }

    pub fn exp(&self) -> Self {
        self.eig().compose_with(|x| x.exp())
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Keep) -> Result<Self> {
        partial_trace(&self.m, dims, keep).map(Self::hermitize)
    }

    /// `A M A^dag`.
    pub fn congruence(&self, a: &ComplexMatrix<T>) -> Self {
        Self::hermitize(a * &self.m * a.adjoint())
    }

    /// `self · mid · self`, Hermitian whenever `mid` is.
    pub fn sandwich(&self, mid: &Self) -> Self {
        Self::hermitize(&self.m * &mid.m * &self.m)
    }

    pub fn scale(&self, s: T) -> Self {
        Self { m: &self.m * cplx(s) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        max_abs(&(&self.m - &other.m))
    }

    pub fn rank(&self) -> usize {
        self.eig().rank(T::support_cutoff())
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim()
    }

    pub fn support_projector(&self) -> Self {
        self.eig().support_projector(T::support_cutoff())
    }

    /// Largest eigenvalue of `self` compressed to the kernel of `other`.
    pub fn support_leak(&self, other: &Self) -> T {
        let outside = &Self::identity(other.dim()) - &other.support_projector();
        self.congruence(outside.as_matrix()).eig().max_abs_eigenvalue()
    }

    /// `supp(self) ⊆ supp(other)` up to a relative tolerance.
    pub fn support_within(&self, other: &Self) -> bool {
        let scale = self.eig().max_abs_eigenvalue().max(T::one());
        self.support_leak(other) <= T::support_cutoff() * T::lit(1e3) * scale
    }

    /// Max-entry norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Self) -> T {
        max_abs(&(&self.m * &other.m - &other.m * &self.m))
    }

    /// Minimum eigenvalue relative check: `λ_min >= -cutoff·max|λ|`.
    pub fn is_psd(&self) -> bool {
        let e = self.eig();
        let thr = T::support_cutoff() * e.max_abs_eigenvalue();
        e.eigenvalues.first().is_none_or(|&l| l >= -thr)
    }
}

impl<T: Real> Add for &HermitianMatrix<T> {
    type Output = HermitianMatrix<T>;
    fn add(self, rhs: Self) -> HermitianMatrix<T> {
        HermitianMatrix { m: &self.m + &rhs.m }
    }
}

impl<T: Real> Sub for &HermitianMatrix<T> {
    type Output = HermitianMatrix<T>;
    fn sub(self, rhs: Self) -> HermitianMatrix<T> {
        HermitianMatrix { m: &self.m - &rhs.m }
    }
}

impl<T: Real> Neg for &HermitianMatrix<T> {
    type Output = HermitianMatrix<T>;
    fn neg(self) -> HermitianMatrix<T> {
        HermitianMatrix { m: -&self.m }
    }
}

impl<T: Real> Mul<T> for &HermitianMatrix<T> {
    type Output = HermitianMatrix<T>;
    fn mul(self, s: T) -> HermitianMatrix<T> {
        self.scale(s)
    }
}

impl<T: Real> AsRef<HermitianMatrix<T>> for HermitianMatrix<T> {
    fn as_ref(&self) -> &HermitianMatrix<T> {
        self
    }
}

/// Eigendecomposition of a matrix that must be Hermitian within tolerance.
pub fn eig_hermitian<T: Real>(m: &ComplexMatrix<T>) -> Result<EigenDecomposition<T>> {
    Ok(HermitianMatrix::new(m.clone())?.eig())
}

/// Applies `f` to the eigenvalues of `m`.
///
/// For every function except `Exp` the input must be PSD: eigenvalues below
/// `-cutoff·max|λ|` are an error, and eigenvalues at or below
/// `cutoff·max|λ|` are outside the support and map to zero.
pub fn spectral_fn<T: Real>(m: &HermitianMatrix<T>, f: SpectralFn<T>, cutoff: T) -> Result<HermitianMatrix<T>> {
    let e = m.eig();
    if !f.requires_psd() {
        return Ok(e.compose_with(|x| f.eval(x)));
    }
    let thr = cutoff * e.max_abs_eigenvalue();
    if let Some(&low) = e.eigenvalues.first() {
        if low < -thr {
            return Err(Error::NegativeSpectrum { eigenvalue: low.as_f64() });
        }
    }
    Ok(e.compose_with(|x| if x > thr { f.eval(x) } else { T::zero() }))
}

/// Partial trace of an operator on `A ⊗ B` with `dims = (dA, dB)`.
pub fn partial_trace<T: Real>(m: &ComplexMatrix<T>, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix<T>> {
    let (da, db) = dims;
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {da}x{db} of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(match keep {
        Keep::First => DMatrix::from_fn(da, da, |i, j| {
            (0..db).fold(Complex::new(T::zero(), T::zero()), |s, k| s + m[(i * db + k, j * db + k)])
        }),
        Keep::Second => DMatrix::from_fn(db, db, |i, j| {
            (0..da).fold(Complex::new(T::zero(), T::zero()), |s, k| s + m[(k * db + i, k * db + j)])
        }),
    })
}

/// Entry-wise transpose `(i,j) ↦ (j,i)` without conjugation.
pub fn transpose_fixed_basis<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    m.transpose()
}

pub fn max_abs<T: Real>(m: &ComplexMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(modulus(*z)))
}

/// `Re Tr[A B]` computed without forming the product.
pub fn trace_product<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> T {
    let n = a.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for k in 0..a.ncols() {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    s
}

/// Matrix unit `|i⟩⟨j|` in dimension `d`.
pub fn matrix_unit<T: Real>(d: usize, i: usize, j: usize) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = cplx(T::one());
    m
}

/// Computational basis vector `|i⟩`.
pub fn basis_vector<T: Real>(d: usize, i: usize) -> DVector<Complex<T>> {
    let mut v = DVector::zeros(d);
    v[i] = cplx(T::one());
    v
}

/// Unnormalized `|Φ+⟩ = Σ_i |i⟩|i⟩` on `d × d`.
pub fn max_entangled<T: Real>(d: usize) -> DVector<Complex<T>> {
    let mut v = DVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = cplx(T::one());
    }
    v
}

/// Reorders `A ⊗ B` into `B ⊗ A`.
pub fn swap_factors<T: Real>(m: &ComplexMatrix<T>, dims: (usize, usize)) -> ComplexMatrix<T> {
    let (da, db) = dims;
    DMatrix::from_fn(da * db, da * db, |r, c| {
        let (rb, ra) = (r / da, r % da);
        let (cb, ca) = (c / da, c % da);
        m[(ra * db + rb, ca * db + cb)]
    })
}
