use nalgebra::{Complex, DVector};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::scalar::Real;

/// Positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: HermitianMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Checks positivity (relative support cutoff) and unit trace within 1e-10.
    pub fn new(matrix: HermitianMatrix<T>) -> Result<Self> {
        let tr = matrix.trace();
        let tol = T::lit(1e-10).max(T::normalization_tol() * T::lit(0.1));
        if (tr - T::one()).abs() > tol {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr.as_f64())));
        }
        if !matrix.is_psd() {
            let low = matrix.eigenvalues()[0];
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", low.as_f64())));
        }
        Ok(Self { matrix })
    }

    pub fn from_matrix(m: ComplexMatrix<T>) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Skips validation; for outputs of maps that preserve states exactly.
    pub(crate) fn from_hermitian_unchecked(matrix: HermitianMatrix<T>) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: HermitianMatrix::identity(d).scale(T::one() / T::from_usize(d).unwrap()) }
    }

    /// `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn pure(psi: &DVector<Complex<T>>) -> Result<Self> {
        let n = psi.norm();
        if n == T::zero() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(Self { matrix: HermitianMatrix::outer(&psi.unscale(n)) })
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[T]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(probs))
    }

    /// Qubit state `(𝟙 + xX + yY + zZ)/2`.
    pub fn from_bloch(x: T, y: T, z: T) -> Result<Self> {
        let r2 = x * x + y * y + z * z;
        if r2.sqrt() > T::one() + T::lit(1e-12) {
            return Err(Error::InvalidState(format!("Bloch vector norm {} exceeds 1", r2.sqrt().as_f64())));
        }
        let half = T::lit(0.5);
        let m = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(half * (T::one() + z), T::zero()),
                Complex::new(half * x, -half * y),
                Complex::new(half * x, half * y),
                Complex::new(half * (T::one() - z), T::zero()),
            ],
        );
        Ok(Self { matrix: HermitianMatrix::hermitize(m) })
    }

    /// Bloch vector `(x, y, z)` of a qubit state.
    pub fn bloch_vector(&self) -> Option<[T; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let off = self.matrix.entry(1, 0);
        let two = T::lit(2.0);
        let z = self.matrix.entry(0, 0).re - self.matrix.entry(1, 1).re;
        Some([two * off.re, two * off.im, z])
    }

    /// Gibbs state `e^{-βH}/Z` together with `ln Z`.
    pub fn thermal(h: &HermitianMatrix<T>, beta: T) -> (Self, T) {
        let e = h.eig();
        // shift by the ground energy to keep exponentials bounded
        let e0 = e.eigenvalues[0];
        let weights: Vec<T> = e.eigenvalues.iter().map(|&en| (-beta * (en - e0)).exp()).collect();
        let z_shift = weights.iter().fold(T::zero(), |s, &w| s + w);
        let rho = e.compose_with(|en| (-beta * (en - e0)).exp() / z_shift);
        (Self { matrix: rho }, z_shift.ln() - beta * e0)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix<T> {
        &self.matrix
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        self.matrix.as_matrix()
    }

    pub fn into_hermitian(self) -> HermitianMatrix<T> {
        self.matrix
    }

    pub fn transpose(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    pub fn is_full_rank(&self) -> bool {
        self.matrix.is_full_rank()
    }

    /// Convex combination `w·self + (1-w)·other`.
    pub fn mix(&self, other: &Self, w: T) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("mixing states of different dimension".into()));
        }
        Ok(Self { matrix: &self.matrix.scale(w) + &other.matrix.scale(T::one() - w) })
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> T {
        let diff = &self.matrix - &other.matrix;
        diff.eigenvalues().iter().fold(T::zero(), |s, l| s + l.abs()) * T::lit(0.5)
    }
}

impl<T: Real> AsRef<HermitianMatrix<T>> for DensityMatrix<T> {
    fn as_ref(&self) -> &HermitianMatrix<T> {
        &self.matrix
    }
}
