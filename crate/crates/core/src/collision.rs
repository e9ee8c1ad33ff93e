//! Collisional homogenization: a system qubit repeatedly meets fresh ancillas
//! prepared in `ξ` through the partial swap `U = cos φ 𝟙 + i sin φ U_swap`.

use nalgebra::{Complex, DMatrix};

use crate::channel::{choi_from_kraus, compose, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::scalar::{cplx, modulus, Real};
use crate::state::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionModel<T: Real> {
    /// `⟨0|ξ|0⟩`.
    pub xi_population: T,
    /// `⟨0|ξ|1⟩`; must be zero, the interaction is defined in the eigenbasis of `ξ`.
    pub xi_coherence: Complex<T>,
    pub phi: T,
    pub n: usize,
}

impl<T: Real> CollisionModel<T> {
    pub fn new(xi_population: T, phi: T, n: usize) -> Result<Self> {
        let m = Self { xi_population, xi_coherence: Complex::new(T::zero(), T::zero()), phi, n };
        m.validate()?;
        Ok(m)
    }

    pub fn with_collisions(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi_population >= T::zero() && self.xi_population <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "ancilla population {} outside [0, 1]",
                self.xi_population.as_f64()
            )));
        }
        if modulus(self.xi_coherence) != T::zero() {
            return Err(Error::InvalidParameter("ancilla state must be diagonal (xi_coherence = 0)".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("number of collisions must be positive".into()));
        }
        Ok(())
    }

    pub fn xi(&self) -> DensityMatrix<T> {
        DensityMatrix::from_hermitian_unchecked(HermitianMatrix::from_real_diagonal(&[
            self.xi_population,
            T::one() - self.xi_population,
        ]))
    }

    /// `c = cos φ`.
    pub fn c(&self) -> T {
        self.phi.cos()
    }

    /// `k = ½[1 + cos 2φ + i sin 2φ (2⟨0|ξ|0⟩ − 1)]`.
    pub fn k(&self) -> Complex<T> {
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        Complex::new(
            half * (T::one() + (two * self.phi).cos()),
            half * (two * self.phi).sin() * (two * self.xi_population - T::one()),
        )
    }

    /// Interaction unitary on system ⊗ ancilla.
    pub fn interaction_unitary(&self) -> ComplexMatrix<T> {
        let (s, c) = self.phi.sin_cos();
        let mut u = ComplexMatrix::<T>::identity(4, 4) * cplx(c);
        let swap = DMatrix::from_fn(4, 4, |r, col| {
            let (a, b) = (r / 2, r % 2);
            if col == b * 2 + a {
                cplx(T::one())
            } else {
                cplx(T::zero())
            }
        });
        u += swap * Complex::new(T::zero(), s);
        u
    }

    /// Kraus operators `√ξ_b ⟨a|_anc U |b⟩_anc` of one collision.
    pub fn single_step_kraus(&self) -> Vec<ComplexMatrix<T>> {
        let u = self.interaction_unitary();
        let xi = [self.xi_population, T::one() - self.xi_population];
        let mut out = Vec::new();
        for a in 0..2 {
            for (b, &w) in xi.iter().enumerate() {
                if w == T::zero() {
                    continue;
                }
                let k = DMatrix::from_fn(2, 2, |i, j| u[(i * 2 + a, j * 2 + b)] * cplx(w.sqrt()));
                out.push(k);
            }
        }
        out
    }

    /// `N^n(X)` from the closed form, extended linearly to arbitrary `X`.
    pub fn closed_form_apply(&self, x: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let n = self.n as i32;
        let c2n = self.c().powi(2 * n);
        let kn = self.k().powi(n);
        let tr = x[(0, 0)] + x[(1, 1)];
        let p00 = x[(0, 0)] * cplx(c2n) + tr * cplx((T::one() - c2n) * self.xi_population);
        DMatrix::from_row_slice(2, 2, &[p00, x[(0, 1)] * kn, x[(1, 0)] * kn.conj(), tr - p00])
    }

    /// `N^n` built from the closed form.
    pub fn closed_form_channel(&self) -> Result<QuantumChannel<T>> {
        self.validate()?;
        QuantumChannel::from_action(2, 2, |x| self.closed_form_apply(x))
    }

    /// `N^n` built by composing the one-collision Kraus channel `n` times.
    pub fn iterated_channel(&self) -> Result<QuantumChannel<T>> {
        self.validate()?;
        let step = choi_from_kraus(&self.single_step_kraus())?;
        let mut acc = step.clone();
        for _ in 1..self.n {
            acc = compose(&step, &acc)?;
        }
        Ok(acc)
    }
}

/// The `n`-collision channel; the closed form is used so large `n` does not
/// accumulate rounding error.
pub fn collision_channel<T: Real>(model: &CollisionModel<T>) -> Result<QuantumChannel<T>> {
    model.closed_form_channel()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn k_at_quarter_pi_with_pure_ancilla() {
        let m = CollisionModel::new(1.0, FRAC_PI_4, 1).unwrap();
        let k = m.k();
        assert!((k.re - 0.5).abs() < 1e-15 && (k.im - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi_zero_is_identity() {
        let m = CollisionModel::new(0.8, 0.0, 3).unwrap();
        let ch = collision_channel(&m).unwrap();
        assert!(ch.choi().max_abs_diff(QuantumChannel::identity(2).choi()) < 1e-15);
    }

    #[test]
    fn half_pi_replaces_with_xi() {
        let m = CollisionModel::new(0.7, FRAC_PI_2, 1).unwrap();
        let ch = collision_channel(&m).unwrap();
        let rho = DensityMatrix::from_bloch(0.4, -0.3, 0.6).unwrap();
        assert!(ch.apply(&rho).unwrap().as_hermitian().max_abs_diff(m.xi().as_hermitian()) < 1e-15);
        let it = m.iterated_channel().unwrap();
        assert!(it.apply(&rho).unwrap().as_hermitian().max_abs_diff(m.xi().as_hermitian()) < 1e-15);
    }

    #[test]
    fn kraus_matches_closed_form_one_and_two_steps() {
        let m = CollisionModel::new(0.9, 0.37, 1).unwrap();
        for n in [1, 2, 5] {
            let mm = m.with_collisions(n);
            let a = mm.iterated_channel().unwrap();
            let b = mm.closed_form_channel().unwrap();
            assert!(a.choi().max_abs_diff(b.choi()) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CollisionModel::new(1.2, 0.1, 1).is_err());
        assert!(CollisionModel::new(0.5, 0.1, 0).is_err());
        let mut m = CollisionModel::new(0.5, 0.1, 1).unwrap();
        m.xi_coherence = Complex::new(0.1, 0.0);
        assert!(matches!(collision_channel(&m), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn full_rank_for_mixed_ancilla() {
        let m = CollisionModel::new(0.9, 0.2, 1).unwrap();
        let flags = collision_channel(&m).unwrap().rank_flags();
        assert!(flags.full_rank_choi && !flags.unital && !flags.unitary);
        let e = collision_channel(&m).unwrap().choi().eigenvalues();
        assert!(e[0] > 1e-6);
    }
}
