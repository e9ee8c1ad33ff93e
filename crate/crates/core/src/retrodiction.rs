//! Petz transpose maps.

use nalgebra::DMatrix;

use crate::channel::{Dilation, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{swap_factors, transpose_fixed_basis, ComplexMatrix, HermitianMatrix};
use crate::scalar::{cplx, Real};
use crate::state::DensityMatrix;

/// Errors with `SingularPrior` unless `supp(x) ⊆ supp(prior)`.
pub(crate) fn check_support<T: Real>(x: &HermitianMatrix<T>, prior: &HermitianMatrix<T>, what: &str) -> Result<()> {
    if !x.support_within(prior) {
        let leak = x.support_leak(prior);
        return Err(Error::SingularPrior(format!("{what}: weight {:e} outside the prior's support", leak.as_f64())));
    }
    Ok(())
}

/// `R(τ) = √γ E^dag[E(γ)^{-1/2} τ E(γ)^{-1/2}] √γ`.
pub fn petz_apply<T: Real>(
    channel: &QuantumChannel<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    if gamma.dim() != channel.dim_in() || tau.dim() != channel.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "Petz map of a {}->{} channel with prior of dimension {} and input of dimension {}",
            channel.dim_in(),
            channel.dim_out(),
            gamma.dim(),
            tau.dim()
        )));
    }
    let e_gamma = channel.apply(gamma)?;
    check_support(tau.as_hermitian(), e_gamma.as_hermitian(), "Petz map input")?;
    let m = e_gamma.as_hermitian().inv_sqrt()?;
    let inner = tau.as_hermitian().congruence(m.as_matrix());
    let pulled = channel.adjoint_apply(&inner)?;
    let sg = gamma.as_hermitian().sqrt()?;
    Ok(DensityMatrix::from_hermitian_unchecked(pulled.congruence(sg.as_matrix())))
}

/// Petz transpose map of a channel at a fixed full-rank prior.
#[derive(Clone, Debug)]
pub struct ReverseChannel<T: Real> {
    pub base: QuantumChannel<T>,
    pub prior: DensityMatrix<T>,
    pub choi_reverse: HermitianMatrix<T>,
    reverse: QuantumChannel<T>,
}

pub fn petz_reverse_channel<T: Real>(channel: &QuantumChannel<T>, gamma: &DensityMatrix<T>) -> Result<ReverseChannel<T>> {
    if gamma.dim() != channel.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "prior of dimension {} for a channel on dimension {}",
            gamma.dim(),
            channel.dim_in()
        )));
    }
    if !gamma.is_full_rank() {
        return Err(Error::SingularPrior("prior is not full rank".into()));
    }
    let e_gamma = channel.apply(gamma)?;
    if !e_gamma.is_full_rank() {
        return Err(Error::SingularPrior("image of the prior is not full rank".into()));
    }
    let m = e_gamma.as_hermitian().inv_sqrt()?;
    let sg = gamma.as_hermitian().sqrt()?;
    let reverse = QuantumChannel::from_action(channel.dim_out(), channel.dim_in(), |t| {
        let inner = &m.as_matrix().clone() * t * m.as_matrix();
        let pulled = channel.adjoint_apply_operator(&inner).expect("dimensions checked");
        sg.as_matrix() * pulled * sg.as_matrix()
    })?;
    Ok(ReverseChannel {
        base: channel.clone(),
        prior: gamma.clone(),
        choi_reverse: reverse.choi().clone(),
        reverse,
    })
}

impl<T: Real> ReverseChannel<T> {
    pub fn channel(&self) -> &QuantumChannel<T> {
        &self.reverse
    }

    pub fn apply(&self, tau: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.reverse.apply(tau)
    }

    /// `(E(γ)^{-1/2} ⊗ √γ^T) C_E (E(γ)^{-1/2} ⊗ √γ^T)`, which equals the
    /// transpose of the reverse Choi operator reordered to `H_out ⊗ H_in`.
    pub fn choi_from_forward(&self) -> Result<HermitianMatrix<T>> {
        let e_gamma = self.base.apply(&self.prior)?;
        let m = e_gamma.as_hermitian().inv_sqrt()?;
        let sgt = self.prior.as_hermitian().sqrt()?.transpose();
        Ok(self.base.choi().congruence(m.kron(&sgt).as_matrix()))
    }

    /// Max-entry gap between both sides of the Choi relation.
    pub fn choi_relation_defect(&self) -> Result<T> {
        let lhs = self.swapped_choi_transpose();
        Ok(lhs.max_abs_diff(&self.choi_from_forward()?))
    }

    /// `C_R^T` with factors ordered `H_out ⊗ H_in` of the forward channel.
    pub fn swapped_choi_transpose(&self) -> HermitianMatrix<T> {
        let (din, dout) = (self.base.dim_in(), self.base.dim_out());
        HermitianMatrix::hermitize(transpose_fixed_basis(&swap_factors(self.choi_reverse.as_matrix(), (din, dout))))
    }

    /// Isometry `(√C_E ⊗ √γ)(E(γ)^{-1/2} ⊗ |Φ+⟩)` from `H_out` into
    /// `H_in ⊗ (H_out ⊗ H_in')`. Its output marginal is `R(τ)` and its
    /// environment marginal is the reverse state over time `Q_R(τ)`.
    pub fn dilation(&self) -> Result<Dilation<T>> {
        let (din, dout) = (self.base.dim_in(), self.base.dim_out());
        let denv = dout * din;
        let e_gamma = self.base.apply(&self.prior)?;
        let m = e_gamma.as_hermitian().inv_sqrt()?;
        let m = m.as_matrix();
        let sc = self.base.sqrt_choi().as_matrix();
        let sg = self.prior.as_hermitian().sqrt()?;
        let sg = sg.as_matrix();
        let mut v: ComplexMatrix<T> = DMatrix::zeros(din * denv, dout);
        for a in 0..din {
            for env in 0..denv {
                for beta in 0..dout {
                    let mut s = cplx(T::zero());
                    for b1 in 0..dout {
                        for k in 0..din {
                            s += sc[(env, b1 * din + k)] * sg[(a, k)] * m[(b1, beta)];
                        }
                    }
                    v[(a * denv + env, beta)] = s;
                }
            }
        }
        Ok(Dilation { isometry: v, dim_in: dout, dim_out: din, dim_env: denv })
    }
}
