use crate::channel::{measurement_channel, Povm};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, ComplexMatrix, HermitianMatrix};
use crate::scalar::Real;
use crate::state::DensityMatrix;
use crate::state_over_time::{q_forward, q_reverse};

use super::divergence::{bs_divergence, umegaki, von_neumann_entropy};
use super::operator::{average_from, sigma_operator, EntropyOperator};

/// Entropy production of the quantum-to-classical channel
/// `M(ρ) = Σ_i Tr[Π_i ρ] |i⟩⟨i|`.
#[derive(Clone, Debug)]
pub struct QcEntropy<T: Real> {
    pub operator: EntropyOperator<T>,
    /// `Σ_i |i⟩⟨i| ⊗ (Σ[√Π_i ρ √Π_i, √Π_i γ √Π_i]^T − ln(τ_i / M(γ)_i) P_i)`
    /// with `P_i` the support projector of block `i`.
    pub block_matrix: HermitianMatrix<T>,
    /// `Tr[Q_F Σ]`.
    pub average: T,
    /// `D_BS(ρ‖γ) − D(M(ρ)‖M(γ)) + D(M(ρ)‖τ)`; equal to `average` when
    /// every effect is invertible or the effects commute with `ρ` and `γ`.
    pub three_term: T,
}

fn log_ratio_block<T: Real>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    b.pinv()?.congruence(a.sqrt()?.as_matrix()).log()
}

pub fn qc_entropy<T: Real>(
    povm: &Povm<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<QcEntropy<T>> {
    let n = povm.outcomes();
    let d = povm.dim();
    if tau.dim() != n {
        return Err(Error::DimensionMismatch(format!("{n} outcomes but reference of dimension {}", tau.dim())));
    }
    let off = tau.as_matrix() - ComplexMatrix::from_diagonal(&tau.as_matrix().diagonal());
    if max_abs(&off) > T::hermiticity_tol() {
        return Err(Error::PreconditionViolation("reference state must be diagonal in the outcome basis".into()));
    }
    let m = measurement_channel(povm)?;
    let qf = q_forward(&m, rho)?;
    let qr = q_reverse(&m, gamma, tau)?;
    let operator = sigma_operator(&qf, &qr)?;
    let average = average_from(&operator, &qf);

    let p_gamma = povm.probabilities(gamma);
    let mut block_matrix = ComplexMatrix::zeros(n * d, n * d);
    for (i, effect) in povm.effects().iter().enumerate() {
        let root = effect.sqrt()?;
        let a = rho.as_hermitian().congruence(root.as_matrix());
        let b = gamma.as_hermitian().congruence(root.as_matrix());
        let mut block = log_ratio_block(&a, &b)?.transpose();
        let support = a.support_projector().transpose();
        if a.rank() > 0 {
            let shift = (tau.as_hermitian().entry(i, i).re / p_gamma[i]).ln();
            block = &block - &support.scale(shift);
        }
        block_matrix.view_mut((i * d, i * d), (d, d)).copy_from(block.as_matrix());
    }

    let m_rho = m.apply(rho)?;
    let m_gamma = m.apply(gamma)?;
    let three_term = bs_divergence(rho, gamma)? - umegaki(&m_rho, &m_gamma)? + umegaki(&m_rho, tau)?;
    Ok(QcEntropy { operator, block_matrix: HermitianMatrix::hermitize(block_matrix), average, three_term })
}

/// `S(ρ) + D_BS(ρ‖γ) − D(M(ρ)‖M(γ))`.
pub fn observational_entropy<T: Real>(povm: &Povm<T>, rho: &DensityMatrix<T>, gamma: &DensityMatrix<T>) -> Result<T> {
    let m = measurement_channel(povm)?;
    let m_rho = m.apply(rho)?;
    let m_gamma = m.apply(gamma)?;
    Ok(von_neumann_entropy(rho) + bs_divergence(rho, gamma)? - umegaki(&m_rho, &m_gamma)?)
}
