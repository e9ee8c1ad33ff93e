//! Two-time operators on `H_out ⊗ H_in` describing a process together with
//! its input.

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Keep};
use crate::retrodiction::check_support;
use crate::scalar::Real;
use crate::state::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
    ReverseVariant,
}

/// Update rule producing the output weight `A` in `Q_R = √C (A ⊗ γ^T) √C`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReverseRule {
    /// `A = E(γ)^{-1/2} τ E(γ)^{-1/2}`.
    #[default]
    Petz,
    /// `A = [√τ (√τ E(γ) √τ)^{-1/2} √τ]²`.
    Variant,
}

#[derive(Clone, Debug)]
pub struct StateOverTime<T: Real> {
    pub matrix: HermitianMatrix<T>,
    pub dim_out: usize,
    pub dim_in: usize,
    pub direction: Direction,
    pub tilde: bool,
}

impl<T: Real> StateOverTime<T> {
    pub fn dims(&self) -> (usize, usize) {
        (self.dim_out, self.dim_in)
    }

    pub fn trace(&self) -> T {
        self.matrix.trace()
    }

    /// `Tr_in`, a state on the output space.
    pub fn output_marginal(&self) -> HermitianMatrix<T> {
        self.matrix.partial_trace(self.dims(), Keep::First).expect("dims consistent")
    }

    /// `Tr_out`, an operator on the input space.
    pub fn input_marginal(&self) -> HermitianMatrix<T> {
        self.matrix.partial_trace(self.dims(), Keep::Second).expect("dims consistent")
    }

    pub fn spectrum(&self) -> Vec<T> {
        self.matrix.eigenvalues()
    }
}

fn check_input<T: Real>(channel: &QuantumChannel<T>, rho: &DensityMatrix<T>, what: &str) -> Result<()> {
    if rho.dim() != channel.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "{what} has dimension {} but the channel acts on dimension {}",
            rho.dim(),
            channel.dim_in()
        )));
    }
    Ok(())
}

fn check_output<T: Real>(channel: &QuantumChannel<T>, tau: &DensityMatrix<T>) -> Result<()> {
    if tau.dim() != channel.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "reference state has dimension {} but the channel outputs dimension {}",
            tau.dim(),
            channel.dim_out()
        )));
    }
    Ok(())
}

fn wrap<T: Real>(channel: &QuantumChannel<T>, matrix: HermitianMatrix<T>, direction: Direction, tilde: bool) -> StateOverTime<T> {
    StateOverTime { matrix, dim_out: channel.dim_out(), dim_in: channel.dim_in(), direction, tilde }
}

/// `Q̃_F = (𝟙 ⊗ √ρ^T) C_E (𝟙 ⊗ √ρ^T)`.
pub fn q_forward_tilde<T: Real>(channel: &QuantumChannel<T>, rho: &DensityMatrix<T>) -> Result<StateOverTime<T>> {
    check_input(channel, rho, "input state")?;
    let w = HermitianMatrix::identity(channel.dim_out()).kron(&rho.as_hermitian().sqrt()?.transpose());
    Ok(wrap(channel, channel.choi().congruence(w.as_matrix()), Direction::Forward, true))
}

/// `Q_F = √C_E (𝟙 ⊗ ρ^T) √C_E`.
pub fn q_forward<T: Real>(channel: &QuantumChannel<T>, rho: &DensityMatrix<T>) -> Result<StateOverTime<T>> {
    check_input(channel, rho, "input state")?;
    let mid = HermitianMatrix::identity(channel.dim_out()).kron(&rho.as_hermitian().transpose());
    Ok(wrap(channel, channel.sqrt_choi().sandwich(&mid), Direction::Forward, false))
}

/// Output weight `A` of the reverse process; `Tr A·E(γ) = 1` and, for the
/// Petz rule, `E^dag`-pulling `A` reproduces the retrodicted input.
pub fn output_weight<T: Real>(
    channel: &QuantumChannel<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
    rule: ReverseRule,
) -> Result<HermitianMatrix<T>> {
    check_input(channel, gamma, "prior")?;
    check_output(channel, tau)?;
    let e_gamma = channel.apply(gamma)?;
    match rule {
        ReverseRule::Petz => {
            check_support(tau.as_hermitian(), e_gamma.as_hermitian(), "reference state")?;
            let m = e_gamma.as_hermitian().inv_sqrt()?;
            Ok(tau.as_hermitian().congruence(m.as_matrix()))
        }
        ReverseRule::Variant => {
            let st = tau.as_hermitian().sqrt()?;
            let inner = e_gamma.as_hermitian().congruence(st.as_matrix());
            check_support(tau.as_hermitian(), &inner, "reference state")?;
            let b = inner.inv_sqrt()?.congruence(st.as_matrix());
            Ok(HermitianMatrix::hermitize(b.as_matrix() * b.as_matrix()))
        }
    }
}

pub fn q_reverse_with<T: Real>(
    channel: &QuantumChannel<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
    rule: ReverseRule,
) -> Result<StateOverTime<T>> {
    let a = output_weight(channel, gamma, tau, rule)?;
    let mid = a.kron(&gamma.as_hermitian().transpose());
    let direction = match rule {
        ReverseRule::Petz => Direction::Reverse,
        ReverseRule::Variant => Direction::ReverseVariant,
    };
    Ok(wrap(channel, channel.sqrt_choi().sandwich(&mid), direction, false))
}

/// `Q_R = √C_E (E(γ)^{-1/2} τ E(γ)^{-1/2} ⊗ γ^T) √C_E`.
pub fn q_reverse<T: Real>(
    channel: &QuantumChannel<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<StateOverTime<T>> {
    q_reverse_with(channel, gamma, tau, ReverseRule::Petz)
}

pub fn q_reverse_variant<T: Real>(
    channel: &QuantumChannel<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<StateOverTime<T>> {
    q_reverse_with(channel, gamma, tau, ReverseRule::Variant)
}

/// `Q̃_R = (√τ E(γ)^{-1/2} ⊗ √γ^T) C_E (E(γ)^{-1/2} √τ ⊗ √γ^T)`.
pub fn q_reverse_tilde<T: Real>(
    channel: &QuantumChannel<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<StateOverTime<T>> {
    check_input(channel, gamma, "prior")?;
    check_output(channel, tau)?;
    let e_gamma = channel.apply(gamma)?;
    check_support(tau.as_hermitian(), e_gamma.as_hermitian(), "reference state")?;
    let m = e_gamma.as_hermitian().inv_sqrt()?;
    let left = tau.as_hermitian().sqrt()?.as_matrix() * m.as_matrix();
    let sgt = gamma.as_hermitian().sqrt()?.transpose();
    let w = left.kronecker(sgt.as_matrix());
    Ok(wrap(channel, channel.choi().congruence(&w), Direction::Reverse, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spectra_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn forward_tilde_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let ch = random::channel::<f64, _>(&mut rng, 2, 3);
            let rho = random::state(&mut rng, 2);
            let q = q_forward_tilde(&ch, &rho).unwrap();
            assert!((q.trace() - 1.0).abs() < 1e-10);
            assert!(q.input_marginal().max_abs_diff(&rho.as_hermitian().transpose()) < 1e-10);
            assert!(q.output_marginal().max_abs_diff(ch.apply(&rho).unwrap().as_hermitian()) < 1e-10);
        }
    }

    #[test]
    fn forward_identity_maximally_mixed() {
        let ch = QuantumChannel::<f64>::identity(2);
        let rho = DensityMatrix::maximally_mixed(2);
        let q = q_forward_tilde(&ch, &rho).unwrap();
        assert!(q.matrix.max_abs_diff(&ch.choi().scale(0.5)) < 1e-15);
        let q = q_forward(&ch, &rho).unwrap();
        assert!(q.matrix.max_abs_diff(&ch.choi().scale(0.5)) < 1e-12);
    }

    #[test]
    fn forward_spectra_agree_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ch = random::channel::<f64, _>(&mut rng, 3, 2);
        let r1 = random::state(&mut rng, 3);
        let r2 = random::state(&mut rng, 3);
        let a = q_forward(&ch, &r1).unwrap();
        let b = q_forward_tilde(&ch, &r1).unwrap();
        assert!(spectra_close(&a.spectrum(), &b.spectrum(), 1e-11));
        let mix = r1.mix(&r2, 0.3).unwrap();
        let lhs = q_forward(&ch, &mix).unwrap().matrix;
        let rhs = &q_forward(&ch, &r1).unwrap().matrix.scale(0.3) + &q_forward(&ch, &r2).unwrap().matrix.scale(0.7);
        assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn forward_is_complementary_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ch = random::channel::<f64, _>(&mut rng, 2, 3);
        let rho = random::state(&mut rng, 2);
        let env = ch.complementary_apply(&rho).unwrap();
        let q = q_forward(&ch, &rho).unwrap();
        assert!(env.as_hermitian().max_abs_diff(&q.matrix.transpose()) < 1e-9);
    }

    #[test]
    fn reverse_equals_forward_at_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ch = random::channel::<f64, _>(&mut rng, 2, 2);
        let g = random::state(&mut rng, 2);
        let eg = ch.apply(&g).unwrap();
        let qf = q_forward(&ch, &g).unwrap();
        let qr = q_reverse(&ch, &g, &eg).unwrap();
        assert!(qf.matrix.max_abs_diff(&qr.matrix) < 1e-10);
        let qv = q_reverse_variant(&ch, &g, &eg).unwrap();
        assert!(qv.matrix.max_abs_diff(&qr.matrix) < 1e-10);
        let qft = q_forward_tilde(&ch, &g).unwrap();
        let qrt = q_reverse_tilde(&ch, &g, &eg).unwrap();
        assert!(qft.matrix.max_abs_diff(&qrt.matrix) < 1e-10);
    }

    #[test]
    fn reverse_trace_and_tilde_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let ch = random::channel::<f64, _>(&mut rng, 2, 3);
            let g = random::state(&mut rng, 2);
            let t = random::state(&mut rng, 3);
            let qr = q_reverse(&ch, &g, &t).unwrap();
            let qrt = q_reverse_tilde(&ch, &g, &t).unwrap();
            assert!((qr.trace() - 1.0).abs() < 1e-10 && (qrt.trace() - 1.0).abs() < 1e-10);
            assert!(qr.matrix.is_psd());
            assert!(spectra_close(&qr.spectrum(), &qrt.spectrum(), 1e-10));
            let qv = q_reverse_variant(&ch, &g, &t).unwrap();
            assert!((qv.trace() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn variant_matches_petz_when_commuting() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        // a diagonal-preserving channel keeps E(γ) diagonal for diagonal γ
        let phi = random::stochastic_matrix::<f64, _>(&mut rng, 3, 3);
        let ch = QuantumChannel::measure_and_prepare(&phi).unwrap();
        for _ in 0..5 {
            let g = random::diagonal_state(&mut rng, 3);
            let t = random::diagonal_state(&mut rng, 3);
            let a = q_reverse(&ch, &g, &t).unwrap();
            let b = q_reverse_variant(&ch, &g, &t).unwrap();
            assert!(a.matrix.max_abs_diff(&b.matrix) < 1e-10);
        }
    }

    #[test]
    fn variant_differs_when_not_commuting() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let ch = random::channel::<f64, _>(&mut rng, 2, 2);
        let g = random::state(&mut rng, 2);
        let t = random::state(&mut rng, 2);
        let a = q_reverse(&ch, &g, &t).unwrap();
        let b = q_reverse_variant(&ch, &g, &t).unwrap();
        assert!(a.matrix.max_abs_diff(&b.matrix) > 1e-6);
    }

    #[test]
    fn classical_joint_distributions() {
        let p = [0.2f64, 0.8];
        let phi = nalgebra::DMatrix::from_row_slice(2, 2, &[0.7, 0.4, 0.3, 0.6]);
        let ch = QuantumChannel::measure_and_prepare(&phi).unwrap();
        let rho = DensityMatrix::diagonal(&p).unwrap();
        let q = q_forward_tilde(&ch, &rho).unwrap();
        for j in 0..2 {
            for i in 0..2 {
                let entry = q.matrix.entry(j * 2 + i, j * 2 + i).re;
                assert!((entry - p[i] * phi[(j, i)]).abs() < 1e-14);
            }
        }
        let off = q.matrix.as_matrix().clone() - nalgebra::DMatrix::from_diagonal(&q.matrix.as_matrix().diagonal());
        assert!(max_abs(&off) < 1e-15);
        // reverse: q_j φ̂(i|j) with φ̂(i|j) = φ(j|i) π_i / Σ_k φ(j|k) π_k
        let pi = [0.5, 0.5];
        let qv = [0.9, 0.1];
        let g = DensityMatrix::diagonal(&pi).unwrap();
        let t = DensityMatrix::diagonal(&qv).unwrap();
        let qr = q_reverse(&ch, &g, &t).unwrap();
        for j in 0..2 {
            let norm: f64 = (0..2).map(|k| phi[(j, k)] * pi[k]).sum();
            for i in 0..2 {
                let expected = qv[j] * phi[(j, i)] * pi[i] / norm;
                assert!((qr.matrix.entry(j * 2 + i, j * 2 + i).re - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unitary_forward_equals_reverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ch = random::unitary_channel::<f64, _>(&mut rng, 2);
        let rho = random::state(&mut rng, 2);
        let g = random::state(&mut rng, 2);
        let t = random::state(&mut rng, 2);
        let qf = q_forward(&ch, &rho).unwrap();
        let qr = q_reverse(&ch, &g, &t).unwrap();
        assert!(qf.matrix.max_abs_diff(&qr.matrix) < 1e-10);
        assert_eq!(qf.matrix.rank(), 1);
    }

    #[test]
    fn reverse_dilation_environment_is_reverse_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let ch = random::channel::<f64, _>(&mut rng, 2, 2);
        let g = random::state(&mut rng, 2);
        let t = random::state(&mut rng, 2);
        let rev = crate::retrodiction::petz_reverse_channel(&ch, &g).unwrap();
        let env = rev.dilation().unwrap().environment_output(&t).unwrap();
        let qr = q_reverse(&ch, &g, &t).unwrap();
        assert!(env.as_hermitian().max_abs_diff(&qr.matrix) < 1e-9);
        let qrt = q_reverse_tilde(&ch, &g, &t).unwrap();
        assert!(spectra_close(&env.as_hermitian().eigenvalues(), &qrt.spectrum(), 1e-9));
    }
}
