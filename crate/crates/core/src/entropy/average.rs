use crate::channel::{compose, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::scalar::Real;
use crate::state::DensityMatrix;
use crate::state_over_time::{output_weight, q_forward, q_reverse_with, ReverseRule};

use super::divergence::{bs_divergence, umegaki};
use super::operator::avg_def2;

/// `D(ρ‖γ) − D(E(ρ)‖E(γ)) + D(E(ρ)‖τ)`.
pub fn avg_def1<T: Real>(
    channel: &QuantumChannel<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<T> {
    let e_rho = channel.apply(rho)?;
    let e_gamma = channel.apply(gamma)?;
    Ok(umegaki(rho, gamma)? - umegaki(&e_rho, &e_gamma)? + umegaki(&e_rho, tau)?)
}

/// `D_BS(ρ‖γ) − Tr[E(ρ) ln E(γ)^{-1/2} τ E(γ)^{-1/2}]`.
pub fn avg_explicit<T: Real>(
    channel: &QuantumChannel<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<T> {
    avg_explicit_with(channel, rho, gamma, tau, ReverseRule::Petz)
}

/// As [`avg_explicit`] with the output weight `A` of the chosen reverse rule
/// in place of `E(γ)^{-1/2} τ E(γ)^{-1/2}`.
pub fn avg_explicit_with<T: Real>(
    channel: &QuantumChannel<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
    rule: ReverseRule,
) -> Result<T> {
    if !channel.choi().is_full_rank() {
        return Err(Error::NotFullRank("closed-form average needs a full-rank Choi operator".into()));
    }
    if !gamma.is_full_rank() {
        return Err(Error::SingularPrior("prior is not full rank".into()));
    }
    let e_gamma = channel.apply(gamma)?;
    if !e_gamma.is_full_rank() {
        return Err(Error::SingularPrior("image of the prior is not full rank".into()));
    }
    let a = output_weight(channel, gamma, tau, rule)?;
    let e_rho = channel.apply(rho)?;
    Ok(bs_divergence(rho, gamma)? - expect_log(e_rho.as_hermitian(), &a)?)
}

/// `Tr[σ ln A]`, requiring `supp σ ⊆ supp A`.
fn expect_log<T: Real>(sigma: &HermitianMatrix<T>, a: &HermitianMatrix<T>) -> Result<T> {
    if !sigma.support_within(a) {
        return Err(Error::SupportMismatch("output weight is singular on the support of E(ρ)".into()));
    }
    Ok(sigma.trace_product(&a.log()?))
}

/// Average entropy production for any channel the theory covers: unitary
/// channels go through the states over time (and give zero), full-rank
/// channels through the closed form.
pub fn entropy_production<T: Real>(
    channel: &QuantumChannel<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
    rule: ReverseRule,
) -> Result<T> {
    let flags = channel.rank_flags();
    if flags.unitary {
        let qf = q_forward(channel, rho)?;
        let qr = q_reverse_with(channel, gamma, tau, rule)?;
        return avg_def2(&qf, &qr);
    }
    if !flags.full_rank_choi {
        return Err(Error::NotFullRank(
            "entropy production is only defined for unitary or full-rank channels".into(),
        ));
    }
    avg_explicit_with(channel, rho, gamma, tau, rule)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperadditivityReport<T> {
    pub avg_step1: T,
    pub avg_step2: T,
    pub avg_total: T,
    /// `avg_step1 + avg_step2 − avg_total`.
    pub gap: T,
    /// `D_BS(E₁(ρ)‖E₁(γ)) − Tr[E₁(ρ) ln E₁(γ)^{-1/2} τ₁ E₁(γ)^{-1/2}]`.
    pub gap_closed_form: T,
}

/// Compares the entropy produced by `E₂∘E₁` with the sum over both steps.
/// The second step uses `E₁(ρ)` and `E₁(γ)` as input and prior; the whole
/// process uses `γ` and `τ₂`.
pub fn superadditivity<T: Real>(
    e1: &QuantumChannel<T>,
    e2: &QuantumChannel<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau1: &DensityMatrix<T>,
    tau2: &DensityMatrix<T>,
) -> Result<SuperadditivityReport<T>> {
    let total = compose(e2, e1)?;
    let rho1 = e1.apply(rho)?;
    let gamma1 = e1.apply(gamma)?;
    let avg_step1 = avg_explicit(e1, rho, gamma, tau1)?;
    let avg_step2 = avg_explicit(e2, &rho1, &gamma1, tau2)?;
    let avg_total = avg_explicit(&total, rho, gamma, tau2)?;
    let m = gamma1.as_hermitian().inv_sqrt()?;
    let a1 = tau1.as_hermitian().congruence(m.as_matrix());
    let gap_closed_form = bs_divergence(&rho1, &gamma1)? - expect_log(rho1.as_hermitian(), &a1)?;
    Ok(SuperadditivityReport {
        avg_step1,
        avg_step2,
        avg_total,
        gap: avg_step1 + avg_step2 - avg_total,
        gap_closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{collision_channel, CollisionModel};
    use crate::random;
    use crate::state_over_time::q_reverse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_at_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ch = random::channel::<f64, _>(&mut rng, 2, 3);
        let g = random::state(&mut rng, 2);
        let eg = ch.apply(&g).unwrap();
        assert!(avg_def1(&ch, &g, &g, &eg).unwrap().abs() < 1e-12);
        assert!(avg_explicit(&ch, &g, &g, &eg).unwrap().abs() < 1e-10);
        let t = random::state(&mut rng, 3);
        let d = umegaki(&eg, &t).unwrap();
        assert!((avg_def1(&ch, &g, &g, &t).unwrap() - d).abs() < 1e-12);
    }

    #[test]
    fn explicit_matches_operator_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for k in 0..200 {
            let (din, dout) = if k % 2 == 0 { (2, 2) } else { (3, 3) };
            let ch = random::channel::<f64, _>(&mut rng, din, dout);
            let rho = random::state(&mut rng, din);
            let g = random::state(&mut rng, din);
            let t = random::state(&mut rng, dout);
            let qf = q_forward(&ch, &rho).unwrap();
            let qr = q_reverse(&ch, &g, &t).unwrap();
            let a2 = avg_def2(&qf, &qr).unwrap();
            assert!(a2 >= -1e-10);
            let ae = avg_explicit(&ch, &rho, &g, &t).unwrap();
            assert!((a2 - ae).abs() < 1e-9, "{a2} vs {ae}");
        }
    }

    #[test]
    fn tau_equal_output_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let ch = random::channel::<f64, _>(&mut rng, 2, 2);
            let rho = random::state(&mut rng, 2);
            let g = random::state(&mut rng, 2);
            let er = ch.apply(&rho).unwrap();
            let bound = bs_divergence(&rho, &g).unwrap() - umegaki(&er, &ch.apply(&g).unwrap()).unwrap();
            assert!(avg_explicit(&ch, &rho, &g, &er).unwrap() >= bound - 1e-9);
        }
    }

    #[test]
    fn commuting_reference_reduces_to_three_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let phi = random::stochastic_matrix::<f64, _>(&mut rng, 3, 2);
        let ch = QuantumChannel::measure_and_prepare(&phi).unwrap();
        // measure-and-prepare channels have diagonal full-rank Choi operators
        let rho = random::state(&mut rng, 2);
        let g = random::diagonal_state(&mut rng, 2);
        let t = random::diagonal_state(&mut rng, 3);
        let er = ch.apply(&rho).unwrap();
        let expected = bs_divergence(&rho, &g).unwrap() - umegaki(&er, &ch.apply(&g).unwrap()).unwrap()
            + umegaki(&er, &t).unwrap();
        assert!((avg_explicit(&ch, &rho, &g, &t).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn collision_z_axis_matches_def1() {
        let model = CollisionModel::new(0.9, 0.2, 1).unwrap();
        let ch = collision_channel(&model).unwrap();
        let xi = model.xi();
        for z in [-0.9f64, -0.3, 0.0, 0.5, 0.95] {
            let rho = DensityMatrix::from_bloch(0.0, 0.0, z).unwrap();
            let t = ch.apply(&rho).unwrap();
            let a = avg_explicit(&ch, &rho, &xi, &t).unwrap();
            let b = avg_def1(&ch, &rho, &xi, &t).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unitary_produces_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let ch = random::unitary_channel::<f64, _>(&mut rng, 2);
        let rho = random::state(&mut rng, 2);
        let g = random::state(&mut rng, 2);
        let t = random::state(&mut rng, 2);
        assert!(entropy_production(&ch, &rho, &g, &t, ReverseRule::Petz).unwrap().abs() < 1e-9);
        assert!(matches!(avg_explicit(&ch, &rho, &g, &t), Err(Error::NotFullRank(_))));
        let pinch = QuantumChannel::measure_and_prepare(&nalgebra::DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(
            entropy_production(&pinch, &rho, &g, &t, ReverseRule::Petz),
            Err(Error::NotFullRank(_))
        ));
    }

    #[test]
    fn superadditivity_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for _ in 0..20 {
            let e1 = random::channel::<f64, _>(&mut rng, 2, 2);
            let e2 = random::channel::<f64, _>(&mut rng, 2, 2);
            let rho = random::state(&mut rng, 2);
            let g = random::state(&mut rng, 2);
            let t1 = random::state(&mut rng, 2);
            let t2 = random::state(&mut rng, 2);
            let rep = superadditivity(&e1, &e2, &rho, &g, &t1, &t2).unwrap();
            assert!((rep.gap - rep.gap_closed_form).abs() < 1e-9);
            assert!(rep.gap > 0.0);
        }
        let e1 = random::channel::<f64, _>(&mut rng, 2, 2);
        let e2 = random::channel::<f64, _>(&mut rng, 2, 2);
        let g = random::state(&mut rng, 2);
        let g1 = e1.apply(&g).unwrap();
        let rep = superadditivity(&e1, &e2, &g, &g, &g1, &e2.apply(&g1).unwrap()).unwrap();
        assert!(rep.avg_step1.abs() < 1e-9 && rep.avg_step2.abs() < 1e-9 && rep.avg_total.abs() < 1e-9);
        assert!(rep.gap.abs() < 1e-9);
    }

    #[test]
    fn superadditivity_closes_for_commuting_matched_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let phi1 = random::stochastic_matrix::<f64, _>(&mut rng, 2, 2);
        let e1 = QuantumChannel::measure_and_prepare(&phi1).unwrap();
        let e2 = random::channel::<f64, _>(&mut rng, 2, 2);
        let rho = random::diagonal_state(&mut rng, 2);
        let g = random::diagonal_state(&mut rng, 2);
        let t1 = e1.apply(&rho).unwrap();
        let t2 = random::state(&mut rng, 2);
        let rep = superadditivity(&e1, &e2, &rho, &g, &t1, &t2).unwrap();
        assert!(rep.gap.abs() < 1e-9);
    }
}
