use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::scalar::Real;

fn require_support<T: Real>(rho: &HermitianMatrix<T>, sigma: &HermitianMatrix<T>) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "divergence between operators of dimension {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    if !rho.support_within(sigma) {
        return Err(Error::SupportMismatch(format!(
            "first argument has weight {:e} outside the support of the second",
            rho.support_leak(sigma).as_f64()
        )));
    }
    Ok(())
}

/// `-Tr[ρ ln ρ]` in nats.
pub fn von_neumann_entropy<T: Real>(rho: &impl AsRef<HermitianMatrix<T>>) -> T {
    let e = rho.as_ref().eig();
    let thr = T::support_cutoff() * e.max_abs_eigenvalue();
    e.eigenvalues.iter().filter(|&&l| l > thr).fold(T::zero(), |s, &l| s - l * l.ln())
}

/// Umegaki relative entropy `Tr[ρ(ln ρ − ln σ)]`.
pub fn umegaki<T: Real>(rho: &impl AsRef<HermitianMatrix<T>>, sigma: &impl AsRef<HermitianMatrix<T>>) -> Result<T> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    require_support(rho, sigma)?;
    let diff = &rho.log()? - &sigma.log()?;
    Ok(rho.trace_product(&diff))
}

/// Belavkin–Staszewski relative entropy `Tr[ρ ln(√ρ σ^{-1} √ρ)]`. Also valid
/// for unnormalised positive operators.
pub fn bs_divergence<T: Real>(rho: &impl AsRef<HermitianMatrix<T>>, sigma: &impl AsRef<HermitianMatrix<T>>) -> Result<T> {
    let (rho, sigma) = (rho.as_ref(), sigma.as_ref());
    require_support(rho, sigma)?;
    let inner = sigma.pinv()?.congruence(rho.sqrt()?.as_matrix());
    Ok(rho.trace_product(&inner.log()?))
}

/// The three sides of the trace–log chain for positive definite `X, Y, Z`
/// with `Tr X = Tr Z` and `p > 0`:
/// `Tr[X ln(Y^{p/2} Z^p Y^{p/2})] ≤ Tr[X(ln X^p + ln Y^p)] ≤ Tr[X ln(X^{p/2} Y^p X^{p/2})]`.
pub fn trace_log_chain<T: Real>(
    x: &HermitianMatrix<T>,
    y: &HermitianMatrix<T>,
    z: &HermitianMatrix<T>,
    p: T,
) -> Result<[T; 3]> {
    if p.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidParameter(format!("exponent {} must be positive", p.as_f64())));
    }
    if x.dim() != y.dim() || x.dim() != z.dim() {
        return Err(Error::DimensionMismatch("trace-log chain needs three operators of equal dimension".into()));
    }
    for (m, name) in [(x, "X"), (y, "Y"), (z, "Z")] {
        if !m.is_psd() || !m.is_full_rank() {
            return Err(Error::NotFullRank(format!("{name} must be positive definite")));
        }
    }
    let (tx, tz) = (x.trace(), z.trace());
    if (tx - tz).abs() > T::normalization_tol() * tx.max(tz) {
        return Err(Error::PreconditionViolation(format!(
            "Tr X = {} differs from Tr Z = {}",
            tx.as_f64(),
            tz.as_f64()
        )));
    }
    // every operator here is positive definite, so the logarithm is taken on
    // the whole spectrum rather than above the support cutoff
    let pow = |m: &HermitianMatrix<T>, e: T| m.eig().compose_with(|l| l.powf(e));
    let ln = |m: &HermitianMatrix<T>| m.eig().compose_with(|l| l.ln());
    let half = p * T::lit(0.5);
    let lower = ln(&pow(z, p).congruence(pow(y, half).as_matrix()));
    let middle = (&ln(x) + &ln(y)).scale(p);
    let upper = ln(&pow(y, p).congruence(pow(x, half).as_matrix()));
    Ok([x.trace_product(&lower), x.trace_product(&middle), x.trace_product(&upper)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::state::DensityMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::<f64>::from_bloch(0.0, 0.6, 0.8).unwrap();
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);
        let mixed = DensityMatrix::<f64>::maximally_mixed(3);
        assert!((von_neumann_entropy(&mixed) - 3f64.ln()).abs() < 1e-14);
        let d = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
        let expected = -0.8f64 * 0.8f64.ln() - 0.2 * 0.2f64.ln();
        assert!((von_neumann_entropy(&d) - expected).abs() < 1e-14);
        assert!((expected - 0.500402).abs() < 1e-6);
    }

    #[test]
    fn umegaki_examples() {
        let r = DensityMatrix::<f64>::diagonal(&[0.8, 0.2]).unwrap();
        let s = DensityMatrix::maximally_mixed(2);
        let expected = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
        assert!((umegaki(&r, &s).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.192745).abs() < 1e-6);
        assert!(umegaki(&r, &r).unwrap().abs() < 1e-14);
        let zero = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!((umegaki(&zero, &s).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!(matches!(umegaki(&s, &zero), Err(Error::SupportMismatch(_))));
        assert!(matches!(bs_divergence(&s, &zero), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn bs_commuting_and_dominance() {
        let r = DensityMatrix::<f64>::diagonal(&[0.3, 0.7]).unwrap();
        let s = DensityMatrix::diagonal(&[0.6, 0.4]).unwrap();
        assert!((bs_divergence(&r, &s).unwrap() - umegaki(&r, &s).unwrap()).abs() < 1e-12);
        let r = DensityMatrix::<f64>::from_bloch(0.9, 0.0, 0.0).unwrap();
        let s = DensityMatrix::from_bloch(0.0, 0.0, 0.9).unwrap();
        assert!(bs_divergence(&r, &s).unwrap() > umegaki(&r, &s).unwrap() + 1e-3);
        assert!(bs_divergence(&r, &r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 0..200 {
            let d = 2 + k % 2;
            let r = random::state::<f64, _>(&mut rng, d);
            let s = random::state::<f64, _>(&mut rng, d);
            let u = umegaki(&r, &s).unwrap();
            assert!(u >= -1e-12);
            assert!(bs_divergence(&r, &s).unwrap() >= u - 1e-10);
            let ch = random::channel::<f64, _>(&mut rng, d, 2);
            let u_out = umegaki(&ch.apply(&r).unwrap(), &ch.apply(&s).unwrap()).unwrap();
            assert!(u_out <= u + 1e-10);
        }
    }

    #[test]
    fn trace_log_chain_commuting_and_ordered() {
        let x = HermitianMatrix::<f64>::from_real_diagonal(&[0.6, 0.4]);
        let y = HermitianMatrix::from_real_diagonal(&[2.0, 0.5]);
        let z = HermitianMatrix::from_real_diagonal(&[0.3, 0.7]);
        let [lo, mid, hi] = trace_log_chain(&x, &y, &z, 2.0).unwrap();
        let expected_mid = 2.0 * (0.6 * (0.6f64 * 2.0).ln() + 0.4 * (0.4f64 * 0.5).ln());
        let expected_lo = 2.0 * (0.6 * (2.0f64 * 0.3).ln() + 0.4 * (0.5f64 * 0.7).ln());
        assert!((mid - expected_mid).abs() < 1e-13 && (hi - expected_mid).abs() < 1e-13);
        assert!((lo - expected_lo).abs() < 1e-13 && lo < mid);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let x = random::state::<f64, _>(&mut rng, 3).into_hermitian();
            let y = random::state::<f64, _>(&mut rng, 3).into_hermitian().scale(3.0);
            let z = random::state::<f64, _>(&mut rng, 3).into_hermitian();
            let [lo, mid, hi] = trace_log_chain(&x, &y, &z, 1.0).unwrap();
            assert!(lo <= mid + 1e-9 && mid <= hi + 1e-9);
        }
        assert!(matches!(trace_log_chain(&x, &y, &y, 1.0), Err(Error::PreconditionViolation(_))));
        // tiny eigenvalues of the sandwich must not be cut off
        let z = HermitianMatrix::from_real_diagonal(&[1.0 - 1e-7, 1e-7]);
        let x = HermitianMatrix::from_real_diagonal(&[0.5, 0.5]);
        let [lo, mid, _] = trace_log_chain(&x, &HermitianMatrix::identity(2), &z, 2.0).unwrap();
        assert!((lo - ((1.0f64 - 1e-7).ln() + 1e-7f64.ln())).abs() < 1e-9 && lo < mid);
    }
}
