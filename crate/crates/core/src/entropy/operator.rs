use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::scalar::{cplx, Real};
use crate::state_over_time::StateOverTime;

/// Eigenvalues closer than this share one Crooks row.
pub const DEGENERACY_BIN: f64 = 1e-9;

/// `Σ = ln(√Q_F Q_R^{-1} √Q_F)` with its eigen data taken from the SVD
/// `√Q_F Q_R^{-1/2} = U S V^dag`.
#[derive(Clone, Debug)]
pub struct EntropyOperator<T: Real> {
    pub matrix: HermitianMatrix<T>,
    /// `Σ_k = 2 ln s_k`, one per vector in the support of `Q_F`.
    pub eigenvalues: Vec<T>,
    /// Columns `|f_k⟩` of `U`.
    pub forward_eigvecs: ComplexMatrix<T>,
    /// Columns `|r_k⟩` of `V`.
    pub reverse_eigvecs: ComplexMatrix<T>,
    pub singular_values: Vec<T>,
    pub dim_out: usize,
    pub dim_in: usize,
}

impl<T: Real> EntropyOperator<T> {
    /// `Σ[Q_R, Q_F] = −Σ_k Σ_k |r_k⟩⟨r_k|`.
    pub fn reverse_matrix(&self) -> HermitianMatrix<T> {
        compose(&self.reverse_eigvecs, self.eigenvalues.iter().map(|&s| -s))
    }

    /// `Tr[Q f(Σ)]` on the support of `Σ`'s eigenbasis, zero-extended.
    pub fn expectation_of(&self, q: &HermitianMatrix<T>, f: impl Fn(T) -> T) -> T {
        let fm = compose(&self.forward_eigvecs, self.eigenvalues.iter().map(|&s| f(s)));
        q.trace_product(&fm)
    }
}

fn compose<T: Real>(vecs: &ComplexMatrix<T>, values: impl Iterator<Item = T>) -> HermitianMatrix<T> {
    let d = vecs.nrows();
    let mut out = ComplexMatrix::zeros(d, d);
    for (k, v) in values.enumerate() {
        let col = vecs.column(k);
        out += (col * col.adjoint()) * cplx(v);
    }
    HermitianMatrix::hermitize(out)
}

fn check_pair<T: Real>(qf: &StateOverTime<T>, qr: &StateOverTime<T>) -> Result<()> {
    if qf.dims() != qr.dims() {
        return Err(Error::DimensionMismatch(format!(
            "forward operator on {:?} but reverse operator on {:?}",
            qf.dims(),
            qr.dims()
        )));
    }
    if !qf.matrix.support_within(&qr.matrix) {
        return Err(Error::SupportMismatch(format!(
            "reverse operator is not invertible on the forward support (leak {:e})",
            qf.matrix.support_leak(&qr.matrix).as_f64()
        )));
    }
    Ok(())
}

pub fn sigma_operator<T: Real>(qf: &StateOverTime<T>, qr: &StateOverTime<T>) -> Result<EntropyOperator<T>> {
    check_pair(qf, qr)?;
    let rank = qf.matrix.rank();
    let x = qf.matrix.sqrt()?.as_matrix() * qr.matrix.inv_sqrt()?.as_matrix();
    let svd = x.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v = svd.v_t.expect("right singular vectors requested").adjoint();
    let singular_values: Vec<T> = svd.singular_values.iter().take(rank).copied().collect();
    let eigenvalues: Vec<T> = singular_values.iter().map(|&s| T::lit(2.0) * s.ln()).collect();
    let forward_eigvecs = u.columns(0, rank).into_owned();
    let reverse_eigvecs = v.columns(0, rank).into_owned();
    let matrix = compose(&forward_eigvecs, eigenvalues.iter().copied());
    Ok(EntropyOperator {
        matrix,
        eigenvalues,
        forward_eigvecs,
        reverse_eigvecs,
        singular_values,
        dim_out: qf.dim_out,
        dim_in: qf.dim_in,
    })
}

/// `Σ_k Σ_k ⟨f_k|Q_F|f_k⟩`, the Belavkin–Staszewski divergence of `Q_F` from `Q_R`.
pub fn avg_def2<T: Real>(qf: &StateOverTime<T>, qr: &StateOverTime<T>) -> Result<T> {
    let sigma = sigma_operator(qf, qr)?;
    Ok(average_from(&sigma, qf))
}

pub(crate) fn average_from<T: Real>(sigma: &EntropyOperator<T>, qf: &StateOverTime<T>) -> T {
    sigma
        .eigenvalues
        .iter()
        .enumerate()
        .fold(T::zero(), |s, (k, &sk)| s + sk * qf.matrix.expectation(&sigma.forward_eigvecs.column(k).into_owned()))
}

/// `Tr[Q_F e^{−Σ}]`.
pub fn jarzynski<T: Real>(qf: &StateOverTime<T>, sigma: &EntropyOperator<T>) -> Result<T> {
    if qf.dims() != (sigma.dim_out, sigma.dim_in) {
        return Err(Error::DimensionMismatch("entropy operator and state over time differ in shape".into()));
    }
    let projector = compose(&sigma.forward_eigvecs, sigma.eigenvalues.iter().map(|_| T::one()));
    if !qf.matrix.support_within(&projector) {
        return Err(Error::SupportMismatch("state over time is not supported on the operator's eigenbasis".into()));
    }
    let e = (-&sigma.matrix).exp();
    Ok(qf.matrix.trace_product(&e))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrooksRow<T> {
    pub sigma: T,
    pub p_f: T,
    pub p_r: T,
    /// `|P_R(−Σ) − e^{−Σ} P_F(Σ)|`.
    pub ratio_error: T,
}

#[derive(Clone, Debug)]
pub struct FluctuationReport<T> {
    pub jarzynski_value: T,
    pub crooks_rows: Vec<CrooksRow<T>>,
    pub support_ok: bool,
    /// Set when eigenvalues within [`DEGENERACY_BIN`] were merged.
    pub degenerate: bool,
}

impl<T: Real> FluctuationReport<T> {
    pub fn max_ratio_error(&self) -> T {
        self.crooks_rows.iter().fold(T::zero(), |m, r| m.max(r.ratio_error))
    }
}

/// Forward and reverse entropy-production distributions, binned by eigenvalue.
pub fn crooks<T: Real>(qf: &StateOverTime<T>, qr: &StateOverTime<T>) -> Result<FluctuationReport<T>> {
    if !qf.matrix.is_full_rank() || !qr.matrix.is_full_rank() {
        return Err(Error::NotFullRank("fluctuation relations need full-rank states over time".into()));
    }
    let sigma = sigma_operator(qf, qr)?;
    let mut raw: Vec<(T, T, T)> = (0..sigma.eigenvalues.len())
        .map(|k| {
            let f = sigma.forward_eigvecs.column(k).into_owned();
            let r = sigma.reverse_eigvecs.column(k).into_owned();
            (sigma.eigenvalues[k], qf.matrix.expectation(&f), qr.matrix.expectation(&r))
        })
        .collect();
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let bin = T::lit(DEGENERACY_BIN);
    let mut rows: Vec<(T, T, T, usize)> = Vec::new();
    let mut degenerate = false;
    for (s, pf, pr) in raw {
        match rows.last_mut() {
            Some(last) if (s - last.0 / T::from_usize(last.3).unwrap()).abs() < bin => {
                degenerate = true;
                last.0 += s;
                last.1 += pf;
                last.2 += pr;
                last.3 += 1;
            }
            _ => rows.push((s, pf, pr, 1)),
        }
    }
    let crooks_rows = rows
        .into_iter()
        .map(|(sum, p_f, p_r, n)| {
            let sigma = sum / T::from_usize(n).unwrap();
            CrooksRow { sigma, p_f, p_r, ratio_error: (p_r - (-sigma).exp() * p_f).abs() }
        })
        .collect();
    Ok(FluctuationReport { jarzynski_value: jarzynski(qf, &sigma)?, crooks_rows, support_ok: true, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::QuantumChannel;
    use crate::random;
    use crate::state::DensityMatrix;
    use crate::state_over_time::{q_forward, q_reverse, q_reverse_variant};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_operators_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ch = random::channel::<f64, _>(&mut rng, 2, 2);
        let g = random::state(&mut rng, 2);
        let qf = q_forward(&ch, &g).unwrap();
        let qr = q_reverse(&ch, &g, &ch.apply(&g).unwrap()).unwrap();
        let s = sigma_operator(&qf, &qr).unwrap();
        assert!(s.matrix.max_abs_diff(&HermitianMatrix::zeros(4)) < 1e-9);
        assert!(avg_def2(&qf, &qr).unwrap().abs() < 1e-10);
        assert!((jarzynski(&qf, &s).unwrap() - 1.0).abs() < 1e-12);
        let rep = crooks(&qf, &qr).unwrap();
        assert_eq!(rep.crooks_rows.len(), 1);
        assert!(rep.degenerate);
        assert!((rep.crooks_rows[0].p_f - 1.0).abs() < 1e-9 && (rep.crooks_rows[0].p_r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eigen_data_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..20 {
            let ch = random::channel::<f64, _>(&mut rng, 2, 2);
            let rho = random::state(&mut rng, 2);
            let g = random::state(&mut rng, 2);
            let t = random::state(&mut rng, 2);
            let qf = q_forward(&ch, &rho).unwrap();
            let qr = q_reverse(&ch, &g, &t).unwrap();
            let s = sigma_operator(&qf, &qr).unwrap();
            let dense = qr.matrix.pinv().unwrap().congruence(qf.matrix.sqrt().unwrap().as_matrix()).log().unwrap();
            assert!(s.matrix.max_abs_diff(&dense) < 1e-9);
            let rev_dense = qf.matrix.pinv().unwrap().congruence(qr.matrix.sqrt().unwrap().as_matrix()).log().unwrap();
            assert!(s.reverse_matrix().max_abs_diff(&rev_dense) < 1e-9);
            let avg = avg_def2(&qf, &qr).unwrap();
            assert!(avg >= -1e-10);
            let bs = crate::entropy::bs_divergence(&qf.matrix, &qr.matrix).unwrap();
            assert!((avg - bs).abs() < 1e-9);
            assert!((avg - qf.matrix.trace_product(&s.matrix)).abs() < 1e-9);
            let rep = crooks(&qf, &qr).unwrap();
            assert!((rep.jarzynski_value - 1.0).abs() < 1e-8);
            assert!(rep.max_ratio_error() < 1e-8);
            let total: f64 = rep.crooks_rows.iter().map(|r| r.p_f).sum();
            assert!((total - 1.0).abs() < 1e-9);
            let qv = q_reverse_variant(&ch, &g, &t).unwrap();
            let rep = crooks(&qf, &qv).unwrap();
            assert!((rep.jarzynski_value - 1.0).abs() < 1e-8 && rep.max_ratio_error() < 1e-8);
            assert!(avg_def2(&qf, &qv).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn classical_operator_is_diagonal_log_ratio() {
        let p = [0.3f64, 0.7];
        let pi = [0.6, 0.4];
        let q = [0.45, 0.55];
        let phi = nalgebra::DMatrix::from_row_slice(2, 2, &[0.8, 0.25, 0.2, 0.75]);
        let ch = QuantumChannel::measure_and_prepare(&phi).unwrap();
        let qf = q_forward(&ch, &DensityMatrix::diagonal(&p).unwrap()).unwrap();
        let qr = q_reverse(&ch, &DensityMatrix::diagonal(&pi).unwrap(), &DensityMatrix::diagonal(&q).unwrap()).unwrap();
        let s = sigma_operator(&qf, &qr).unwrap();
        for j in 0..2 {
            let lambda: f64 = (0..2).map(|k| phi[(j, k)] * pi[k]).sum();
            for i in 0..2 {
                let expected = (p[i] * lambda / (pi[i] * q[j])).ln();
                assert!((s.matrix.entry(j * 2 + i, j * 2 + i).re - expected).abs() < 1e-10);
            }
        }
        let rep = crooks(&qf, &qr).unwrap();
        // trajectory (i -> j): P_F = p_i φ(j|i); P_R = q_j φ̂(i|j)
        for row in &rep.crooks_rows {
            let mut matched = false;
            for j in 0..2 {
                let lambda: f64 = (0..2).map(|k| phi[(j, k)] * pi[k]).sum();
                for i in 0..2 {
                    let pf = p[i] * phi[(j, i)];
                    let pr = q[j] * phi[(j, i)] * pi[i] / lambda;
                    if (row.sigma - (pf / pr).ln()).abs() < 1e-9 {
                        matched = (row.p_f - pf).abs() < 1e-10 && (row.p_r - pr).abs() < 1e-10;
                    }
                }
            }
            assert!(matched);
        }
    }

    #[test]
    fn support_mismatch_and_rank_errors() {
        let ch = QuantumChannel::<f64>::completely_depolarizing(2, 2);
        let rho = DensityMatrix::maximally_mixed(2);
        let qf = q_forward(&ch, &rho).unwrap();
        let g = DensityMatrix::maximally_mixed(2);
        let qr = q_reverse(&ch, &g, &DensityMatrix::diagonal(&[1.0, 0.0]).unwrap()).unwrap();
        assert!(matches!(sigma_operator(&qf, &qr), Err(Error::SupportMismatch(_))));
        assert!(matches!(crooks(&qf, &qr), Err(Error::NotFullRank(_))));
    }
}
