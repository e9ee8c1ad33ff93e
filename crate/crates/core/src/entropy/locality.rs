use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, ComplexMatrix, HermitianMatrix};
use crate::scalar::Real;
use crate::state::DensityMatrix;
use crate::state_over_time::{output_weight, q_forward, q_reverse_with, ReverseRule};

use super::operator::sigma_operator;

/// `U Σ U^dag = 𝟙 ⊗ input_term − output_term ⊗ 𝟙`.
#[derive(Clone, Debug)]
pub struct LocalityDecomposition<T: Real> {
    pub rotation: ComplexMatrix<T>,
    /// `ln √ρ^T (γ^T)^{-1} √ρ^T` on the input space.
    pub input_term: HermitianMatrix<T>,
    /// `ln A` on the output space.
    pub output_term: HermitianMatrix<T>,
    pub dim_out: usize,
    pub dim_in: usize,
}

impl<T: Real> LocalityDecomposition<T> {
    /// `𝟙 ⊗ input_term − output_term ⊗ 𝟙`.
    pub fn local_operator(&self) -> HermitianMatrix<T> {
        let a = HermitianMatrix::identity(self.dim_out).kron(&self.input_term);
        let b = self.output_term.kron(&HermitianMatrix::identity(self.dim_in));
        &a - &b
    }

    /// `U X U^dag`.
    pub fn rotate(&self, x: &HermitianMatrix<T>) -> HermitianMatrix<T> {
        x.congruence(&self.rotation)
    }

    pub fn unitarity_defect(&self) -> T {
        let d = self.rotation.nrows();
        max_abs(&(self.rotation.adjoint() * &self.rotation - ComplexMatrix::identity(d, d)))
    }
}

pub fn locality_decomposition<T: Real>(
    channel: &QuantumChannel<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
) -> Result<LocalityDecomposition<T>> {
    locality_decomposition_with(channel, rho, gamma, tau, ReverseRule::Petz)
}

/// `U` is the unitary polar factor of `(𝟙 ⊗ √ρ^T) √C_E`, which equals
/// `(𝟙 ⊗ ρ^T)^{-1/2} C_E^{-1/2} √Q_F` when `ρ` is invertible.
pub fn locality_decomposition_with<T: Real>(
    channel: &QuantumChannel<T>,
    rho: &DensityMatrix<T>,
    gamma: &DensityMatrix<T>,
    tau: &DensityMatrix<T>,
    rule: ReverseRule,
) -> Result<LocalityDecomposition<T>> {
    if !channel.choi().is_full_rank() {
        return Err(Error::NotFullRank("locality decomposition needs a full-rank Choi operator".into()));
    }
    if rho.dim() != channel.dim_in() || gamma.dim() != channel.dim_in() {
        return Err(Error::DimensionMismatch("input state or prior does not match the channel".into()));
    }
    if !gamma.is_full_rank() {
        return Err(Error::SingularPrior("prior is not full rank".into()));
    }
    let (dout, din) = (channel.dim_out(), channel.dim_in());
    let rho_t = rho.as_hermitian().transpose();
    let weight = HermitianMatrix::identity(dout).kron(&rho_t);
    let rotation = if weight.commutator_norm(channel.choi()) <= T::hermiticity_tol() {
        ComplexMatrix::identity(dout * din, dout * din)
    } else {
        let x = weight.sqrt()?.as_matrix() * channel.sqrt_choi().as_matrix();
        let svd = x.svd(true, true);
        svd.u.expect("requested") * svd.v_t.expect("requested")
    };
    let sr = rho_t.sqrt()?;
    let input_term = gamma.as_hermitian().transpose().pinv()?.congruence(sr.as_matrix()).log()?;
    let output_term = output_weight(channel, gamma, tau, rule)?.log()?;
    Ok(LocalityDecomposition { rotation, input_term, output_term, dim_out: dout, dim_in: din })
}

/// Inverse temperature and the two Hamiltonians of a thermal process.
#[derive(Clone, Debug)]
pub struct ThermalSpec<T: Real> {
    pub beta: T,
    pub hamiltonian_in: HermitianMatrix<T>,
    pub hamiltonian_out: HermitianMatrix<T>,
    /// `−(ln Z′ − ln Z)/β`; zero at `β = 0`.
    pub delta_f: T,
}

impl<T: Real> ThermalSpec<T> {
    pub fn new(beta: T, hamiltonian_in: HermitianMatrix<T>, hamiltonian_out: HermitianMatrix<T>) -> Result<Self> {
        if beta < T::zero() {
            return Err(Error::InvalidParameter("inverse temperature must be non-negative".into()));
        }
        let (_, ln_z) = DensityMatrix::thermal(&hamiltonian_in, beta);
        let (_, ln_z_out) = DensityMatrix::thermal(&hamiltonian_out, beta);
        let delta_f = if beta > T::zero() {
            -(ln_z_out - ln_z) / beta
        } else if hamiltonian_in.dim() == hamiltonian_out.dim() {
            T::zero()
        } else {
            return Err(Error::InvalidParameter("free-energy difference diverges at β = 0 for unequal dimensions".into()));
        };
        Ok(Self { beta, hamiltonian_in, hamiltonian_out, delta_f })
    }

    pub fn rho(&self) -> DensityMatrix<T> {
        DensityMatrix::thermal(&self.hamiltonian_in, self.beta).0
    }

    pub fn tau(&self) -> DensityMatrix<T> {
        DensityMatrix::thermal(&self.hamiltonian_out, self.beta).0
    }

    /// `β(H′ ⊗ 𝟙 − 𝟙 ⊗ H^T − ΔF)`.
    pub fn work_operator(&self) -> HermitianMatrix<T> {
        let (dout, din) = (self.hamiltonian_out.dim(), self.hamiltonian_in.dim());
        let a = self.hamiltonian_out.kron(&HermitianMatrix::identity(din));
        let b = HermitianMatrix::identity(dout).kron(&self.hamiltonian_in.transpose());
        let shift = HermitianMatrix::identity(dout * din).scale(self.delta_f);
        (&(&a - &b) - &shift).scale(self.beta)
    }

    /// `β(E′_j − E_i − ΔF)` in ascending order.
    pub fn work_spectrum(&self) -> Vec<T> {
        let e_in = self.hamiltonian_in.eigenvalues();
        let e_out = self.hamiltonian_out.eigenvalues();
        let mut w: Vec<T> = e_out
            .iter()
            .flat_map(|&ej| e_in.iter().map(move |&ei| ej - ei))
            .map(|x| self.beta * (x - self.delta_f))
            .collect();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkCheck<T> {
    pub matched: bool,
    /// Largest gap between the sorted spectra of `Σ` and the work operator.
    pub max_dev: T,
    /// Max-entry gap between `U Σ U^dag` and the work operator.
    pub operator_dev: T,
}

/// For a unital channel with uniform prior and thermal input and reference,
/// compares `Σ` with the work operator.
pub fn work_operator_check<T: Real>(channel: &QuantumChannel<T>, spec: &ThermalSpec<T>) -> Result<WorkCheck<T>> {
    if channel.dim_in() != channel.dim_out() || !channel.is_unital() {
        return Err(Error::PreconditionViolation("work operator comparison needs a unital channel".into()));
    }
    if spec.hamiltonian_in.dim() != channel.dim_in() || spec.hamiltonian_out.dim() != channel.dim_out() {
        return Err(Error::DimensionMismatch("Hamiltonians do not match the channel".into()));
    }
    let gamma = DensityMatrix::maximally_mixed(channel.dim_in());
    let (rho, tau) = (spec.rho(), spec.tau());
    let qf = q_forward(channel, &rho)?;
    let qr = q_reverse_with(channel, &gamma, &tau, ReverseRule::Petz)?;
    let sigma = sigma_operator(&qf, &qr)?;
    let mut spectrum = sigma.eigenvalues.clone();
    spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let target = spec.work_spectrum();
    if spectrum.len() != target.len() {
        return Err(Error::NotFullRank("entropy operator does not have full support".into()));
    }
    let max_dev = spectrum.iter().zip(&target).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    let operator_dev = match locality_decomposition(channel, &rho, &gamma, &tau) {
        Ok(loc) => loc.rotate(&sigma.matrix).max_abs_diff(&spec.work_operator()),
        Err(Error::NotFullRank(_)) => T::lit(f64::NAN),
        Err(e) => return Err(e),
    };
    Ok(WorkCheck { matched: max_dev < T::lit(1e-7), max_dev, operator_dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::state_over_time::{q_forward_tilde, q_reverse};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rotation_maps_sigma_to_local_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for k in 0..20 {
            let (din, dout) = if k % 2 == 0 { (2, 2) } else { (2, 3) };
            let ch = random::channel::<f64, _>(&mut rng, din, dout);
            let rho = random::state(&mut rng, din);
            let g = random::state(&mut rng, din);
            let t = random::state(&mut rng, dout);
            let loc = locality_decomposition(&ch, &rho, &g, &t).unwrap();
            assert!(loc.unitarity_defect() < 1e-9);
            let qf = q_forward(&ch, &rho).unwrap();
            let qr = q_reverse(&ch, &g, &t).unwrap();
            let sigma = sigma_operator(&qf, &qr).unwrap();
            let local = loc.local_operator();
            assert!(loc.rotate(&sigma.matrix).max_abs_diff(&local) < 1e-8);
            let qft = q_forward_tilde(&ch, &rho).unwrap();
            assert!(loc.rotate(&qf.matrix).max_abs_diff(&qft.matrix) < 1e-9);
            let fs: [fn(f64) -> f64; 3] = [|x| x, |x| x * x, |x| (-x).exp()];
            for f in fs {
                let lhs = sigma.expectation_of(&qf.matrix, f);
                let rhs = qft.matrix.trace_product(&local.eig().compose_with(f));
                assert!((lhs - rhs).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn classical_quantum_channel_needs_no_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let phi = random::stochastic_matrix::<f64, _>(&mut rng, 2, 2);
        let ch = QuantumChannel::measure_and_prepare(&phi).unwrap();
        let rho = random::diagonal_state(&mut rng, 2);
        let g = random::state(&mut rng, 2);
        let t = random::state(&mut rng, 2);
        let loc = locality_decomposition(&ch, &rho, &g, &t).unwrap();
        assert_eq!(loc.rotation, ComplexMatrix::identity(4, 4));
    }

    #[test]
    fn thermal_work_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let ch = random::unital_channel::<f64, _>(&mut rng, 2, 5);
        let h = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
        let hp = HermitianMatrix::from_real_diagonal(&[0.0, 2.0]);
        let spec = ThermalSpec::new(1.0, h, hp).unwrap();
        let z = 1.0 + (-1.0f64).exp();
        let zp = 1.0 + (-2.0f64).exp();
        let df = -(zp.ln() - z.ln());
        assert!((spec.delta_f - df).abs() < 1e-14);
        let mut expected: Vec<f64> = [0.0, 2.0]
            .iter()
            .flat_map(|ej| [0.0, 1.0].map(|ei| ej - ei - df))
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(spec.work_spectrum().iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-14));
        let check = work_operator_check(&ch, &spec).unwrap();
        assert!(check.matched, "{:?}", check);
        assert!(check.operator_dev < 1e-8);
    }

    #[test]
    fn trivial_thermal_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let ch = random::unital_channel::<f64, _>(&mut rng, 2, 5);
        let zero = HermitianMatrix::zeros(2);
        let spec = ThermalSpec::new(1.0, zero.clone(), zero).unwrap();
        assert_eq!(spec.delta_f, 0.0);
        let c = work_operator_check(&ch, &spec).unwrap();
        assert!(c.matched && c.max_dev < 1e-9);
        let h = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
        let spec = ThermalSpec::new(0.0, h.clone(), h).unwrap();
        assert_eq!(spec.delta_f, 0.0);
        assert!(work_operator_check(&ch, &spec).unwrap().matched);
        let amp = random::channel::<f64, _>(&mut rng, 2, 2);
        let spec = ThermalSpec::new(1.0, HermitianMatrix::zeros(2), HermitianMatrix::zeros(2)).unwrap();
        assert!(matches!(work_operator_check(&amp, &spec), Err(Error::PreconditionViolation(_))));
    }
}
