//! CPTP maps in Choi form.
//!
//! The Choi operator is `C_E = Σ_ij E(|i⟩⟨j|) ⊗ |i⟩⟨j|` on `H_out ⊗ H_in`.

use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{matrix_unit, max_abs, partial_trace, ComplexMatrix, HermitianMatrix, Keep};
use crate::scalar::{cplx, Real};
use crate::state::DensityMatrix;

/// Quantum channel stored as its Choi operator, with `√C_E` computed lazily
/// once and shared by every state-over-time built from it.
#[derive(Clone, Debug)]
pub struct QuantumChannel<T: Real> {
    dim_in: usize,
    dim_out: usize,
    choi: HermitianMatrix<T>,
    sqrt_choi: OnceLock<HermitianMatrix<T>>,
}

impl<T: Real> QuantumChannel<T> {
    /// Validates complete positivity and trace preservation of `choi`.
    pub fn from_choi(choi: HermitianMatrix<T>, dim_out: usize, dim_in: usize) -> Result<Self> {
        if choi.dim() != dim_out * dim_in {
            return Err(Error::DimensionMismatch(format!(
                "Choi operator of dimension {} for a {dim_in}->{dim_out} channel",
                choi.dim()
            )));
        }
        if !choi.is_psd() {
            return Err(Error::NotCptp("Choi operator is not positive semidefinite".into()));
        }
        let marginal = choi.partial_trace((dim_out, dim_in), Keep::Second)?;
        let dev = marginal.max_abs_diff(&HermitianMatrix::identity(dim_in));
        if dev > T::normalization_tol() {
            return Err(Error::NotCptp(format!("Tr_out C differs from identity by {:e}", dev.as_f64())));
        }
        Ok(Self::from_choi_unchecked(choi, dim_out, dim_in))
    }

    pub(crate) fn from_choi_unchecked(choi: HermitianMatrix<T>, dim_out: usize, dim_in: usize) -> Self {
        Self { dim_in, dim_out, choi, sqrt_choi: OnceLock::new() }
    }

    /// Builds the Choi operator of the linear map `action` by evaluating it on
    /// every matrix unit.
    pub fn from_action(
        dim_in: usize,
        dim_out: usize,
        action: impl Fn(&ComplexMatrix<T>) -> ComplexMatrix<T>,
    ) -> Result<Self> {
        let choi = choi_of_action(dim_in, dim_out, action);
        let choi = HermitianMatrix::new(choi).map_err(|_| Error::NotCptp("map is not Hermiticity preserving".into()))?;
        Self::from_choi(choi, dim_out, dim_in)
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(&ComplexMatrix::identity(d, d)).expect("identity is unitary")
    }

    /// `ρ ↦ U ρ U^dag`.
    pub fn unitary(u: &ComplexMatrix<T>) -> Result<Self> {
        choi_from_kraus(std::slice::from_ref(u))
    }

    /// `X ↦ Tr[X] 𝟙/d_out`.
    pub fn completely_depolarizing(dim_in: usize, dim_out: usize) -> Self {
        let w = T::one() / T::from_usize(dim_out).unwrap();
        Self::from_choi_unchecked(HermitianMatrix::identity(dim_in * dim_out).scale(w), dim_out, dim_in)
    }

    /// Measure-and-prepare channel in the computational basis,
    /// `X ↦ Σ_ij φ(j|i) ⟨i|X|i⟩ |j⟩⟨j|`, with `phi` column-stochastic
    /// (`phi[(j, i)] = φ(j|i)`).
    pub fn measure_and_prepare(phi: &DMatrix<T>) -> Result<Self> {
        let (dout, din) = phi.shape();
        let mut diag = Vec::with_capacity(dout * din);
        for j in 0..dout {
            for i in 0..din {
                diag.push(phi[(j, i)]);
            }
        }
        Self::from_choi(HermitianMatrix::from_real_diagonal(&diag), dout, din)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &HermitianMatrix<T> {
        &self.choi
    }

    /// `√C_E`, computed on first use.
    pub fn sqrt_choi(&self) -> &HermitianMatrix<T> {
        self.sqrt_choi.get_or_init(|| self.choi.sqrt().expect("Choi operator is PSD"))
    }

    /// `E(X) = Tr_in[C_E (𝟙 ⊗ X^T)]` for an arbitrary operator `X`.
    pub fn apply_operator(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if x.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} but operator is {}x{}",
                self.dim_in,
                x.nrows(),
                x.ncols()
            )));
        }
        let (din, dout) = (self.dim_in, self.dim_out);
        let c = self.choi.as_matrix();
        Ok(DMatrix::from_fn(dout, dout, |a, b| {
            let mut s = Complex::new(T::zero(), T::zero());
            for i in 0..din {
                for j in 0..din {
                    s += c[(a * din + i, b * din + j)] * x[(i, j)];
                }
            }
            s
        }))
    }

    pub fn apply_hermitian(&self, x: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
        self.apply_operator(x.as_matrix()).map(HermitianMatrix::hermitize)
    }

    /// Image of a state.
    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.apply_hermitian(rho.as_hermitian()).map(DensityMatrix::from_hermitian_unchecked)
    }

    /// Heisenberg-picture map `E^dag(σ) = Tr_out[C_E (σ ⊗ 𝟙)]^T`.
    pub fn adjoint_apply_operator(&self, sigma: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if sigma.shape() != (self.dim_out, self.dim_out) {
            return Err(Error::DimensionMismatch(format!(
                "channel output dimension {} but operator is {}x{}",
                self.dim_out,
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let (din, dout) = (self.dim_in, self.dim_out);
        let c = self.choi.as_matrix();
        Ok(DMatrix::from_fn(din, din, |j, i| {
            let mut s = Complex::new(T::zero(), T::zero());
            for a in 0..dout {
                for b in 0..dout {
                    s += c[(a * din + i, b * din + j)] * sigma[(b, a)];
                }
            }
            s
        }))
    }

    pub fn adjoint_apply(&self, sigma: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
        self.adjoint_apply_operator(sigma.as_matrix()).map(HermitianMatrix::hermitize)
    }

    /// Stinespring isometry `V = (𝟙_B ⊗ √(C_E^T))(|Φ+⟩_{BB'} ⊗ 𝟙_{A'←A})`
    /// with environment `E = B' ⊗ A'`.
    pub fn stinespring(&self) -> Dilation<T> {
        let (din, dout) = (self.dim_in, self.dim_out);
        let denv = dout * din;
        let s = self.sqrt_choi().as_matrix();
        // √(C^T) = (√C)^T, so √(C^T)|b,a⟩ is row (b·din + a) of √C
        let v = DMatrix::from_fn(dout * denv, din, |row, a| {
            let (b, e) = (row / denv, row % denv);
            s[(b * din + a, e)]
        });
        Dilation { isometry: v, dim_in: din, dim_out: dout, dim_env: denv }
    }

    /// Environment marginal of [`Self::stinespring`], `Tr_B[V ρ V^dag]`.
    pub fn complementary_apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.stinespring().environment_output(rho)
    }

    pub fn is_unital(&self) -> bool {
        let w = T::one() / T::from_usize(self.dim_in).unwrap();
        let mixed = ComplexMatrix::<T>::identity(self.dim_in, self.dim_in) * cplx(w);
        let out = self.apply_operator(&mixed).expect("dimensions match");
        let target = ComplexMatrix::<T>::identity(self.dim_out, self.dim_out)
            * cplx(T::one() / T::from_usize(self.dim_out).unwrap());
        max_abs(&(out - target)) <= T::lit(1e-10).max(T::normalization_tol())
    }

    pub fn rank_flags(&self) -> RankFlags {
        channel_rank_flags(self)
    }
}

/// Choi matrix `Σ_ij action(|i⟩⟨j|) ⊗ |i⟩⟨j|` (not validated).
pub(crate) fn choi_of_action<T: Real>(
    dim_in: usize,
    dim_out: usize,
    action: impl Fn(&ComplexMatrix<T>) -> ComplexMatrix<T>,
) -> ComplexMatrix<T> {
    let mut choi = ComplexMatrix::zeros(dim_out * dim_in, dim_out * dim_in);
    for i in 0..dim_in {
        for j in 0..dim_in {
            let img = action(&matrix_unit(dim_in, i, j));
            for a in 0..dim_out {
                for b in 0..dim_out {
                    choi[(a * dim_in + i, b * dim_in + j)] = img[(a, b)];
                }
            }
        }
    }
    choi
}

/// Channel with Kraus operators `kraus` (each `dim_out × dim_in`).
pub fn choi_from_kraus<T: Real>(kraus: &[ComplexMatrix<T>]) -> Result<QuantumChannel<T>> {
    let first = kraus.first().ok_or_else(|| Error::NotCptp("empty Kraus set".into()))?;
    let (dout, din) = first.shape();
    if kraus.iter().any(|k| k.shape() != (dout, din)) {
        return Err(Error::DimensionMismatch("Kraus operators of different shapes".into()));
    }
    let completeness = kraus.iter().fold(ComplexMatrix::<T>::zeros(din, din), |s, k| s + k.adjoint() * k);
    let dev = max_abs(&(completeness - ComplexMatrix::identity(din, din)));
    if dev > T::normalization_tol() {
        return Err(Error::NotCptp(format!("Σ K^dag K differs from identity by {:e}", dev.as_f64())));
    }
    let mut choi = ComplexMatrix::zeros(dout * din, dout * din);
    for k in kraus {
        // |K⟩⟩ = Σ_i K|i⟩ ⊗ |i⟩
        let vec_k = DMatrix::from_fn(dout * din, 1, |r, _| k[(r / din, r % din)]);
        choi += &vec_k * vec_k.adjoint();
    }
    Ok(QuantumChannel::from_choi_unchecked(HermitianMatrix::hermitize(choi), dout, din))
}

/// Action of one channel on a state.
pub fn apply<T: Real>(channel: &QuantumChannel<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    channel.apply(rho)
}

pub fn adjoint_apply<T: Real>(channel: &QuantumChannel<T>, sigma: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    channel.adjoint_apply(sigma)
}

/// Serial composition `second ∘ first`.
pub fn compose<T: Real>(second: &QuantumChannel<T>, first: &QuantumChannel<T>) -> Result<QuantumChannel<T>> {
    if first.dim_out != second.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: first outputs {} but second takes {}",
            first.dim_out, second.dim_in
        )));
    }
    let choi = choi_of_action(first.dim_in, second.dim_out, |x| {
        let mid = first.apply_operator(x).expect("dims checked");
        second.apply_operator(&mid).expect("dims checked")
    });
    Ok(QuantumChannel::from_choi_unchecked(HermitianMatrix::hermitize(choi), second.dim_out, first.dim_in))
}

pub fn stinespring<T: Real>(channel: &QuantumChannel<T>) -> Dilation<T> {
    channel.stinespring()
}

pub fn complementary_apply<T: Real>(channel: &QuantumChannel<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    channel.complementary_apply(rho)
}

/// Isometry `V: H_in → H_out ⊗ H_env`.
#[derive(Clone, Debug)]
pub struct Dilation<T: Real> {
    pub isometry: ComplexMatrix<T>,
    pub dim_in: usize,
    pub dim_out: usize,
    pub dim_env: usize,
}

impl<T: Real> Dilation<T> {
    /// `V ρ V^dag` on `H_out ⊗ H_env`.
    pub fn joint_output(&self, rho: &DensityMatrix<T>) -> Result<HermitianMatrix<T>> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "dilation input dimension {} but state has {}",
                self.dim_in,
                rho.dim()
            )));
        }
        Ok(rho.as_hermitian().congruence(&self.isometry))
    }

    /// `Tr_env[V ρ V^dag]`.
    pub fn channel_output(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        let joint = self.joint_output(rho)?;
        let m = partial_trace(joint.as_matrix(), (self.dim_out, self.dim_env), Keep::First)?;
        Ok(DensityMatrix::from_hermitian_unchecked(HermitianMatrix::hermitize(m)))
    }

    /// `Tr_out[V ρ V^dag]`.
    pub fn environment_output(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        let joint = self.joint_output(rho)?;
        let m = partial_trace(joint.as_matrix(), (self.dim_out, self.dim_env), Keep::Second)?;
        Ok(DensityMatrix::from_hermitian_unchecked(HermitianMatrix::hermitize(m)))
    }

    /// Max-entry deviation of `V^dag V` from the identity.
    pub fn isometry_defect(&self) -> T {
        let vv = self.isometry.adjoint() * &self.isometry;
        max_abs(&(vv - ComplexMatrix::identity(self.dim_in, self.dim_in)))
    }
}

/// Positive operator-valued measure.
#[derive(Clone, Debug)]
pub struct Povm<T: Real> {
    effects: Vec<HermitianMatrix<T>>,
}

impl<T: Real> Povm<T> {
    pub fn new(effects: Vec<HermitianMatrix<T>>) -> Result<Self> {
        let d = effects
            .first()
            .map(|e| e.dim())
            .ok_or_else(|| Error::InvalidParameter("POVM without effects".into()))?;
        if effects.iter().any(|e| e.dim() != d) {
            return Err(Error::DimensionMismatch("POVM effects of different dimension".into()));
        }
        if let Some(k) = effects.iter().position(|e| !e.is_psd()) {
            return Err(Error::InvalidParameter(format!("POVM effect {k} is not PSD")));
        }
        let sum = effects.iter().fold(HermitianMatrix::zeros(d), |s, e| &s + e);
        let dev = sum.max_abs_diff(&HermitianMatrix::identity(d));
        if dev > T::normalization_tol() {
            return Err(Error::NotCptp(format!("POVM effects sum to identity only within {:e}", dev.as_f64())));
        }
        Ok(Self { effects })
    }

    /// Rank-one projective measurement onto the columns of a unitary.
    pub fn projective(basis: &ComplexMatrix<T>) -> Result<Self> {
        let effects = (0..basis.ncols())
            .map(|k| HermitianMatrix::outer(&basis.column(k).into_owned()))
            .collect();
        Self::new(effects)
    }

    pub fn computational(d: usize) -> Self {
        Self::projective(&ComplexMatrix::identity(d, d)).expect("computational basis is complete")
    }

    pub fn effects(&self) -> &[HermitianMatrix<T>] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    /// Born-rule probabilities `Tr[Π_i ρ]`.
    pub fn probabilities(&self, rho: &DensityMatrix<T>) -> Vec<T> {
        self.effects.iter().map(|e| e.trace_product(rho.as_hermitian())).collect()
    }
}

/// Quantum-classical channel `ρ ↦ Σ_i Tr[Π_i ρ] |i⟩⟨i|`.
pub fn measurement_channel<T: Real>(povm: &Povm<T>) -> Result<QuantumChannel<T>> {
    let (d, k) = (povm.dim(), povm.outcomes());
    let sum = povm.effects.iter().fold(HermitianMatrix::zeros(d), |s, e| &s + e);
    if sum.max_abs_diff(&HermitianMatrix::identity(d)) > T::normalization_tol() {
        return Err(Error::NotCptp("POVM effects do not sum to identity".into()));
    }
    // C_M = Σ_i |i⟩⟨i| ⊗ Π_i^T
    let mut choi = ComplexMatrix::zeros(k * d, k * d);
    for (i, e) in povm.effects.iter().enumerate() {
        let t = e.as_matrix().transpose();
        choi.view_mut((i * d, i * d), (d, d)).copy_from(&t);
    }
    Ok(QuantumChannel::from_choi_unchecked(HermitianMatrix::hermitize(choi), k, d))
}

/// Structural properties of a channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankFlags {
    pub full_rank_choi: bool,
    pub unital: bool,
    pub unitary: bool,
}

pub fn channel_rank_flags<T: Real>(channel: &QuantumChannel<T>) -> RankFlags {
    let rank = channel.choi.rank();
    RankFlags {
        full_rank_choi: rank == channel.choi.dim(),
        unital: channel.is_unital(),
        // trace preservation is a construction invariant
        unitary: rank == 1,
    }
}
