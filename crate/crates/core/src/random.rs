//! Random instances for tests.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{choi_from_kraus, Povm, QuantumChannel};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::scalar::{cplx, modulus, Real};
use crate::state::DensityMatrix;

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::lit(x)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix<T> {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    DMatrix::from_fn(rows, cols, |_, _| Complex::new(normal::<T, R>(rng) * s, normal::<T, R>(rng) * s))
}

/// Haar-distributed isometry `rows × cols` (`rows ≥ cols`).
pub fn haar_isometry<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix<T> {
    let qr = ginibre::<T, R>(rng, rows, cols).qr();
    let r = qr.r();
    let mut q = qr.q();
    // fix the phases of R's diagonal so the distribution is exactly Haar
    for k in 0..cols {
        let d = r[(k, k)];
        let m = modulus(d);
        if m > T::zero() {
            let ph = d / cplx(m);
            q.column_mut(k).iter_mut().for_each(|z| *z *= ph);
        }
    }
    q
}

pub fn haar_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix<T> {
    haar_isometry(rng, d, d)
}

/// Random Hermitian matrix (GUE-like).
pub fn hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix<T> {
    HermitianMatrix::hermitize(ginibre(rng, d, d))
}

/// Hilbert–Schmidt random state `G G^dag / Tr`; full rank almost surely.
pub fn state<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix<T> {
    let g = ginibre::<T, R>(rng, d, d);
    let m = HermitianMatrix::hermitize(&g * g.adjoint());
    let tr = m.trace();
    DensityMatrix::from_hermitian_unchecked(m.scale(T::one() / tr))
}

/// Random state mixed with the maximally mixed state, so its smallest
/// eigenvalue is at least `floor / d`.
pub fn well_conditioned_state<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize, floor: T) -> DensityMatrix<T> {
    let s = state(rng, d);
    s.mix(&DensityMatrix::maximally_mixed(d), T::one() - floor).expect("same dimension")
}

pub fn pure_state<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix<T> {
    let v = ginibre::<T, R>(rng, d, 1).column(0).into_owned();
    DensityMatrix::pure(&v).expect("nonzero vector")
}

/// State diagonal in the computational basis.
pub fn diagonal_state<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix<T> {
    DensityMatrix::from_hermitian_unchecked(HermitianMatrix::from_real_diagonal(&probability(rng, d)))
}

/// Random probability vector with strictly positive entries.
pub fn probability<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<T> {
    let w: Vec<T> = (0..d).map(|_| T::lit(rng.random_range(0.05..1.0))).collect();
    let s = w.iter().fold(T::zero(), |a, &b| a + b);
    w.into_iter().map(|x| x / s).collect()
}

/// Column-stochastic matrix (`phi[(j, i)] = φ(j|i)`) with positive entries.
pub fn stochastic_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, d_out: usize, d_in: usize) -> DMatrix<T> {
    let mut m = DMatrix::zeros(d_out, d_in);
    for i in 0..d_in {
        let col = probability::<T, R>(rng, d_out);
        for (j, p) in col.into_iter().enumerate() {
            m[(j, i)] = p;
        }
    }
    m
}

/// Channel from a Haar-random Stinespring isometry with environment of
/// dimension `d_in·d_out`; its Choi operator is full rank almost surely.
pub fn channel<T: Real, R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> QuantumChannel<T> {
    channel_with_kraus_rank(rng, d_in, d_out, d_in * d_out)
}

pub fn channel_with_kraus_rank<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    d_in: usize,
    d_out: usize,
    kraus_rank: usize,
) -> QuantumChannel<T> {
    let v = haar_isometry::<T, R>(rng, d_out * kraus_rank, d_in);
    let kraus: Vec<_> = (0..kraus_rank)
        .map(|e| DMatrix::from_fn(d_out, d_in, |b, a| v[(b * kraus_rank + e, a)]))
        .collect();
    choi_from_kraus(&kraus).expect("isometry blocks form a complete Kraus set")
}

pub fn unitary_channel<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> QuantumChannel<T> {
    QuantumChannel::unitary(&haar_unitary(rng, d)).expect("Haar unitary")
}

/// Unital channel: a random mixture of Haar unitaries.
pub fn unital_channel<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize, terms: usize) -> QuantumChannel<T> {
    let w = probability::<T, R>(rng, terms);
    let kraus: Vec<_> = w
        .iter()
        .map(|&p| haar_unitary::<T, R>(rng, d) * cplx(p.sqrt()))
        .collect();
    choi_from_kraus(&kraus).expect("mixture of unitaries")
}

/// POVM with `k` full-rank effects `S^{-1/2} G_i G_i^dag S^{-1/2}`.
pub fn povm<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> Povm<T> {
    let raw: Vec<_> = (0..k)
        .map(|_| {
            let g = ginibre::<T, R>(rng, d, d);
            HermitianMatrix::hermitize(&g * g.adjoint())
        })
        .collect();
    let sum = raw.iter().fold(HermitianMatrix::zeros(d), |s, e| &s + e);
    let norm = sum.inv_sqrt().expect("positive definite");
    let effects = raw.iter().map(|e| e.congruence(norm.as_matrix())).collect();
    Povm::new(effects).expect("normalised effects")
}
