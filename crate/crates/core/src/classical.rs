//! Classical stochastic thermodynamics on finite state spaces, used as an
//! exact reference for diagonal instances of the quantum theory.
//!
//! Stochastic matrices are column-stochastic: `phi[(o, i)] = φ(o|i)`.

use nalgebra::DMatrix;

use crate::channel::{Povm, QuantumChannel};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::DensityMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalProcess<T: Real> {
    /// Input distribution.
    pub p: Vec<T>,
    pub phi: DMatrix<T>,
    /// Prior over inputs.
    pub pi: Vec<T>,
    /// Reference distribution over outputs, where the reverse process starts.
    pub q: Vec<T>,
}

fn check_distribution<T: Real>(v: &[T], len: usize, what: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!("{what} has {} entries, expected {len}", v.len())));
    }
    let tol = T::lit(1e-12).max(T::normalization_tol() * T::lit(1e-3));
    if v.iter().any(|&x| x < T::zero()) {
        return Err(Error::InvalidParameter(format!("{what} has a negative entry")));
    }
    let s = v.iter().fold(T::zero(), |a, &b| a + b);
    if (s - T::one()).abs() > tol {
        return Err(Error::InvalidParameter(format!("{what} sums to {}", s.as_f64())));
    }
    Ok(())
}

impl<T: Real> ClassicalProcess<T> {
    pub fn new(p: Vec<T>, phi: DMatrix<T>, pi: Vec<T>, q: Vec<T>) -> Result<Self> {
        let (d_out, d_in) = phi.shape();
        for i in 0..d_in {
            check_distribution(phi.column(i).as_slice(), d_out, &format!("column {i} of φ"))?;
        }
        check_distribution(&p, d_in, "input distribution")?;
        check_distribution(&pi, d_in, "prior")?;
        check_distribution(&q, d_out, "reference distribution")?;
        Ok(Self { p, phi, pi, q })
    }

    pub fn d_in(&self) -> usize {
        self.phi.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.phi.nrows()
    }

    pub fn with_prior(self, pi: Vec<T>) -> Result<Self> {
        Self::new(self.p, self.phi, pi, self.q)
    }

    pub fn with_reference(self, q: Vec<T>) -> Result<Self> {
        Self::new(self.p, self.phi, self.pi, q)
    }

    /// `φ v`.
    pub fn push_forward(&self, v: &[T]) -> Vec<T> {
        (0..self.d_out())
            .map(|o| (0..self.d_in()).fold(T::zero(), |s, i| s + self.phi[(o, i)] * v[i]))
            .collect()
    }

    /// `P_F(i, o) = p(i) φ(o|i)`, stored at `(o, i)`.
    pub fn forward_joint(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.d_out(), self.d_in(), |o, i| self.p[i] * self.phi[(o, i)])
    }

    /// `P_R(o, i) = q(o) φ̂(i|o)`, stored at `(o, i)`.
    pub fn reverse_joint(&self) -> Result<DMatrix<T>> {
        let rev = classical_reverse(self)?;
        Ok(DMatrix::from_fn(self.d_out(), self.d_in(), |o, i| self.q[o] * rev[(i, o)]))
    }
}

/// Bayesian retrodiction `φ̂(i|o) = φ(o|i) π(i) / (φπ)(o)`, stored at `(i, o)`.
/// Outputs the prior cannot reach get `π` as their column.
pub fn classical_reverse<T: Real>(proc: &ClassicalProcess<T>) -> Result<DMatrix<T>> {
    let lambda = proc.push_forward(&proc.pi);
    let mut rev = DMatrix::zeros(proc.d_in(), proc.d_out());
    for o in 0..proc.d_out() {
        if lambda[o] <= T::zero() {
            if proc.q[o] > T::zero() {
                return Err(Error::SingularPrior(format!("output {o} has zero probability under the prior")));
            }
            for i in 0..proc.d_in() {
                rev[(i, o)] = proc.pi[i];
            }
            continue;
        }
        for i in 0..proc.d_in() {
            rev[(i, o)] = proc.phi[(o, i)] * proc.pi[i] / lambda[o];
        }
    }
    Ok(rev)
}

/// Trajectory entropy production, defined on the cells where `P_F > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaTable<T: Real> {
    /// `σ(i, o)` at `(o, i)`; zero off support.
    pub values: DMatrix<T>,
    pub on_support: DMatrix<bool>,
}

impl<T: Real> SigmaTable<T> {
    /// Values on support, ordered by `(o, i)`.
    pub fn support_values(&self) -> Vec<T> {
        let mut out = Vec::new();
        for o in 0..self.values.nrows() {
            for i in 0..self.values.ncols() {
                if self.on_support[(o, i)] {
                    out.push(self.values[(o, i)]);
                }
            }
        }
        out
    }
}

/// `σ(i, o) = ln[P_F(i, o)/P_R(o, i)] = ln[p(i)/π(i)] − ln[q(o)/(φπ)(o)]`.
pub fn classical_sigma<T: Real>(proc: &ClassicalProcess<T>) -> Result<SigmaTable<T>> {
    let lambda = proc.push_forward(&proc.pi);
    let pf = proc.forward_joint();
    let (d_out, d_in) = (proc.d_out(), proc.d_in());
    let mut values = DMatrix::zeros(d_out, d_in);
    let mut on_support = DMatrix::from_element(d_out, d_in, false);
    for o in 0..d_out {
        for i in 0..d_in {
            if pf[(o, i)] <= T::zero() {
                continue;
            }
            if proc.pi[i] <= T::zero() || proc.q[o] <= T::zero() {
                return Err(Error::SupportMismatch(format!(
                    "trajectory ({i} -> {o}) is possible forward but not in reverse"
                )));
            }
            values[(o, i)] = (proc.p[i] / proc.pi[i]).ln() - (proc.q[o] / lambda[o]).ln();
            on_support[(o, i)] = true;
        }
    }
    Ok(SigmaTable { values, on_support })
}

/// Kullback–Leibler divergence with the `0 ln 0 = 0` convention.
pub fn kl_divergence<T: Real>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch("distributions of different length".into()));
    }
    let mut s = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        if a <= T::zero() {
            continue;
        }
        if b <= T::zero() {
            return Err(Error::SupportMismatch("first distribution not supported by the second".into()));
        }
        s += a * (a / b).ln();
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalAverage<T> {
    pub avg: T,
    /// `D(p‖π)`.
    pub d_in: T,
    /// `D(φp‖φπ)`.
    pub d_out1: T,
    /// `D(φp‖q)`.
    pub d_out2: T,
}

pub fn classical_average<T: Real>(proc: &ClassicalProcess<T>) -> Result<ClassicalAverage<T>> {
    let out = proc.push_forward(&proc.p);
    let lambda = proc.push_forward(&proc.pi);
    let d_in = kl_divergence(&proc.p, &proc.pi)?;
    let d_out1 = kl_divergence(&out, &lambda)?;
    let d_out2 = kl_divergence(&out, &proc.q)?;
    Ok(ClassicalAverage { avg: d_in - d_out1 + d_out2, d_in, d_out1, d_out2 })
}

/// `Σ P_F σ`.
pub fn trajectory_average<T: Real>(proc: &ClassicalProcess<T>) -> Result<T> {
    let sigma = classical_sigma(proc)?;
    let pf = proc.forward_joint();
    Ok(pf.iter().zip(sigma.values.iter()).fold(T::zero(), |s, (&p, &v)| s + p * v))
}

/// Two-point measurement: labels `i` drawn from `label_dist` prepare `ρ_i`,
/// which is then measured with `povm`, so `φ(j|i) = Tr[ρ_i Π_j]`. The prior
/// defaults to `label_dist` and the reference to `φ p`.
pub fn tpm_process<T: Real>(
    label_dist: &[T],
    states: &[DensityMatrix<T>],
    povm: &Povm<T>,
) -> Result<ClassicalProcess<T>> {
    if label_dist.len() != states.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels but {} states",
            label_dist.len(),
            states.len()
        )));
    }
    if let Some(s) = states.iter().find(|s| s.dim() != povm.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} measured by a POVM on dimension {}",
            s.dim(),
            povm.dim()
        )));
    }
    let mut phi = DMatrix::zeros(povm.outcomes(), states.len());
    for (i, s) in states.iter().enumerate() {
        for (j, prob) in povm.probabilities(s).into_iter().enumerate() {
            phi[(j, i)] = prob;
        }
    }
    let p = label_dist.to_vec();
    let proc = ClassicalProcess { p: p.clone(), phi, pi: p, q: Vec::new() };
    let q = proc.push_forward(&proc.p);
    ClassicalProcess::new(proc.p, proc.phi, proc.pi, q)
}

/// Embedded channel followed by the embedded states.
pub type Embedding<T> = (QuantumChannel<T>, DensityMatrix<T>, DensityMatrix<T>, DensityMatrix<T>);

/// Diagonal embedding: measure-and-prepare channel with `diag(p)`,
/// `diag(π)` and `diag(q)`.
pub fn embed_as_quantum<T: Real>(
    proc: &ClassicalProcess<T>,
) -> Result<Embedding<T>> {
    Ok((
        QuantumChannel::measure_and_prepare(&proc.phi)?,
        DensityMatrix::diagonal(&proc.p)?,
        DensityMatrix::diagonal(&proc.pi)?,
        DensityMatrix::diagonal(&proc.q)?,
    ))
}
