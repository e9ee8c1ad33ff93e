//! Entropy production for quantum channels with Bayesian (Petz) reverse
//! processes, and the classical stochastic-thermodynamics limit.
//!
//! Everything is generic over the real scalar (`f64` or `f32`); the aliases
//! below fix it to `f64`, with `…32` variants for single precision.

pub mod channel;
pub mod classical;
pub mod collision;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod random;
pub mod retrodiction;
pub mod scalar;
pub mod state;
pub mod state_over_time;

pub use channel::{Povm, QuantumChannel};
pub use error::{Error, Result};
pub use linalg::HermitianMatrix;
pub use scalar::Real;
pub use state::DensityMatrix;
pub use state_over_time::{ReverseRule, StateOverTime};

pub type Hermitian64 = linalg::HermitianMatrix<f64>;
pub type Density64 = state::DensityMatrix<f64>;
pub type Channel64 = channel::QuantumChannel<f64>;
pub type Povm64 = channel::Povm<f64>;
pub type StateOverTime64 = state_over_time::StateOverTime<f64>;
pub type EntropyOperator64 = entropy::EntropyOperator<f64>;
pub type ClassicalProcess64 = classical::ClassicalProcess<f64>;
pub type CollisionModel64 = collision::CollisionModel<f64>;

pub type Hermitian32 = linalg::HermitianMatrix<f32>;
pub type Density32 = state::DensityMatrix<f32>;
pub type Channel32 = channel::QuantumChannel<f32>;
pub type StateOverTime32 = state_over_time::StateOverTime<f32>;
