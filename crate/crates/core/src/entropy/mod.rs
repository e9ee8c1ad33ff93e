//! Entropy production for quantum processes, in nats.

mod average;
mod divergence;
mod locality;
mod measurement;
mod operator;

pub use average::*;
pub use divergence::*;
pub use locality::*;
pub use measurement::*;
pub use operator::*;
