//! Decoding-failure probabilities of random block codes on the two-state
//! Gilbert-Elliott channel: occupancy-time laws, Gallager-type upper bounds,
//! exact random-coding values under minimum-distance and maximum-likelihood
//! decoding, and a Monte Carlo cross-check.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod markov;
pub mod montecarlo;
pub mod quadrature;
pub mod specialfn;

pub use error::{Error, Result};
