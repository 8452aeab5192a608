//! Learning to predict combinatorial structures.
//!
//! The crate trains structured ridge-regression models whose only access to
//! the (exponentially large) output space is the exact triple
//! (|Y|, Psi = sum psi(y), C = sum psi psi^T), decodes predictions with
//! z-approximation guarantees, draws exact samples from exponential-family
//! distributions over structures via coupling from the past, and estimates
//! partition functions with a randomised approximation scheme.

pub mod combinatorics;
pub mod counting;
pub mod decode;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod online;
pub mod partition;
pub mod ridge;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
