//! Linear contextual bandits whose reward also depends on a post-serving
//! context `z` that is only revealed after the arm is pulled.
//!
//! The learner predicts `z` from the pre-serving context `x` with a pluggable
//! estimator `φ̂` and plays an upper-confidence index on `(x, φ̂(x))`.

pub mod env;
pub mod epl;
pub mod error;
pub mod estimator;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod policies;
pub mod rng;
mod util;

pub use error::{Error, Result};
