//! Lipschitz anomaly detection.
//!
//! A critic network is trained under a soft 1-Lipschitz constraint to
//! separate nominal data from a corrupted copy of it; the negated critic
//! output is the anomaly score. The crate also carries the reference
//! scorers it is compared against, an exact Wasserstein-1 oracle used to
//! check the duality and robustness properties on small instances, and the
//! experiment drivers that tie everything together.

pub mod autodiff;
pub mod baselines;
pub mod corruption;
pub mod datasets;
mod error;
pub mod eval;
pub mod models;
pub mod optim;
pub mod rng;
pub mod tensor;
pub mod trainer;
pub mod transport;

pub use error::{Error, Result};
pub use tensor::Tensor;
