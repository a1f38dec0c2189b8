//! Optimal Bayesian phase estimation in a lossy two-mode interferometer.
//!
//! With no prior knowledge of the phase, the best covariant measurement turns
//! the average `4 sin^2(theta/2)` cost of a probe `sum_n alpha_n |n, N-n>`
//! into `2 - alpha^T A alpha` for a non-negative tridiagonal `A` built from
//! the binomial loss weights. The crate assembles `A`, extracts its top
//! eigenpair, evaluates the analytic lower bounds and the coherent-state
//! benchmark, and simulates the measurement by Monte Carlo.

pub mod bounds;
pub mod eigen;
pub mod error;
pub mod loss;
pub mod optimizer;
pub mod simulator;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
pub use loss::{LossModel, ProbeState};
pub use optimizer::{optimize, CostMatrix, CostSpec, OptimalSolution};
