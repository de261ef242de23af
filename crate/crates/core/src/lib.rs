//! Model trees whose hyperparameters are tuned by the Bees Algorithm, with
//! the baselines, metrics and cross-validation harness used to evaluate
//! them on software effort data.

pub mod baselines;
pub mod bees;
pub mod data;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod tree;
