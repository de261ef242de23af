//! Comparison estimators: analogy (1-NN), stepwise regression on log-scaled
//! data, and a one-hidden-layer perceptron.

mod cbr;
mod mlp;
mod swr;

pub use cbr::CbrModel;
pub use mlp::{MlpConfig, MlpModel};
pub use swr::{SwrModel, SWR_ENTRY_P, SWR_REMOVAL_P};

use crate::data::Cell;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("record has {got} values, model expects {expected}")]
    Arity { got: usize, expected: usize },
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

/// A fitted effort estimator.
pub trait Estimator {
    fn predict(&self, record: &[Cell]) -> Result<f64, BaselineError>;
}

pub(crate) fn check_arity(record: &[Cell], expected: usize) -> Result<(), BaselineError> {
    if record.len() == expected {
        Ok(())
    } else {
        Err(BaselineError::Arity {
            got: record.len(),
            expected,
        })
    }
}
