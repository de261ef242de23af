//! Project tables: loading, summary statistics, transforms and fold assignment.

mod arff;
mod dataset;
mod folds;
mod impute;
mod schema;
mod stats;
mod transform;

use std::path::PathBuf;

pub use arff::{import_arff, ArffOptions};
pub use dataset::{Cell, Column, Dataset, DatasetBuilder, MISSING_TOKEN};
pub use folds::{make_folds, FoldAssignment};
pub use impute::Imputer;
pub use schema::{ColumnKind, ColumnRole, FeatureSchema, Schema};
pub use stats::{summary_stats, StatsReport};
pub use transform::{log_transform, min_max_normalize, MinMaxScaler};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("schema/data column mismatch: {0}")]
    ColumnMismatch(String),
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("empty data file")]
    Empty,
    #[error("row {row}, column '{column}': missing effort")]
    MissingEffort { row: usize, column: String },
    #[error("row {row}, column '{column}': non-positive effort {value}")]
    NonPositiveEffort { row: usize, column: String, value: f64 },
    #[error("row {row}, column '{column}': negative value {value} cannot be log-transformed")]
    NegativeValue { row: usize, column: String, value: f64 },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("{rows} rows, at least {needed} required")]
    TooFewRows { rows: usize, needed: usize },
    #[error("invalid fold request: {0}")]
    Folds(String),
    #[error("{0}")]
    Shape(String),
}
