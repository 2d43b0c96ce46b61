//! Least squares with standard errors, highest-density intervals, and the
//! scaled-mean-difference statistic.

mod dataset;
mod interval;
mod linalg;
mod ols;
mod smd;

pub use dataset::{read_labeled_column, Dataset};
pub use interval::{hpdi, Interval};
pub use ols::{min_norm_fit, ols_fit, ridge_fit, FitResult, PointFit};
pub use smd::scaled_mean_diff;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("design matrix is rank deficient (collinear or constant predictors)")]
    RankDeficient,
    #[error("need more than {params} rows to fit {params} parameters, got {rows}")]
    InsufficientRows { rows: usize, params: usize },
    #[error("no samples")]
    EmptySamples,
    #[error("interval mass must be in (0, 1], got {0}")]
    InvalidMass(f64),
    #[error("group `{0}` needs at least two members with nonzero spread")]
    DegenerateGroup(String),
    #[error("no observations carry group tag `{0}`")]
    UnknownGroup(String),
    #[error("{0} values but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("ridge penalty must be positive and finite, got {0}")]
    InvalidPenalty(f64),
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}
