//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file header or structure (bad magic, version, truncation).
    #[error("invalid feature file: {0}")]
    Format(String),

    #[error("row {row}: expected {expected} feature values, found {found}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: {message}")]
    RowParse { row: usize, message: String },

    #[error("row {row}: non-finite feature value in column {column}")]
    NonFiniteValue { row: usize, column: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("degenerate feature: {context} example {index} has norm {norm:.3e} after centering")]
    DegenerateFeature {
        context: &'static str,
        index: usize,
        norm: f64,
    },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("curvature pair rejected: s'w = {sw:.3e} is below threshold {threshold:.3e}")]
    RejectedPair { sw: f64, threshold: f64 },

    #[error("direction is not a descent direction (g'd = {gd:.3e})")]
    NotDescentDirection { gd: f64 },

    #[error("line search found no sufficient-decrease point after {evaluations} evaluations")]
    LineSearchFailed { evaluations: usize },

    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("class {class}: {source}")]
    ClassFit {
        class: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("annealing stage {stage} (lambda2 = {lambda2}): {source}")]
    Stage {
        stage: usize,
        lambda2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} episodes failed (more than 1%); first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
