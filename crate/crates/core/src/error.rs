use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("constraint matrix A is rank deficient: smallest/largest singular value ratio {ratio:e}")]
    RankDeficient { ratio: f64 },

    #[error("dimension mismatch{}: {detail}", block_label(*.block))]
    DimensionMismatch { block: Option<usize>, detail: String },

    #[error("oracle returned a non-finite value ({value}) for component {component}")]
    NonFiniteValue { component: usize, value: f64 },

    #[error("mini-batch is empty")]
    EmptyBatch,

    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("Lipschitz constant must be positive and finite, got {0}")]
    InvalidLipschitz(f64),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("solver diverged at iteration {iter}: {quantity} = {value:e}")]
    Diverged {
        iter: usize,
        quantity: &'static str,
        value: f64,
    },

    #[error("iterates {first} and {second} are not consecutive")]
    MismatchedStates { first: usize, second: usize },

    #[error("groups do not cover coordinates {missing:?}")]
    CoverageError { missing: Vec<usize> },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: feature indices are not strictly ascending ({previous} then {current})")]
    NonAscendingIndex {
        path: PathBuf,
        line: usize,
        previous: usize,
        current: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

fn block_label(block: Option<usize>) -> String {
    match block {
        Some(j) => format!(" in block {j}"),
        None => String::new(),
    }
}
