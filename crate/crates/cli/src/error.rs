use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] zoadmm::Error),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("estimator bound violated: {0}")]
    BoundViolation(String),
}

impl CliError {
    /// 2 configuration, 3 divergence or non-finite values, 4 I/O and data
    /// files, 5 gradient-bound violation.
    pub fn exit_code(&self) -> i32 {
        use zoadmm::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
            CliError::BoundViolation(_) => 5,
            CliError::Solver(e) => match e {
                E::Diverged { .. } | E::NonFiniteValue { .. } => 3,
                E::Io(_) | E::Parse { .. } | E::NonAscendingIndex { .. } | E::InvalidDataset(_) => 4,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
