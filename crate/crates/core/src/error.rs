use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unit {0} has no neighbors")]
    IsolatedUnit(String),

    #[error("self-loop on unit {0}")]
    SelfLoop(String),

    #[error("unit {0} does not appear in the adjacency file")]
    UnknownUnit(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("chain initialisation failed: {0}")]
    Init(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Input problems (bad files, bad flags) as opposed to numerical failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NotPositiveDefinite(_) | Error::Init(_) | Error::Degenerate(_)
        )
    }
}
