use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(
        "{field} Newton did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NotConverged {
        field: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{field} Newton diverged at iteration {iteration} (residual {residual:.3e})")]
    Diverged {
        field: &'static str,
        iteration: usize,
        residual: f64,
    },

    #[error("singular linear system: pivot {pivot:.3e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures raised by the nonlinear or linear solvers.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::Diverged { .. } | Error::Singular { .. }
        )
    }
}
