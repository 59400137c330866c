use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 1 for input and I/O problems, 2 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn from_core(context: &str, err: coherence_transfer::Error) -> Self {
        if err.is_solver_failure() {
            CliError::Solver(format!("{context}: {err}"))
        } else {
            CliError::Validation(format!("{context}: {err}"))
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
