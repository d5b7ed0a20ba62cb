use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Divergence undefined, e.g. an observed cell with zero model probability at β = 0.
    #[error("domain error: {0}")]
    Domain(String),

    /// Some risk has no failures under one of the stress levels.
    #[error("ill-posed data: {0}")]
    IllPosed(String),

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        params: Vec<f64>,
    },

    #[error("information matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    SingularInformation { condition: f64 },

    #[error("could not generate a well-posed dataset after {attempts} attempts")]
    DegenerateData { attempts: usize },

    #[error("degenerate value: {0}")]
    Degenerate(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
