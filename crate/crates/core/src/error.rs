use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate or parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A cost expression or grid violates a structural invariant.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("gamma function pole at {0}")]
    Pole(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    /// The level set or integration range leaves the sampled box.
    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("division unstable at frequency {frequency:?}: |K| = {modulus:e}")]
    DivisionInstability { frequency: Vec<f64>, modulus: f64 },

    #[error("kernel not integrable: {0}")]
    Integrability(String),

    #[error("production function vanishes on the whole simplex")]
    DegenerateProduction,

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
