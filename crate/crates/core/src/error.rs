use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("disk {index} outside domain: {reason}")]
    DiskOutsideDomain { index: usize, reason: String },

    #[error("incompatible Neumann data: net injected current {net:e}")]
    IncompatibleNeumann { net: f64 },

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("singular kernel: {0}")]
    SingularKernel(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("wave family `{family}` cannot be inverted by method `{method}`")]
    FamilyMismatch { family: &'static str, method: &'static str },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_numerical(),
            e => matches!(e, Error::NoConvergence { .. } | Error::SingularKernel(_) | Error::LatticeMismatch(_)),
        }
    }

    pub fn is_config(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_config(),
            e => matches!(e, Error::ConfigSyntax { .. } | Error::ConfigValue { .. }),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}
