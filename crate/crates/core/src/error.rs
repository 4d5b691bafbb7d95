use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in `{param}`: {detail}")]
    Domain { param: &'static str, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("normalization violated: {0}")]
    Normalization(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("quadrature did not reach tolerance: {0}")]
    Quadrature(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("Monte-Carlo run failed: {0}")]
    Run(String),

    #[error("histogram is empty (no matrices accumulated)")]
    EmptyGrid,

    #[error("model cannot be evaluated on bin {bin}: {source}")]
    ModelBin {
        bin: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("refusing to overwrite {0} (pass --force)")]
    Exists(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(param: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            param,
            detail: detail.into(),
        }
    }

    /// Process exit code for the command-line front end: 2 for usage and
    /// domain problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain { .. }
            | Error::Dimension { .. }
            | Error::Normalization(_)
            | Error::Singular(_)
            | Error::EmptyGrid
            | Error::Exists(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::ModelBin { source, .. } => source.exit_code(),
            Error::Quadrature(_) | Error::Eigensolver(_) | Error::Overflow(_) | Error::Run(_) => 3,
        }
    }
}
