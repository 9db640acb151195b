use thiserror::Error;

/// Errors raised anywhere in the solver, barrier and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain construction failed: {0}")]
    Domain(String),

    #[error("grid would have {count} nodes, above the budget of {budget}")]
    Resource { count: usize, budget: usize },

    #[error("stencil geometry error at node {node}: {msg}")]
    Geometry { node: usize, msg: String },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsh { min_eigenvalue: f64 },

    #[error("ill-posed configuration: {0}")]
    IllPosed(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("barrier construction failed at boundary point {xi:?}: {msg}")]
    Barrier { xi: Vec<f64>, msg: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("exponent fit failed: {0}")]
    Fit(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the `cma` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Input(_) => 2,
            Error::Numeric(_)
            | Error::NotPsh { .. }
            | Error::Geometry { .. }
            | Error::IllPosed(_)
            | Error::Fit(_)
            | Error::Barrier { .. }
            | Error::Domain(_) => 3,
            Error::Resource { .. } => 5,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
