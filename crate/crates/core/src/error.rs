use std::path::PathBuf;

/// Errors produced by the lattice-control library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a lattice box do not.
    #[error("lattice box mismatch: {0}")]
    BoxMismatch(String),

    /// The requested quantity needs information the input does not carry
    /// (e.g. a gradient for a tabulated potential).
    #[error("capability error: {0}")]
    Capability(String),

    /// A linear-algebra routine failed or produced an unacceptable residual.
    #[error("solver error: {message}")]
    Solver { message: String, residuals: Vec<f64> },

    /// A control window's Gramian is numerically singular.
    #[error("window {window} is not observable: Gramian min eigenvalue {min_eig:e} below threshold {threshold:e}")]
    NonObservable {
        window: usize,
        min_eig: f64,
        threshold: f64,
    },

    /// A weight construction could not satisfy its sampled conditions.
    #[error("weight construction failed: condition `{condition}` (measured {measured:e}, needed {needed:e})")]
    Construction {
        condition: String,
        measured: f64,
        needed: f64,
    },

    /// A fit had too few usable points.
    #[error("fit error: {0}")]
    Fit(String),

    /// A run configuration failed validation.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
