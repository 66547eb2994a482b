//! Error type shared by every module in the crate.

/// Everything that can go wrong across mesh handling, the solvers and the
/// artifact formats. Variants are grouped by whether they describe bad input
/// (rejected before any numerics run) or a numerical failure mid-run; the
/// split drives the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed mesh: {0}")]
    MalformedMesh(String),

    #[error("degenerate element: tet {tet} has volume {volume:.3e}")]
    DegenerateElement { tet: usize, volume: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero reference norm: {0}")]
    ZeroNorm(String),

    #[error("numerical blowup: {what} at t = {time:.6e}")]
    Blowup { what: String, time: f64 },

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("degenerate snapshot set: {0}")]
    DegenerateSnapshots(String),

    #[error("matrix not symmetric: {0}")]
    NotSymmetric(String),

    #[error("ill-conditioned reduced system: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attach a path to an io error.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 for rejected input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::MalformedMesh(_)
            | Error::DegenerateElement { .. }
            | Error::Parse { .. }
            | Error::Config { .. }
            | Error::Io { .. }
            | Error::DimensionMismatch(_)
            | Error::ZeroNorm(_) => 1,
            Error::Blowup { .. }
            | Error::SolverFailure(_)
            | Error::DegenerateSnapshots(_)
            | Error::NotSymmetric(_)
            | Error::IllConditioned(_) => 2,
        }
    }
}
