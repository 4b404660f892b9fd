use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("isolated node {0}")]
    IsolatedNode(usize),

    #[error("pooled isolated node {0}")]
    PooledIsolatedNode(usize),

    #[error("adjacency is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),

    #[error("power iteration did not converge after {iters} iterations (last estimate {estimate})")]
    NoConvergence { iters: usize, estimate: f64 },

    #[error("degenerate pose in frame {0}")]
    DegeneratePose(usize),

    #[error("degenerate step")]
    DegenerateStep,

    #[error("{failed} of {total} parameters failed the gradient check")]
    GradcheckFailed { failed: usize, total: usize },

    #[error("non-finite loss")]
    NonFiniteLoss,

    #[error("non-finite value in parameter {0}")]
    NonFiniteParameter(String),

    #[error("unknown parameter {0}")]
    UnknownParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::IsolatedNode(_) | Error::PooledIsolatedNode(_) | Error::Asymmetric(..) => "graph",
            Error::NoConvergence { .. } => "convergence",
            Error::DegeneratePose(_) => "pose",
            Error::DegenerateStep | Error::GradcheckFailed { .. } => "gradcheck",
            Error::NonFiniteLoss | Error::NonFiniteParameter(_) => "numeric",
            Error::UnknownParameter(_) => "parameter",
            Error::InvalidArgument(_) => "argument",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Dataset(_) => "dataset",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
