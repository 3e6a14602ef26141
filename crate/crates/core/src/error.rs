use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "quadric {quadric} has an infinite order-2 distance at a batch point \
         (constant nonzero polynomial); re-initialize the model"
    )]
    DegenerateQuadric { quadric: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("model file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported model file version {0:?}")]
    UnsupportedVersion(String),

    #[error("single-class labels: AUC needs both inliers and outliers")]
    SingleClass,

    #[error("no feasible point found on the quadric")]
    NoFeasiblePoint,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
