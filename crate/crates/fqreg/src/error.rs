//! Crate-wide error type.

use thiserror::Error;

/// Stage of the testing pipeline that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Principal component decomposition of the predictor sample.
    Fpca,
    /// Least-squares fit of the projected quadratic model.
    Fit,
    /// Test statistic and p-value computation.
    Statistic,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Fpca => "fpca",
            Stage::Fit => "fit",
            Stage::Statistic => "statistic",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two curves that must live on one grid do not.
    #[error("grid mismatch: curves must share an identical grid")]
    GridMismatch,

    /// A spline was asked to extrapolate.
    #[error("point {point} is outside the spline range [{min}, {max}]")]
    OutOfRange { point: f64, min: f64, max: f64 },

    /// The normal equations lost a pivot; the design is rank deficient.
    #[error("singular design: column {column} is linearly dependent on earlier columns")]
    SingularDesign { column: usize },

    /// A requested principal component is not numerically identifiable.
    #[error("degenerate component {index}: {reason}")]
    ComponentDegenerate { index: usize, reason: String },

    /// Residual variance is numerically zero, so the test statistic is undefined.
    #[error("perfect fit: residual variance is zero and the test statistic is undefined")]
    PerfectFit,

    /// An iterative numerical kernel hit its sweep cap.
    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    /// An input file violated its schema.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Error raised inside one stage of [`run_test`](crate::quadratic::run_test).
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    /// Error raised by one iteration of a Monte Carlo study.
    #[error("iteration {index}: {source}")]
    Iteration {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    pub(crate) fn in_iteration(index: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::Iteration {
            index,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
