use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad sizes, shapes or parameter ranges passed to an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Problem data or configuration that violates a modelling assumption.
    #[error("validation failed: {0}")]
    Validation(String),

    /// `(I - K) u = f` has no solution because `f` has a nonzero mean.
    #[error("not solvable: right-hand side has weighted mean {mean:e} (must vanish)")]
    Solvability { mean: f64 },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("no convergence after {iterations} iterations (last residual {:e})", residuals.last().copied().unwrap_or(f64::NAN))]
    Convergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration: {0}")]
    Config(String),

    /// A convergence study stopped early; `partial` holds the completed rows.
    #[error("study aborted at eps = {eps:e}: {source}")]
    StudyAborted {
        eps: f64,
        partial: Box<crate::analysis::ConvergenceReport>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// The innermost error, looking through aborted studies.
    pub fn root(&self) -> &Error {
        match self {
            Error::StudyAborted { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
