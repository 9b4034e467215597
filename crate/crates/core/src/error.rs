use thiserror::Error;

use crate::blogit::LogitError;
use crate::cohort::CohortError;
use crate::dtree::TreeError;
use crate::eval::{EvalError, StatsError};
use crate::msearch::SelectError;

/// Any failure raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Logit(#[from] LogitError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("fold {fold} (held out {id}): {source}")]
    Fold { fold: usize, id: String, source: Box<Error> },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for numerical failures (non-convergence, singular curvature), as opposed to
    /// invalid input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Logit(LogitError::NonConvergence { .. } | LogitError::SingularHessian)
            | Error::Select(SelectError::Logit(LogitError::NonConvergence { .. } | LogitError::SingularHessian)) => {
                true
            }
            Error::Fold { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_are_recognised_through_wrappers() {
        let nc = LogitError::NonConvergence { iterations: 100, gradient_norm: 1.0 };
        assert!(Error::from(nc.clone()).is_numerical());
        assert!(Error::from(SelectError::Logit(LogitError::SingularHessian)).is_numerical());
        let wrapped = Error::Fold { fold: 3, id: "P004".into(), source: Box::new(Error::from(SelectError::Logit(nc))) };
        assert!(wrapped.is_numerical());
        assert!(!Error::from(EvalError::SingleClass).is_numerical());
    }
}
