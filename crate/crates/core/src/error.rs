use quadmat_runtime::RuntimeError;
use thiserror::Error;

use crate::leaf::LeafError;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Leaf(#[from] LeafError),
    #[error("matrix is not positive definite (global diagonal index {index})")]
    NotPositiveDefinite { index: usize },
    #[error("matrix parameters differ: {left} vs {right}")]
    ParamsMismatch { left: String, right: String },
    #[error("the {0} product needs operands stored as symmetric upper triangles")]
    SymmetryRequired(&'static str),
    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
    #[error("index ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("malformed node payload: {0}")]
    Corrupt(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MatrixError {
    /// Recovers the typed error a task body raised.
    pub(crate) fn from_run(err: RuntimeError) -> MatrixError {
        match err {
            RuntimeError::TaskFailed {
                task,
                task_type,
                source,
            } => match source.downcast::<MatrixError>() {
                Ok(e) => *e,
                Err(source) => match source.downcast::<LeafError>() {
                    Ok(e) => MatrixError::Leaf(*e),
                    Err(source) => match source.downcast::<RuntimeError>() {
                        Ok(e) => MatrixError::Runtime(*e),
                        Err(source) => MatrixError::Runtime(RuntimeError::TaskFailed {
                            task,
                            task_type,
                            source,
                        }),
                    },
                },
            },
            other => MatrixError::Runtime(other),
        }
    }
}
