use thiserror::Error;

use crate::chunk::ChunkId;
use crate::task::TaskError;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("chunk store out of memory: {requested} bytes requested, {available} bytes available")]
    OutOfMemory { requested: u64, available: u64 },

    #[error("invalid chunk handle {0}")]
    InvalidHandle(ChunkId),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown task type `{0}`")]
    UnknownTaskType(String),

    #[error("invalid task handle {0}")]
    InvalidTask(u64),

    #[error("chunk {chunk} ({size} bytes) does not fit in a {capacity}-byte worker cache")]
    CacheTooSmall { chunk: ChunkId, size: u64, capacity: u64 },

    #[error("deadlock: task {task} (`{task_type}`, depth {depth}) waits on a chunk that is never produced")]
    Deadlock { task: u64, task_type: String, depth: u32 },

    #[error("task {task} (`{task_type}`) failed: {source}")]
    TaskFailed {
        task: u64,
        task_type: String,
        #[source]
        source: TaskError,
    },
}

impl RuntimeError {
    /// The error a task body returned, if this is a task failure.
    pub fn task_source(&self) -> Option<&(dyn std::error::Error + Send + Sync + 'static)> {
        match self {
            RuntimeError::TaskFailed { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
