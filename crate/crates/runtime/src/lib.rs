//! Chunks-and-tasks execution substrate.
//!
//! Data lives in an immutable [`ChunkStore`]: every chunk is a byte payload
//! addressed by a [`ChunkId`], and the distinguished [`ChunkId::NIL`] stands
//! for "identically zero". Work is expressed as tasks: a task names a
//! registered [`TaskKind`] and a list of input chunks (or futures of other
//! tasks). Executing a task may register more chunks and child tasks, and a
//! task may forward its result to a child task's output.
//!
//! The [`Engine`] runs a task graph on a set of virtual workers. Each worker
//! owns a deque; it pops its newest task, and when idle it steals the
//! shallowest task from a victim picked by a seeded random sweep. Two
//! substrates share this logic: a deterministic single-threaded simulation
//! that interleaves workers round-robin, and real threads on shared memory.
//! In both, chunk reads are accounted against a per-worker LRU cache so the
//! data each worker receives from chunks owned by others can be measured.

mod cache;
mod chunk;
mod engine;
mod error;
mod event;
mod task;

pub use cache::ByteLru;
pub use chunk::{Chunk, ChunkId, ChunkStore, WorkerId};
pub use engine::{Engine, ExecMode, Note, RunReport, RuntimeConfig, StealPolicy, WorkerStats};
pub use error::RuntimeError;
pub use event::{Event, EventKind, ParseEventError, EVENT_LOG_HEADER};
pub use task::{Arg, TaskContext, TaskError, TaskHandle, TaskKind, TaskOutput, TaskRegistry, TaskSpec};
