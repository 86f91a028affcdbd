use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::chunk::{Chunk, ChunkId, WorkerId};
use crate::engine::Engine;
use crate::error::RuntimeError;

/// Error type returned by task bodies.
pub type TaskError = Box<dyn std::error::Error + Send + Sync + 'static>;

/// Handle to a registered task; its output becomes available once the task
/// and everything it forwarded to have completed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskHandle(pub(crate) u64);

impl TaskHandle {
    pub fn id(self) -> u64 {
        self.0
    }
}

impl fmt::Debug for TaskHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TaskHandle({})", self.0)
    }
}

/// A task input: either an existing chunk or the future output of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arg {
    Chunk(ChunkId),
    Future(TaskHandle),
}

impl From<ChunkId> for Arg {
    fn from(id: ChunkId) -> Self {
        Arg::Chunk(id)
    }
}

impl From<TaskHandle> for Arg {
    fn from(h: TaskHandle) -> Self {
        Arg::Future(h)
    }
}

/// A deferred operation. `depth` and `parent` are filled in on registration:
/// roots get depth 0, children get their spawner's depth plus one.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub task_type: String,
    pub inputs: Vec<Arg>,
    pub params: Vec<f64>,
    pub depth: u32,
    pub parent: Option<TaskHandle>,
}

impl TaskSpec {
    pub fn new(task_type: impl Into<String>, inputs: Vec<Arg>, params: Vec<f64>) -> Self {
        TaskSpec {
            task_type: task_type.into(),
            inputs,
            params,
            depth: 0,
            parent: None,
        }
    }
}

/// What a task body produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskOutput {
    /// The result is this chunk (possibly nil, possibly one of the inputs).
    Chunk(ChunkId),
    /// The result is whatever the given task produces.
    Forward(TaskHandle),
}

/// A task type. `execute` runs when every input is a non-nil chunk;
/// `execute_fallback` runs instead when at least one input is nil.
pub trait TaskKind: Send + Sync {
    fn name(&self) -> &str;

    fn execute(&self, ctx: &mut TaskContext<'_>, inputs: &[ChunkId], params: &[f64]) -> Result<TaskOutput, TaskError>;

    fn execute_fallback(
        &self,
        ctx: &mut TaskContext<'_>,
        inputs: &[ChunkId],
        params: &[f64],
    ) -> Result<TaskOutput, TaskError> {
        self.execute(ctx, inputs, params)
    }
}

/// Task types by name.
#[derive(Clone, Default)]
pub struct TaskRegistry {
    kinds: BTreeMap<String, Arc<dyn TaskKind>>,
}

impl TaskRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `kind` under its own name, replacing any previous entry.
    pub fn register(&mut self, kind: impl TaskKind + 'static) {
        self.register_arc(Arc::new(kind));
    }

    pub fn register_arc(&mut self, kind: Arc<dyn TaskKind>) {
        self.kinds.insert(kind.name().to_string(), kind);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TaskKind>, RuntimeError> {
        self.kinds
            .get(name)
            .cloned()
            .ok_or_else(|| RuntimeError::UnknownTaskType(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.kinds.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }
}

impl fmt::Debug for TaskRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.kinds.keys()).finish()
    }
}

/// The view a task body has of the runtime while it executes on a worker.
pub struct TaskContext<'e> {
    pub(crate) engine: &'e Engine,
    pub(crate) worker: WorkerId,
    pub(crate) task: TaskHandle,
    pub(crate) depth: u32,
}

impl<'e> TaskContext<'e> {
    pub fn worker(&self) -> WorkerId {
        self.worker
    }

    pub fn task(&self) -> TaskHandle {
        self.task
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Reads a chunk on behalf of the executing worker (accounted).
    pub fn get_chunk(&self, id: ChunkId) -> Result<Arc<Chunk>, RuntimeError> {
        self.engine.read_chunk(id, self.worker, self.task.0, self.depth)
    }

    /// Registers a chunk owned by the executing worker.
    pub fn register_chunk(&self, payload: Vec<u8>) -> Result<ChunkId, RuntimeError> {
        self.engine.store_chunk(payload, self.worker, self.task.0, self.depth)
    }

    /// Registers a child task one level deeper than this one.
    pub fn register_task(
        &self,
        task_type: &str,
        inputs: Vec<Arg>,
        params: Vec<f64>,
    ) -> Result<TaskHandle, RuntimeError> {
        let mut spec = TaskSpec::new(task_type, inputs, params);
        spec.depth = self.depth + 1;
        spec.parent = Some(self.task);
        self.engine.enqueue(spec, self.worker)
    }

    /// Attaches a labelled value to the run report.
    pub fn note(&self, label: &'static str, value: f64) {
        self.engine.push_note(label, self.task.0, value);
    }
}
