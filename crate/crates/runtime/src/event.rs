//! Plain-text event log.
//!
//! One record per line, six comma-separated fields:
//!
//! ```text
//! event_kind,worker,task_id,depth,chunk_id,bytes
//! ```
//!
//! `task_id` is 0 outside task execution, `chunk_id` is 0 (nil) when the
//! event concerns no chunk. Kinds:
//!
//! | kind             | worker        | meaning                                      |
//! |------------------|---------------|----------------------------------------------|
//! | `register_task`  | registering   | task created                                 |
//! | `push`           | deque owner   | ready task appended to the worker's deque    |
//! | `pop`            | deque owner   | owner took its newest task                   |
//! | `stolen`         | victim        | task removed from the victim's deque         |
//! | `steal`          | thief         | follows `stolen`; thief will execute it      |
//! | `execute`        | executing     | task body invoked                            |
//! | `complete`       | completing    | task output resolved to `chunk_id`           |
//! | `register_chunk` | owner         | chunk of `bytes` registered                  |
//! | `hit`            | reader        | chunk read served locally                    |
//! | `fetch`          | reader        | cache miss; `bytes` received from the owner  |

use std::fmt;
use std::str::FromStr;

use crate::chunk::{ChunkId, WorkerId};

pub const EVENT_LOG_HEADER: &str = "event_kind,worker,task_id,depth,chunk_id,bytes";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    RegisterTask,
    Push,
    Pop,
    Stolen,
    Steal,
    Execute,
    Complete,
    RegisterChunk,
    Hit,
    Fetch,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::RegisterTask => "register_task",
            EventKind::Push => "push",
            EventKind::Pop => "pop",
            EventKind::Stolen => "stolen",
            EventKind::Steal => "steal",
            EventKind::Execute => "execute",
            EventKind::Complete => "complete",
            EventKind::RegisterChunk => "register_chunk",
            EventKind::Hit => "hit",
            EventKind::Fetch => "fetch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub worker: WorkerId,
    pub task: u64,
    pub depth: u32,
    pub chunk: ChunkId,
    pub bytes: u64,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.kind.as_str(),
            self.worker,
            self.task,
            self.depth,
            self.chunk,
            self.bytes
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed event record `{0}`")]
pub struct ParseEventError(pub String);

impl FromStr for EventKind {
    type Err = ParseEventError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "register_task" => EventKind::RegisterTask,
            "push" => EventKind::Push,
            "pop" => EventKind::Pop,
            "stolen" => EventKind::Stolen,
            "steal" => EventKind::Steal,
            "execute" => EventKind::Execute,
            "complete" => EventKind::Complete,
            "register_chunk" => EventKind::RegisterChunk,
            "hit" => EventKind::Hit,
            "fetch" => EventKind::Fetch,
            _ => return Err(ParseEventError(s.to_string())),
        })
    }
}

impl FromStr for Event {
    type Err = ParseEventError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let bad = || ParseEventError(line.to_string());
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 6 {
            return Err(bad());
        }
        Ok(Event {
            kind: fields[0].parse()?,
            worker: fields[1].parse().map_err(|_| bad())?,
            task: fields[2].parse().map_err(|_| bad())?,
            depth: fields[3].parse().map_err(|_| bad())?,
            chunk: ChunkId::from_raw(fields[4].parse().map_err(|_| bad())?),
            bytes: fields[5].parse().map_err(|_| bad())?,
        })
    }
}
