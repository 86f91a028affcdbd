use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cache::ByteLru;
use crate::chunk::{Chunk, ChunkId, ChunkStore, WorkerId};
use crate::error::RuntimeError;
use crate::event::{Event, EventKind};
use crate::task::{Arg, TaskContext, TaskHandle, TaskKind, TaskOutput, TaskRegistry, TaskSpec};

/// How idle workers choose what to steal. Only breadth-first exists: the
/// thief takes the shallowest task on the victim's deque.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StealPolicy {
    #[default]
    BreadthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Single thread, virtual workers interleaved round-robin. Deterministic.
    #[default]
    Simulate,
    /// One OS thread per worker.
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeConfig {
    pub n_workers: usize,
    pub cache_capacity_bytes: u64,
    pub steal_policy: StealPolicy,
    pub seed: u64,
    pub mode: ExecMode,
    pub record_events: bool,
    pub store_capacity_bytes: Option<u64>,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            n_workers: 1,
            cache_capacity_bytes: 64 << 20,
            steal_policy: StealPolicy::BreadthFirst,
            seed: 0,
            mode: ExecMode::Simulate,
            record_events: false,
            store_capacity_bytes: None,
        }
    }
}

impl RuntimeConfig {
    pub fn validate(&self) -> Result<(), RuntimeError> {
        if self.n_workers == 0 {
            return Err(RuntimeError::Config("n_workers must be at least 1".into()));
        }
        if self.cache_capacity_bytes == 0 {
            return Err(RuntimeError::Config("cache_capacity_bytes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WorkerStats {
    pub worker: WorkerId,
    pub tasks_executed: u64,
    pub steals: u64,
    pub bytes_received: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

/// A labelled value attached by a task body.
#[derive(Debug, Clone, PartialEq)]
pub struct Note {
    pub label: &'static str,
    pub task: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub stats: Vec<WorkerStats>,
    pub events: Vec<Event>,
    pub notes: Vec<Note>,
}

impl RunReport {
    pub fn total_tasks(&self) -> u64 {
        self.stats.iter().map(|s| s.tasks_executed).sum()
    }

    pub fn total_bytes_received(&self) -> u64 {
        self.stats.iter().map(|s| s.bytes_received).sum()
    }

    /// The event log as text, one record per line, with a header line.
    pub fn event_log(&self) -> String {
        let mut out = String::from(crate::event::EVENT_LOG_HEADER);
        out.push('\n');
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

enum State {
    Waiting,
    Queued,
    Running,
    Forwarded,
    Done(ChunkId),
}

enum Dependent {
    Input(u64, usize),
    Forward(u64),
}

struct TaskRecord {
    kind: Arc<dyn TaskKind>,
    inputs: Vec<ChunkId>,
    params: Vec<f64>,
    depth: u32,
    unresolved: usize,
    state: State,
    dependents: Vec<Dependent>,
    root: bool,
}

#[derive(Default)]
struct Graph {
    tasks: HashMap<u64, TaskRecord>,
    root_results: HashMap<u64, ChunkId>,
}

#[derive(Clone, Copy)]
struct Queued {
    task: u64,
    depth: u32,
}

struct WorkerState {
    cache: ByteLru,
    stats: WorkerStats,
}

/// Chunk store plus task scheduler over `n_workers` virtual workers.
pub struct Engine {
    registry: TaskRegistry,
    config: RuntimeConfig,
    store: ChunkStore,
    workers: Vec<Mutex<WorkerState>>,
    deques: Vec<Mutex<VecDeque<Queued>>>,
    rngs: Vec<Mutex<ChaCha8Rng>>,
    graph: Mutex<Graph>,
    next_task: AtomicU64,
    outstanding: AtomicUsize,
    live: AtomicUsize,
    events: Mutex<Vec<Event>>,
    notes: Mutex<Vec<Note>>,
}

fn worker_rng(seed: u64, w: WorkerId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (w as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl Engine {
    pub fn new(registry: TaskRegistry, config: RuntimeConfig) -> Result<Self, RuntimeError> {
        config.validate()?;
        let n = config.n_workers;
        Ok(Engine {
            registry,
            store: ChunkStore::new(config.store_capacity_bytes),
            workers: (0..n)
                .map(|w| {
                    Mutex::new(WorkerState {
                        cache: ByteLru::new(config.cache_capacity_bytes),
                        stats: WorkerStats {
                            worker: w,
                            ..Default::default()
                        },
                    })
                })
                .collect(),
            deques: (0..n).map(|_| Mutex::new(VecDeque::new())).collect(),
            rngs: (0..n).map(|w| Mutex::new(worker_rng(config.seed, w))).collect(),
            graph: Mutex::new(Graph::default()),
            next_task: AtomicU64::new(1),
            outstanding: AtomicUsize::new(0),
            live: AtomicUsize::new(0),
            events: Mutex::new(Vec::new()),
            notes: Mutex::new(Vec::new()),
            config,
        })
    }

    pub fn config(&self) -> &RuntimeConfig {
        &self.config
    }

    pub fn registry(&self) -> &TaskRegistry {
        &self.registry
    }

    pub fn store(&self) -> &ChunkStore {
        &self.store
    }

    pub fn n_workers(&self) -> usize {
        self.config.n_workers
    }

    fn check_worker(&self, w: WorkerId) -> Result<(), RuntimeError> {
        if w >= self.config.n_workers {
            return Err(RuntimeError::Config(format!(
                "worker {w} out of range for {} workers",
                self.config.n_workers
            )));
        }
        Ok(())
    }

    /// Registers a chunk owned by `worker`.
    pub fn register_chunk(&self, payload: Vec<u8>, worker: WorkerId) -> Result<ChunkId, RuntimeError> {
        self.check_worker(worker)?;
        self.store_chunk(payload, worker, 0, 0)
    }

    /// Reads a chunk on behalf of `reader`, charging a cache miss if the
    /// chunk is remote and not cached.
    pub fn get_chunk(&self, id: ChunkId, reader: WorkerId) -> Result<Arc<Chunk>, RuntimeError> {
        self.check_worker(reader)?;
        self.read_chunk(id, reader, 0, 0)
    }

    /// Registers a root task on worker 0.
    pub fn register_task(&self, mut spec: TaskSpec) -> Result<TaskHandle, RuntimeError> {
        spec.depth = 0;
        spec.parent = None;
        self.enqueue(spec, 0)
    }

    /// Output of a root task from a completed run.
    pub fn output(&self, handle: TaskHandle) -> Result<ChunkId, RuntimeError> {
        self.graph
            .lock()
            .root_results
            .get(&handle.0)
            .copied()
            .ok_or(RuntimeError::InvalidTask(handle.0))
    }

    /// Current per-worker counters.
    pub fn worker_stats(&self) -> Vec<WorkerStats> {
        self.workers.iter().map(|w| w.lock().stats).collect()
    }

    /// Runs every registered task and everything they spawn. Worker
    /// counters, caches and the event log are reset at the start of the run.
    pub fn run_to_completion(&mut self) -> Result<RunReport, RuntimeError> {
        if self.outstanding.load(Ordering::SeqCst) == 0 {
            return Err(RuntimeError::ContractViolation(
                "run_to_completion called with no registered task".into(),
            ));
        }
        // Pending root tasks registered before the reset keep their push
        // events; everything else is per-run.
        for (w, state) in self.workers.iter().enumerate() {
            let mut s = state.lock();
            s.cache.clear();
            s.stats = WorkerStats {
                worker: w,
                ..Default::default()
            };
        }
        for (w, rng) in self.rngs.iter().enumerate() {
            *rng.lock() = worker_rng(self.config.seed, w);
        }
        self.notes.lock().clear();

        let result = match self.config.mode {
            ExecMode::Simulate => self.run_simulated(),
            ExecMode::Shared => self.run_shared(),
        };

        let mut graph = self.graph.lock();
        let finished: Vec<(u64, ChunkId)> = graph
            .tasks
            .iter()
            .filter_map(|(&id, rec)| match rec.state {
                State::Done(c) if rec.root => Some((id, c)),
                _ => None,
            })
            .collect();
        graph.root_results.extend(finished);
        graph.tasks.clear();
        drop(graph);
        for d in &self.deques {
            d.lock().clear();
        }
        self.outstanding.store(0, Ordering::SeqCst);
        self.live.store(0, Ordering::SeqCst);

        result?;
        Ok(RunReport {
            stats: self.worker_stats(),
            events: std::mem::take(&mut *self.events.lock()),
            notes: std::mem::take(&mut *self.notes.lock()),
        })
    }

    /// Convenience: register one root task, run, return its output.
    pub fn run_task(&mut self, spec: TaskSpec) -> Result<(ChunkId, RunReport), RuntimeError> {
        let h = self.register_task(spec)?;
        let report = self.run_to_completion()?;
        Ok((self.output(h)?, report))
    }

    fn run_simulated(&self) -> Result<(), RuntimeError> {
        let n = self.config.n_workers;
        while self.outstanding.load(Ordering::SeqCst) > 0 {
            let mut progressed = false;
            for w in 0..n {
                if self.outstanding.load(Ordering::SeqCst) == 0 {
                    break;
                }
                if let Some(task) = self.pop_own(w).or_else(|| self.steal(w)) {
                    self.execute(w, task)?;
                    self.live.fetch_sub(1, Ordering::SeqCst);
                    progressed = true;
                }
            }
            if !progressed {
                return Err(self.deadlock_error());
            }
        }
        Ok(())
    }

    fn run_shared(&self) -> Result<(), RuntimeError> {
        let failed = AtomicBool::new(false);
        let first_error: Mutex<Option<RuntimeError>> = Mutex::new(None);
        let fail = |e: RuntimeError| {
            let mut slot = first_error.lock();
            if slot.is_none() {
                *slot = Some(e);
            }
            failed.store(true, Ordering::SeqCst);
        };
        std::thread::scope(|scope| {
            for w in 0..self.config.n_workers {
                let failed = &failed;
                let fail = &fail;
                scope.spawn(move || {
                    let mut idle = 0u32;
                    loop {
                        if failed.load(Ordering::SeqCst) || self.outstanding.load(Ordering::SeqCst) == 0 {
                            return;
                        }
                        if let Some(task) = self.pop_own(w).or_else(|| self.steal(w)) {
                            idle = 0;
                            if let Err(e) = self.execute(w, task) {
                                fail(e);
                                return;
                            }
                            self.live.fetch_sub(1, Ordering::SeqCst);
                            continue;
                        }
                        // Every queued or running task holds a unit of `live`,
                        // and children are pushed before their parent releases
                        // its unit, so live == 0 means nothing can progress.
                        if self.live.load(Ordering::SeqCst) == 0 && self.outstanding.load(Ordering::SeqCst) > 0 {
                            fail(self.deadlock_error());
                            return;
                        }
                        idle += 1;
                        if idle < 64 {
                            std::hint::spin_loop();
                        } else if idle < 256 {
                            std::thread::yield_now();
                        } else {
                            std::thread::sleep(Duration::from_micros(50));
                        }
                    }
                });
            }
        });
        match first_error.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn deadlock_error(&self) -> RuntimeError {
        let graph = self.graph.lock();
        let blocked = graph
            .tasks
            .iter()
            .filter(|(_, r)| matches!(r.state, State::Waiting | State::Forwarded))
            .min_by_key(|(&id, _)| id);
        match blocked {
            Some((&id, rec)) => RuntimeError::Deadlock {
                task: id,
                task_type: rec.kind.name().to_string(),
                depth: rec.depth,
            },
            None => RuntimeError::ContractViolation("scheduler stalled with no blocked task".into()),
        }
    }

    fn log(&self, kind: EventKind, worker: WorkerId, task: u64, depth: u32, chunk: ChunkId, bytes: u64) {
        if self.config.record_events {
            self.events.lock().push(Event {
                kind,
                worker,
                task,
                depth,
                chunk,
                bytes,
            });
        }
    }

    pub(crate) fn push_note(&self, label: &'static str, task: u64, value: f64) {
        self.notes.lock().push(Note { label, task, value });
    }

    pub(crate) fn store_chunk(
        &self,
        payload: Vec<u8>,
        worker: WorkerId,
        task: u64,
        depth: u32,
    ) -> Result<ChunkId, RuntimeError> {
        let size = payload.len() as u64;
        let id = self.store.register(payload, worker)?;
        self.log(EventKind::RegisterChunk, worker, task, depth, id, size);
        Ok(id)
    }

    pub(crate) fn read_chunk(
        &self,
        id: ChunkId,
        reader: WorkerId,
        task: u64,
        depth: u32,
    ) -> Result<Arc<Chunk>, RuntimeError> {
        let chunk = self.store.get(id)?;
        let size = chunk.size_bytes();
        let mut state = self.workers[reader].lock();
        if chunk.owner() == reader || state.cache.touch(id) {
            state.stats.cache_hits += 1;
            drop(state);
            self.log(EventKind::Hit, reader, task, depth, id, 0);
            return Ok(chunk);
        }
        if size > state.cache.capacity() {
            return Err(RuntimeError::CacheTooSmall {
                chunk: id,
                size,
                capacity: state.cache.capacity(),
            });
        }
        state.cache.insert(id, size);
        state.stats.cache_misses += 1;
        state.stats.bytes_received += size;
        drop(state);
        self.log(EventKind::Fetch, reader, task, depth, id, size);
        Ok(chunk)
    }

    /// Registers `spec` from `worker`; a ready task goes on that worker's deque.
    pub(crate) fn enqueue(&self, spec: TaskSpec, worker: WorkerId) -> Result<TaskHandle, RuntimeError> {
        let kind = self.registry.get(&spec.task_type)?;
        for arg in &spec.inputs {
            if let Arg::Chunk(c) = arg {
                if !self.store.resolves(*c) {
                    return Err(RuntimeError::InvalidHandle(*c));
                }
            }
        }
        let id = self.next_task.fetch_add(1, Ordering::Relaxed);
        let mut graph = self.graph.lock();
        let mut inputs = Vec::with_capacity(spec.inputs.len());
        let mut waits = Vec::new();
        for (idx, arg) in spec.inputs.iter().enumerate() {
            match *arg {
                Arg::Chunk(c) => inputs.push(c),
                Arg::Future(h) => {
                    if let Some(&c) = graph.root_results.get(&h.0) {
                        inputs.push(c);
                        continue;
                    }
                    match graph.tasks.get(&h.0) {
                        Some(TaskRecord {
                            state: State::Done(c), ..
                        }) => inputs.push(*c),
                        Some(_) => {
                            inputs.push(ChunkId::NIL);
                            waits.push((h.0, idx));
                        }
                        None => return Err(RuntimeError::InvalidTask(h.0)),
                    }
                }
            }
        }
        for &(dep, idx) in &waits {
            graph
                .tasks
                .get_mut(&dep)
                .expect("checked above")
                .dependents
                .push(Dependent::Input(id, idx));
        }
        let unresolved = waits.len();
        graph.tasks.insert(
            id,
            TaskRecord {
                kind,
                inputs,
                params: spec.params,
                depth: spec.depth,
                unresolved,
                state: State::Waiting,
                dependents: Vec::new(),
                root: spec.parent.is_none(),
            },
        );
        self.outstanding.fetch_add(1, Ordering::SeqCst);
        self.log(EventKind::RegisterTask, worker, id, spec.depth, ChunkId::NIL, 0);
        if unresolved == 0 {
            self.make_ready(&mut graph, id, worker);
        }
        Ok(TaskHandle(id))
    }

    fn make_ready(&self, graph: &mut Graph, id: u64, worker: WorkerId) {
        let rec = graph.tasks.get_mut(&id).expect("task exists");
        rec.state = State::Queued;
        let depth = rec.depth;
        self.live.fetch_add(1, Ordering::SeqCst);
        let mut dq = self.deques[worker].lock();
        dq.push_back(Queued { task: id, depth });
        self.log(EventKind::Push, worker, id, depth, ChunkId::NIL, 0);
    }

    fn pop_own(&self, worker: WorkerId) -> Option<u64> {
        let mut dq = self.deques[worker].lock();
        let q = dq.pop_back()?;
        self.log(EventKind::Pop, worker, q.task, q.depth, ChunkId::NIL, 0);
        Some(q.task)
    }

    fn steal(&self, thief: WorkerId) -> Option<u64> {
        let n = self.config.n_workers;
        if n < 2 {
            return None;
        }
        let mut victims: Vec<WorkerId> = (0..n).filter(|&v| v != thief).collect();
        victims.shuffle(&mut *self.rngs[thief].lock());
        for victim in victims {
            let mut dq = self.deques[victim].lock();
            let Some((pos, _)) = dq.iter().enumerate().min_by_key(|(i, q)| (q.depth, *i)) else {
                continue;
            };
            let q = dq.remove(pos).expect("position from iteration");
            self.log(EventKind::Stolen, victim, q.task, q.depth, ChunkId::NIL, 0);
            self.log(EventKind::Steal, thief, q.task, q.depth, ChunkId::NIL, 0);
            drop(dq);
            self.workers[thief].lock().stats.steals += 1;
            return Some(q.task);
        }
        None
    }

    fn execute(&self, worker: WorkerId, id: u64) -> Result<(), RuntimeError> {
        let (kind, inputs, params, depth) = {
            let mut graph = self.graph.lock();
            let rec = graph.tasks.get_mut(&id).expect("queued task exists");
            debug_assert!(matches!(rec.state, State::Queued));
            rec.state = State::Running;
            (rec.kind.clone(), rec.inputs.clone(), rec.params.clone(), rec.depth)
        };
        self.workers[worker].lock().stats.tasks_executed += 1;
        self.log(EventKind::Execute, worker, id, depth, ChunkId::NIL, 0);

        let mut ctx = TaskContext {
            engine: self,
            worker,
            task: TaskHandle(id),
            depth,
        };
        let outcome = if inputs.iter().any(|c| c.is_nil()) {
            kind.execute_fallback(&mut ctx, &inputs, &params)
        } else {
            kind.execute(&mut ctx, &inputs, &params)
        };
        let output = outcome.map_err(|source| RuntimeError::TaskFailed {
            task: id,
            task_type: kind.name().to_string(),
            source,
        })?;

        let mut graph = self.graph.lock();
        match output {
            TaskOutput::Chunk(c) => {
                if !self.store.resolves(c) {
                    return Err(RuntimeError::InvalidHandle(c));
                }
                self.complete(&mut graph, id, c, worker);
            }
            TaskOutput::Forward(h) => match graph.tasks.get_mut(&h.0) {
                Some(TaskRecord {
                    state: State::Done(c), ..
                }) => {
                    let c = *c;
                    self.complete(&mut graph, id, c, worker);
                }
                Some(target) => {
                    target.dependents.push(Dependent::Forward(id));
                    graph.tasks.get_mut(&id).expect("running task").state = State::Forwarded;
                }
                None => match graph.root_results.get(&h.0) {
                    Some(&c) => self.complete(&mut graph, id, c, worker),
                    None => return Err(RuntimeError::InvalidTask(h.0)),
                },
            },
        }
        Ok(())
    }

    fn complete(&self, graph: &mut Graph, id: u64, output: ChunkId, worker: WorkerId) {
        let mut stack = vec![id];
        while let Some(t) = stack.pop() {
            let rec = graph.tasks.get_mut(&t).expect("completing task exists");
            rec.state = State::Done(output);
            let depth = rec.depth;
            let dependents = std::mem::take(&mut rec.dependents);
            self.outstanding.fetch_sub(1, Ordering::SeqCst);
            self.log(EventKind::Complete, worker, t, depth, output, 0);
            for dep in dependents {
                match dep {
                    Dependent::Input(u, idx) => {
                        let rec = graph.tasks.get_mut(&u).expect("dependent exists");
                        rec.inputs[idx] = output;
                        rec.unresolved -= 1;
                        if rec.unresolved == 0 {
                            self.make_ready(graph, u, worker);
                        }
                    }
                    Dependent::Forward(u) => stack.push(u),
                }
            }
        }
    }
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("config", &self.config)
            .field("registry", &self.registry)
            .field("store", &self.store)
            .finish()
    }
}
