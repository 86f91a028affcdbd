use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use crate::error::RuntimeError;

/// Index of a (virtual) worker process.
pub type WorkerId = usize;

const SEQ_BITS: u32 = 40;
const SEQ_MASK: u64 = (1 << SEQ_BITS) - 1;

static NEXT_STORE_TAG: AtomicU64 = AtomicU64::new(1);

/// Handle to a registered chunk.
///
/// The upper bits carry the tag of the issuing store and the lower bits a
/// sequence number, so handles are never reused and a handle presented to a
/// foreign store is rejected. `NIL` (all zero bits) means "identically zero".
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ChunkId(u64);

impl ChunkId {
    pub const NIL: ChunkId = ChunkId(0);

    pub fn is_nil(self) -> bool {
        self.0 == 0
    }

    pub fn to_raw(self) -> u64 {
        self.0
    }

    pub fn from_raw(raw: u64) -> Self {
        ChunkId(raw)
    }
}

impl fmt::Debug for ChunkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_nil() {
            write!(f, "ChunkId(nil)")
        } else {
            write!(f, "ChunkId({}:{})", self.0 >> SEQ_BITS, self.0 & SEQ_MASK)
        }
    }
}

impl fmt::Display for ChunkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An immutable registered payload and the worker holding its home copy.
#[derive(Debug)]
pub struct Chunk {
    payload: Box<[u8]>,
    owner: WorkerId,
}

impl Chunk {
    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn size_bytes(&self) -> u64 {
        self.payload.len() as u64
    }

    pub fn owner(&self) -> WorkerId {
        self.owner
    }
}

/// Concurrent append-only chunk store.
///
/// Lookups through this type are unaccounted; reads on behalf of a worker go
/// through [`crate::Engine::get_chunk`], which charges cache misses.
pub struct ChunkStore {
    tag: u64,
    next_seq: AtomicU64,
    chunks: RwLock<HashMap<u64, Arc<Chunk>>>,
    capacity: Option<u64>,
    used: Mutex<u64>,
}

impl ChunkStore {
    pub fn new(capacity_bytes: Option<u64>) -> Self {
        let tag = NEXT_STORE_TAG.fetch_add(1, Ordering::Relaxed) & ((1 << (64 - SEQ_BITS)) - 1);
        ChunkStore {
            // Tag 0 would make the first chunk collide with NIL.
            tag: tag.max(1),
            next_seq: AtomicU64::new(1),
            chunks: RwLock::new(HashMap::new()),
            capacity: capacity_bytes,
            used: Mutex::new(0),
        }
    }

    pub fn register(&self, payload: Vec<u8>, owner: WorkerId) -> Result<ChunkId, RuntimeError> {
        if payload.is_empty() {
            return Err(RuntimeError::ContractViolation(
                "chunk payload must be non-empty".into(),
            ));
        }
        let size = payload.len() as u64;
        {
            let mut used = self.used.lock();
            if let Some(cap) = self.capacity {
                if *used + size > cap {
                    return Err(RuntimeError::OutOfMemory {
                        requested: size,
                        available: cap - *used,
                    });
                }
            }
            *used += size;
        }
        let seq = self.next_seq.fetch_add(1, Ordering::Relaxed);
        assert!(seq <= SEQ_MASK, "chunk sequence space exhausted");
        let id = (self.tag << SEQ_BITS) | seq;
        let chunk = Arc::new(Chunk {
            payload: payload.into_boxed_slice(),
            owner,
        });
        self.chunks.write().insert(id, chunk);
        Ok(ChunkId(id))
    }

    /// Unaccounted lookup.
    pub fn get(&self, id: ChunkId) -> Result<Arc<Chunk>, RuntimeError> {
        if id.is_nil() {
            return Err(RuntimeError::ContractViolation(
                "nil chunk handle passed to a chunk read".into(),
            ));
        }
        self.chunks
            .read()
            .get(&id.0)
            .cloned()
            .ok_or(RuntimeError::InvalidHandle(id))
    }

    /// True for nil and for every handle this store issued.
    pub fn resolves(&self, id: ChunkId) -> bool {
        id.is_nil() || self.chunks.read().contains_key(&id.0)
    }

    pub fn len(&self) -> usize {
        self.chunks.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes_used(&self) -> u64 {
        *self.used.lock()
    }
}

impl fmt::Debug for ChunkStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChunkStore")
            .field("tag", &self.tag)
            .field("chunks", &self.len())
            .field("bytes_used", &self.bytes_used())
            .finish()
    }
}
