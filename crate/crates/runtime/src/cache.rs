use std::collections::{BTreeMap, HashMap};

use crate::chunk::ChunkId;

/// Least-recently-used set of chunks bounded by total byte size.
#[derive(Debug, Clone)]
pub struct ByteLru {
    capacity: u64,
    used: u64,
    tick: u64,
    entries: HashMap<ChunkId, (u64, u64)>,
    order: BTreeMap<u64, ChunkId>,
}

impl ByteLru {
    pub fn new(capacity: u64) -> Self {
        ByteLru {
            capacity,
            used: 0,
            tick: 0,
            entries: HashMap::new(),
            order: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: ChunkId) -> bool {
        self.entries.contains_key(&id)
    }

    /// Marks `id` most recently used. Returns false if it is not cached.
    pub fn touch(&mut self, id: ChunkId) -> bool {
        self.tick += 1;
        let tick = self.tick;
        match self.entries.get_mut(&id) {
            Some((_, stamp)) => {
                self.order.remove(stamp);
                *stamp = tick;
                self.order.insert(tick, id);
                true
            }
            None => false,
        }
    }

    /// Inserts `id`, evicting least recently used entries until it fits.
    /// Returns the evicted handles. An entry larger than the capacity is not
    /// inserted.
    pub fn insert(&mut self, id: ChunkId, size: u64) -> Vec<ChunkId> {
        if size > self.capacity {
            return Vec::new();
        }
        if self.touch(id) {
            return Vec::new();
        }
        let mut evicted = Vec::new();
        while self.used + size > self.capacity {
            let (&stamp, &victim) = self.order.iter().next().expect("used > 0 implies entries");
            self.order.remove(&stamp);
            let (vsize, _) = self.entries.remove(&victim).expect("order and entries agree");
            self.used -= vsize;
            evicted.push(victim);
        }
        self.tick += 1;
        self.entries.insert(id, (size, self.tick));
        self.order.insert(self.tick, id);
        self.used += size;
        evicted
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.order.clear();
        self.used = 0;
    }
}
