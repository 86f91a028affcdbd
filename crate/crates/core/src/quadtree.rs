//! Driver-side construction and traversal of quadtree matrices.
//!
//! Reads here go straight to the chunk store and are not charged to any
//! worker.

use quadmat_runtime::{ChunkId, ChunkStore, Engine, WorkerId};

use crate::backend::LeafBackend;
use crate::leaf::DenseLeaf;
use crate::node::{encode_branch, QuadNode};
use crate::ops::Geometry;
use crate::MatrixError;

/// Which worker owns the chunks of a matrix built by the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwnerPolicy {
    Single(WorkerId),
    /// The k-th non-nil subtree at `split_depth` (leaf level when `None`)
    /// goes to worker `k mod P`; nodes above it go to worker 0.
    RoundRobin {
        split_depth: Option<u32>,
    },
}

impl Default for OwnerPolicy {
    fn default() -> Self {
        OwnerPolicy::RoundRobin { split_depth: None }
    }
}

/// A sparsity pattern with values, queried by square regions in global
/// coordinates.
pub trait Pattern {
    /// True if the region may contain a nonzero.
    fn touches(&self, r0: usize, c0: usize, size: usize) -> bool;

    /// Appends the region's entries as global `(row, col, value)`.
    fn entries(&self, r0: usize, c0: usize, size: usize, out: &mut Vec<(usize, usize, f64)>);
}

struct Builder<'a> {
    engine: &'a Engine,
    backend: &'a dyn LeafBackend,
    geom: Geometry,
    policy: OwnerPolicy,
    next_owner: usize,
}

impl Builder<'_> {
    fn owner_for(&mut self, level: u32, inherited: Option<WorkerId>) -> Option<WorkerId> {
        match self.policy {
            OwnerPolicy::Single(w) => Some(w),
            OwnerPolicy::RoundRobin { split_depth } => {
                let split = split_depth
                    .unwrap_or(self.geom.params.depth)
                    .min(self.geom.params.depth);
                if inherited.is_none() && level == split {
                    let w = self.next_owner % self.engine.n_workers();
                    self.next_owner += 1;
                    Some(w)
                } else {
                    inherited
                }
            }
        }
    }

    fn register(&self, payload: Vec<u8>, owner: Option<WorkerId>) -> Result<ChunkId, MatrixError> {
        Ok(self.engine.register_chunk(payload, owner.unwrap_or(0))?)
    }

    fn leaf(
        &self,
        level: u32,
        r0: usize,
        c0: usize,
        entries: &[(usize, usize, f64)],
        owner: Option<WorkerId>,
    ) -> Result<ChunkId, MatrixError> {
        let local: Vec<_> = entries.iter().map(|&(r, c, v)| (r - r0, c - c0, v)).collect();
        match self.backend.leaf_node(&self.geom.leaf, level, &local)? {
            Some(payload) => self.register(payload, owner),
            None => Ok(ChunkId::NIL),
        }
    }

    fn branch(&self, level: u32, kids: [ChunkId; 4], owner: Option<WorkerId>) -> Result<ChunkId, MatrixError> {
        if kids.iter().all(|k| k.is_nil()) {
            return Ok(ChunkId::NIL);
        }
        self.register(encode_branch(level, &kids), owner)
    }

    fn from_triplets(
        &mut self,
        level: u32,
        r0: usize,
        c0: usize,
        entries: Vec<(usize, usize, f64)>,
        owner: Option<WorkerId>,
    ) -> Result<ChunkId, MatrixError> {
        if entries.is_empty() {
            return Ok(ChunkId::NIL);
        }
        let owner = self.owner_for(level, owner);
        if level == self.geom.params.depth {
            return self.leaf(level, r0, c0, &entries, owner);
        }
        let h = self.geom.params.node_dim(level + 1);
        let mut parts: [Vec<(usize, usize, f64)>; 4] = Default::default();
        for e in entries {
            parts[2 * usize::from(e.0 >= r0 + h) + usize::from(e.1 >= c0 + h)].push(e);
        }
        let mut kids = [ChunkId::NIL; 4];
        for (q, part) in parts.into_iter().enumerate() {
            kids[q] = self.from_triplets(level + 1, r0 + (q / 2) * h, c0 + (q % 2) * h, part, owner)?;
        }
        self.branch(level, kids, owner)
    }

    fn from_pattern(
        &mut self,
        level: u32,
        r0: usize,
        c0: usize,
        pattern: &dyn Pattern,
        owner: Option<WorkerId>,
    ) -> Result<ChunkId, MatrixError> {
        let n = self.geom.params.n_logical;
        let size = self.geom.params.node_dim(level);
        if r0 >= n || c0 >= n || !pattern.touches(r0, c0, size) {
            return Ok(ChunkId::NIL);
        }
        let owner = self.owner_for(level, owner);
        if level == self.geom.params.depth {
            let mut entries = Vec::new();
            pattern.entries(r0, c0, size, &mut entries);
            entries.retain(|&(r, c, _)| r < n && c < n);
            return self.leaf(level, r0, c0, &entries, owner);
        }
        let h = size / 2;
        let mut kids = [ChunkId::NIL; 4];
        for (q, kid) in kids.iter_mut().enumerate() {
            *kid = self.from_pattern(level + 1, r0 + (q / 2) * h, c0 + (q % 2) * h, pattern, owner)?;
        }
        // A pattern may touch a region whose entries all cancel or fall in padding.
        if kids.iter().all(|k| k.is_nil()) {
            return Ok(ChunkId::NIL);
        }
        self.branch(level, kids, owner)
    }
}

pub(crate) fn build_from_triplets(
    engine: &Engine,
    backend: &dyn LeafBackend,
    geom: Geometry,
    entries: &[(usize, usize, f64)],
    policy: OwnerPolicy,
) -> Result<ChunkId, MatrixError> {
    let n = geom.params.n_logical;
    if let Some(&(row, col, _)) = entries.iter().find(|&&(r, c, _)| r >= n || c >= n) {
        return Err(MatrixError::IndexOutOfRange { row, col, n });
    }
    let mut b = Builder {
        engine,
        backend,
        geom,
        policy,
        next_owner: 0,
    };
    b.from_triplets(0, 0, 0, entries.to_vec(), None)
}

pub(crate) fn build_from_pattern(
    engine: &Engine,
    backend: &dyn LeafBackend,
    geom: Geometry,
    pattern: &dyn Pattern,
    policy: OwnerPolicy,
) -> Result<ChunkId, MatrixError> {
    let mut b = Builder {
        engine,
        backend,
        geom,
        policy,
        next_owner: 0,
    };
    b.from_pattern(0, 0, 0, pattern, None)
}

/// Full tree whose every leaf is stored explicitly as zeros.
pub(crate) fn build_explicit_zeros(
    engine: &Engine,
    backend: &dyn LeafBackend,
    geom: Geometry,
    level: u32,
) -> Result<ChunkId, MatrixError> {
    if level == geom.params.depth {
        let z = DenseLeaf::from_column_major(geom.leaf.n, vec![0.0; geom.leaf.n * geom.leaf.n])?;
        return Ok(engine.register_chunk(backend.leaf_node_from_dense(&geom.leaf, level, &z), 0)?);
    }
    let mut kids = [ChunkId::NIL; 4];
    for k in kids.iter_mut() {
        *k = build_explicit_zeros(engine, backend, geom, level + 1)?;
    }
    Ok(engine.register_chunk(encode_branch(level, &kids), 0)?)
}

fn read(store: &ChunkStore, id: ChunkId) -> Result<std::sync::Arc<quadmat_runtime::Chunk>, MatrixError> {
    Ok(store.get(id)?)
}

pub(crate) fn get_elements(
    store: &ChunkStore,
    backend: &dyn LeafBackend,
    geom: Geometry,
    root: ChunkId,
    indices: &[(usize, usize)],
) -> Result<Vec<f64>, MatrixError> {
    let n = geom.params.n_logical;
    indices
        .iter()
        .map(|&(row, col)| {
            if row >= n || col >= n {
                return Err(MatrixError::IndexOutOfRange { row, col, n });
            }
            let (mut id, mut r, mut c, mut size) = (root, row, col, geom.params.n_padded);
            loop {
                if id.is_nil() {
                    return Ok(0.0);
                }
                let chunk = read(store, id)?;
                match QuadNode::decode(chunk.payload())? {
                    QuadNode::Leaf { payload, .. } => return Ok(backend.get(payload, r, c)?),
                    QuadNode::Branch { children, .. } => {
                        size /= 2;
                        id = children[2 * (r / size) + c / size];
                        r %= size;
                        c %= size;
                    }
                }
            }
        })
        .collect()
}

/// Counts from one traversal of a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TreeStats {
    pub leaf_chunks: u64,
    pub branch_chunks: u64,
    pub stored_bytes: u64,
    pub nnz: u64,
}

pub(crate) fn tree_stats(
    store: &ChunkStore,
    backend: &dyn LeafBackend,
    root: ChunkId,
) -> Result<TreeStats, MatrixError> {
    let mut s = TreeStats::default();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if id.is_nil() {
            continue;
        }
        let chunk = read(store, id)?;
        s.stored_bytes += chunk.size_bytes();
        match QuadNode::decode(chunk.payload())? {
            QuadNode::Leaf { payload, .. } => {
                s.leaf_chunks += 1;
                s.nnz += backend.nnz(payload)? as u64;
            }
            QuadNode::Branch { children, .. } => {
                s.branch_chunks += 1;
                stack.extend(children);
            }
        }
    }
    Ok(s)
}

/// Column-major `n_logical × n_logical` values.
pub(crate) fn to_dense(
    store: &ChunkStore,
    backend: &dyn LeafBackend,
    geom: Geometry,
    root: ChunkId,
) -> Result<Vec<f64>, MatrixError> {
    let n = geom.params.n_logical;
    let mut out = vec![0.0; n * n];
    let mut stack = vec![(root, 0usize, 0usize, geom.params.n_padded)];
    while let Some((id, r0, c0, size)) = stack.pop() {
        if id.is_nil() {
            continue;
        }
        let chunk = read(store, id)?;
        match QuadNode::decode(chunk.payload())? {
            QuadNode::Leaf { payload, .. } => {
                let d = backend.to_dense(payload)?;
                for c in 0..size.min(n.saturating_sub(c0)) {
                    for r in 0..size.min(n.saturating_sub(r0)) {
                        out[(r0 + r) + (c0 + c) * n] = d.at(r, c);
                    }
                }
            }
            QuadNode::Branch { children, .. } => {
                let h = size / 2;
                for (q, k) in children.into_iter().enumerate() {
                    stack.push((k, r0 + (q / 2) * h, c0 + (q % 2) * h, h));
                }
            }
        }
    }
    Ok(out)
}

/// Structure and leaf payloads in preorder, independent of chunk handles.
///
/// Branch payloads embed child handles, which depend on registration order;
/// this form replaces them by the canonical form of the children.
pub(crate) fn canonical_bytes(store: &ChunkStore, root: ChunkId) -> Result<Vec<u8>, MatrixError> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if id.is_nil() {
            out.push(0);
            continue;
        }
        let chunk = read(store, id)?;
        match QuadNode::decode(chunk.payload())? {
            QuadNode::Leaf { .. } => {
                out.push(1);
                out.extend_from_slice(&(chunk.size_bytes()).to_le_bytes());
                out.extend_from_slice(chunk.payload());
            }
            QuadNode::Branch { level, children } => {
                out.push(2);
                out.extend_from_slice(&level.to_le_bytes());
                stack.extend(children.into_iter().rev());
            }
        }
    }
    Ok(out)
}

/// Describes the first normalization violation found, if any.
pub(crate) fn find_unnormalized(
    store: &ChunkStore,
    geom: Geometry,
    root: ChunkId,
) -> Result<Option<String>, MatrixError> {
    let mut stack = vec![(root, 0u32)];
    while let Some((id, expected)) = stack.pop() {
        if id.is_nil() {
            continue;
        }
        let chunk = read(store, id)?;
        let node = QuadNode::decode(chunk.payload())?;
        if node.level() != expected {
            return Ok(Some(format!("node at level {expected} claims level {}", node.level())));
        }
        match node {
            QuadNode::Leaf { level, .. } if level != geom.params.depth => {
                return Ok(Some(format!("leaf above the leaf level at level {level}")));
            }
            QuadNode::Leaf { .. } => {}
            QuadNode::Branch { level, .. } if level == geom.params.depth => {
                return Ok(Some("branch at the leaf level".into()));
            }
            QuadNode::Branch { children, .. } => {
                if children.iter().all(|k| k.is_nil()) {
                    return Ok(Some(format!("branch with four nil children at level {expected}")));
                }
                stack.extend(children.into_iter().map(|k| (k, expected + 1)));
            }
        }
    }
    Ok(None)
}

/// Stored nonzeros as global `(row, col, value)`, column-major within each leaf.
pub(crate) fn nonzeros(
    store: &ChunkStore,
    backend: &dyn LeafBackend,
    geom: Geometry,
    root: ChunkId,
) -> Result<Vec<(usize, usize, f64)>, MatrixError> {
    let mut out = Vec::new();
    let mut stack = vec![(root, 0usize, 0usize, geom.params.n_padded)];
    while let Some((id, r0, c0, size)) = stack.pop() {
        if id.is_nil() {
            continue;
        }
        let chunk = read(store, id)?;
        match QuadNode::decode(chunk.payload())? {
            QuadNode::Leaf { payload, .. } => {
                let d = backend.to_dense(payload)?;
                for c in 0..size {
                    for r in 0..size {
                        let v = d.at(r, c);
                        if v != 0.0 {
                            out.push((r0 + r, c0 + c, v));
                        }
                    }
                }
            }
            QuadNode::Branch { children, .. } => {
                let h = size / 2;
                for (q, k) in children.into_iter().enumerate().rev() {
                    stack.push((k, r0 + (q / 2) * h, c0 + (q % 2) * h, h));
                }
            }
        }
    }
    Ok(out)
}
