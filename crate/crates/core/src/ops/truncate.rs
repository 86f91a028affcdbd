use quadmat_runtime::{ChunkId, TaskOutput};

use super::{level_of, names, nil, Env, Node};
use crate::leaf::LeafMatrix;
use crate::MatrixError;

/// Inputs: `[a]`. Params: `[level]`. Produces the block norms of every leaf
/// as little-endian `f64`s in structural order.
pub(super) fn census<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let level = level_of(params);
    match env.read(inputs[0], level)? {
        Node::Leaf(a) => {
            let bytes: Vec<u8> = a.block_norms().iter().flat_map(|x| x.to_le_bytes()).collect();
            Ok(TaskOutput::Chunk(env.put_bytes(bytes)?))
        }
        Node::Branch(k) => {
            let mut args = Vec::with_capacity(4);
            for id in k {
                args.push(env.spawn_on(names::CENSUS, id, vec![(level + 1) as f64])?);
            }
            let h = env.ctx.register_task(names::CONCAT, args, vec![])?;
            Ok(TaskOutput::Forward(h))
        }
    }
}

/// Inputs: any number of chunks, nil contributing nothing. Produces the
/// concatenation of their payloads.
pub(super) fn concat<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    _: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let mut bytes = Vec::new();
    for &id in inputs {
        if !id.is_nil() {
            bytes.extend_from_slice(env.raw(id)?.payload());
        }
    }
    Ok(TaskOutput::Chunk(env.put_bytes(bytes)?))
}

/// Inputs: `[a]`. Params: `[level, threshold]`. Drops every leaf block whose
/// norm is at most `threshold`.
pub(super) fn truncate_below<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, threshold) = (level_of(params), params[1]);
    match env.read(inputs[0], level)? {
        Node::Leaf(a) => {
            let drop: Vec<bool> = a.block_norms().iter().map(|&x| x <= threshold).collect();
            Ok(TaskOutput::Chunk(env.put_leaf(level, &a.drop_blocks(&drop))?))
        }
        Node::Branch(k) => {
            let mut out = [nil(); 4];
            for q in 0..4 {
                out[q] = env.spawn_on(names::TRUNCATE_BELOW, k[q], vec![(level + 1) as f64, threshold])?;
            }
            env.assemble(level, out)
        }
    }
}

/// Largest norm to drop so that the dropped blocks form an ascending prefix
/// with squared sum at most `tau²`, never splitting a group of equal norms.
/// Returns `(threshold, removed_norm)`, or `None` if nothing can be dropped.
pub fn drop_threshold(norms: &[f64], tau: f64) -> Option<(f64, f64)> {
    let mut sorted = norms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    let mut best = None;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let mut group = 0.0;
        while j < sorted.len() && sorted[j] == sorted[i] {
            group += sorted[j] * sorted[j];
            j += 1;
        }
        if (acc + group).sqrt() > tau {
            break;
        }
        acc += group;
        best = Some((sorted[i], acc.sqrt()));
        i = j;
    }
    best
}
