use quadmat_runtime::{Arg, ChunkId, TaskOutput};

use super::{level_of, names, nil, put_branch, Env, Node};
use crate::leaf::LeafMatrix;
use crate::MatrixError;

pub(super) fn nil_result<L: LeafMatrix>(
    _: &Env<'_, '_, L>,
    _: &[ChunkId],
    _: &[f64],
) -> Result<TaskOutput, MatrixError> {
    Ok(TaskOutput::Chunk(ChunkId::NIL))
}

/// Inputs: four quadrants. Params: `[level]`.
pub(super) fn assemble<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let kids: [ChunkId; 4] = inputs
        .try_into()
        .map_err(|_| MatrixError::Invalid(format!("assemble needs 4 inputs, got {}", inputs.len())))?;
    Ok(TaskOutput::Chunk(put_branch(env.ctx, level_of(params), &kids)?))
}

/// `s · X` without touching `X` when `s` is 0 or 1.
fn scaled<L: LeafMatrix>(env: &Env<'_, '_, L>, id: ChunkId, level: u32, s: f64) -> Result<TaskOutput, MatrixError> {
    if s == 1.0 || id.is_nil() {
        return Ok(TaskOutput::Chunk(id));
    }
    if s == 0.0 {
        return Ok(TaskOutput::Chunk(ChunkId::NIL));
    }
    match env.spawn(names::SCALE, vec![id.into()], vec![level as f64, s])? {
        Arg::Future(h) => Ok(TaskOutput::Forward(h)),
        Arg::Chunk(c) => Ok(TaskOutput::Chunk(c)),
    }
}

/// Inputs: `[a, b]`. Params: `[level, alpha, beta]`. Computes `αa + βb`.
pub(super) fn add<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, alpha, beta) = (level_of(params), params[1], params[2]);
    match (env.read(inputs[0], level)?, env.read(inputs[1], level)?) {
        (Node::Leaf(a), Node::Leaf(b)) => Ok(TaskOutput::Chunk(env.put_leaf(level, &a.add(&b, alpha, beta)?)?)),
        (Node::Branch(ka), Node::Branch(kb)) => {
            let mut out = [nil(); 4];
            for q in 0..4 {
                out[q] = match (ka[q].is_nil(), kb[q].is_nil()) {
                    (true, true) => nil(),
                    _ => env.spawn(
                        names::ADD,
                        vec![ka[q].into(), kb[q].into()],
                        params_at(params, level + 1),
                    )?,
                };
            }
            env.assemble(level, out)
        }
        _ => Err(MatrixError::Corrupt("leaf and branch at the same level".into())),
    }
}

pub(super) fn add_fallback<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let level = level_of(params);
    if inputs[1].is_nil() {
        scaled(env, inputs[0], level, params[1])
    } else {
        scaled(env, inputs[1], level, params[2])
    }
}

fn params_at(params: &[f64], level: u32) -> Vec<f64> {
    let mut p = params.to_vec();
    p[0] = level as f64;
    p
}

/// Inputs: `[a]`. Params: `[level, alpha]`.
pub(super) fn scale<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, alpha) = (level_of(params), params[1]);
    if alpha == 0.0 {
        return Ok(TaskOutput::Chunk(ChunkId::NIL));
    }
    match env.read(inputs[0], level)? {
        Node::Leaf(a) => Ok(TaskOutput::Chunk(env.put_leaf(level, &a.scale(alpha))?)),
        Node::Branch(k) => {
            let mut out = [nil(); 4];
            for q in 0..4 {
                out[q] = env.spawn_on(names::SCALE, k[q], params_at(params, level + 1))?;
            }
            env.assemble(level, out)
        }
    }
}

/// Inputs: `[a]`. Params: `[level, c, offset]` where `offset` is the node's
/// first diagonal index. Only the NW and SE quadrants are visited.
pub(super) fn add_identity<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, c) = (level_of(params), params[1]);
    if c == 0.0 {
        return Ok(TaskOutput::Chunk(inputs[0]));
    }
    match env.read(inputs[0], level)? {
        Node::Leaf(a) => {
            let m = logical_extent(env, params[2] as usize);
            Ok(TaskOutput::Chunk(env.put_leaf(level, &a.add_diagonal(c, m))?))
        }
        Node::Branch(k) => diagonal_children(env, level, c, params[2] as usize, k),
    }
}

pub(super) fn add_identity_fallback<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    _: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, c, off) = (level_of(params), params[1], params[2] as usize);
    if c == 0.0 || off >= env.geom.params.n_logical {
        return Ok(TaskOutput::Chunk(ChunkId::NIL));
    }
    if level == env.geom.params.depth {
        let m = logical_extent(env, off);
        let leaf = L::zeros(&env.geom.leaf).add_diagonal(c, m);
        return Ok(TaskOutput::Chunk(env.put_leaf(level, &leaf)?));
    }
    diagonal_children(env, level, c, off, [ChunkId::NIL; 4])
}

fn diagonal_children<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    level: u32,
    c: f64,
    off: usize,
    k: [ChunkId; 4],
) -> Result<TaskOutput, MatrixError> {
    let h = env.geom.params.node_dim(level + 1);
    let child = |id: ChunkId, off: usize| {
        env.spawn(
            names::ADD_IDENTITY,
            vec![id.into()],
            vec![(level + 1) as f64, c, off as f64],
        )
    };
    let nw = child(k[0], off)?;
    let se = if off + h < env.geom.params.n_logical {
        child(k[3], off + h)?
    } else {
        k[3].into()
    };
    env.assemble(level, [nw, k[1].into(), k[2].into(), se])
}

/// Number of logical rows in the leaf starting at `off`.
pub(super) fn logical_extent<L: LeafMatrix>(env: &Env<'_, '_, L>, off: usize) -> usize {
    env.geom
        .params
        .n_logical
        .saturating_sub(off)
        .min(env.geom.params.leaf_dim)
}
