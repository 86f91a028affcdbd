use quadmat_runtime::{ChunkId, TaskOutput};

use super::{level_of, names, nil, Env, Node};
use crate::leaf::LeafMatrix;
use crate::MatrixError;

/// Splits `(a, row, col)` records of a node at `(r0, c0)` with side `2h`
/// into per-quadrant parameter lists prefixed by `head(q)`.
fn partition(
    records: &[f64],
    r0: usize,
    c0: usize,
    h: usize,
    head: impl Fn(usize) -> Vec<f64>,
    rc: impl Fn(&[f64]) -> (usize, usize),
) -> [Vec<f64>; 4] {
    let mut out: [Vec<f64>; 4] = std::array::from_fn(&head);
    let base = out[0].len();
    for rec in records.chunks_exact(3) {
        let (r, c) = rc(rec);
        let q = 2 * usize::from(r >= r0 + h) + usize::from(c >= c0 + h);
        out[q].extend_from_slice(rec);
    }
    for v in out.iter_mut() {
        if v.len() == base {
            v.clear();
        }
    }
    out
}

fn origin(q: usize, r0: usize, c0: usize, h: usize) -> (usize, usize) {
    (r0 + (q / 2) * h, c0 + (q % 2) * h)
}

/// No inputs. Params: `[level, r0, c0, (row, col, value)*]` in global
/// coordinates. Builds the subtree at origin `(r0, c0)`.
pub(super) fn assign<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    _: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, r0, c0) = (level_of(params), params[1] as usize, params[2] as usize);
    let records = &params[3..];
    if level == env.geom.params.depth {
        let local: Vec<(usize, usize, f64)> = records
            .chunks_exact(3)
            .map(|t| (t[0] as usize - r0, t[1] as usize - c0, t[2]))
            .collect();
        let leaf = L::from_triplets(&env.geom.leaf, &local)?;
        return Ok(TaskOutput::Chunk(env.put_leaf(level, &leaf)?));
    }
    let h = env.geom.params.node_dim(level + 1);
    let parts = partition(
        records,
        r0,
        c0,
        h,
        |q| {
            let (r, c) = origin(q, r0, c0, h);
            vec![(level + 1) as f64, r as f64, c as f64]
        },
        |t| (t[0] as usize, t[1] as usize),
    );
    let mut out = [nil(); 4];
    for (q, p) in parts.into_iter().enumerate() {
        if !p.is_empty() {
            out[q] = env.spawn(names::ASSIGN, vec![], p)?;
        }
    }
    env.assemble(level, out)
}

/// Inputs: `[a]`. Params: `[level, r0, c0, (slot, row, col)*]`. Produces
/// `(slot u64, value f64)` pairs for the nonzero values found.
pub(super) fn extract<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, r0, c0) = (level_of(params), params[1] as usize, params[2] as usize);
    let records = &params[3..];
    match env.read(inputs[0], level)? {
        Node::Leaf(a) => {
            let mut bytes = Vec::new();
            for t in records.chunks_exact(3) {
                let v = a.get(t[1] as usize - r0, t[2] as usize - c0);
                if v != 0.0 {
                    bytes.extend_from_slice(&(t[0] as u64).to_le_bytes());
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
            Ok(TaskOutput::Chunk(env.put_bytes(bytes)?))
        }
        Node::Branch(k) => {
            let h = env.geom.params.node_dim(level + 1);
            let parts = partition(
                records,
                r0,
                c0,
                h,
                |q| {
                    let (r, c) = origin(q, r0, c0, h);
                    vec![(level + 1) as f64, r as f64, c as f64]
                },
                |t| (t[1] as usize, t[2] as usize),
            );
            let mut args = Vec::new();
            for (q, p) in parts.into_iter().enumerate() {
                if !p.is_empty() && !k[q].is_nil() {
                    args.push(env.spawn(names::EXTRACT, vec![k[q].into()], p)?);
                }
            }
            if args.is_empty() {
                return Ok(TaskOutput::Chunk(ChunkId::NIL));
            }
            Ok(TaskOutput::Forward(env.ctx.register_task(
                names::CONCAT,
                args,
                vec![],
            )?))
        }
    }
}
