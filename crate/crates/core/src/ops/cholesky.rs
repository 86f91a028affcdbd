use quadmat_runtime::{ChunkId, TaskOutput};

use super::arith::logical_extent;
use super::multiply::{product_params, Operand};
use super::{level_of, names, nil, Env, Node};
use crate::leaf::{LeafError, LeafMatrix};
use crate::MatrixError;

/// Inputs: `[a]` (symmetric, upper triangle stored). Params: `[level, offset]`.
/// Produces upper-triangular `Z` with `Zᵀ A Z = I`:
///
/// ```text
/// Z00 = inv_chol(A00)      Y = Z00ᵀ A01
/// Z11 = inv_chol(A11 - YᵀY)  X = -Z00 Y Z11
/// Z = [Z00 X; 0 Z11]
/// ```
pub(super) fn inv_chol<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, off) = (level_of(params), params[1] as usize);
    match env.read(inputs[0], level)? {
        Node::Leaf(a) => {
            let m = logical_extent(env, off);
            let z = a.cholesky_inverse(m).map_err(|e| match e {
                LeafError::NotPositiveDefinite { index } => MatrixError::NotPositiveDefinite { index: off + index },
                e => e.into(),
            })?;
            Ok(TaskOutput::Chunk(env.put_leaf(level, &z)?))
        }
        Node::Branch(k) => {
            let child = (level + 1) as f64;
            let h = env.geom.params.node_dim(level + 1);
            let (a00, a01, a11) = (k[0], k[1], k[3]);
            let mul = |x, y, ox: Operand, oy: Operand, upper: bool, alpha: f64| {
                env.spawn(
                    names::MULTIPLY,
                    vec![x, y],
                    product_params(level + 1, upper, alpha, ox, oy),
                )
            };
            let z00 = env.spawn(names::INV_CHOL, vec![a00.into()], vec![child, off as f64])?;
            if off + h >= env.geom.params.n_logical {
                return env.assemble(level, [z00, nil(), nil(), nil()]);
            }
            let y = mul(z00, a01.into(), Operand::Transposed, Operand::Plain, false, 1.0)?;
            let w = mul(y, y, Operand::Transposed, Operand::Plain, true, 1.0)?;
            let s = env.spawn(names::ADD, vec![a11.into(), w], vec![child, 1.0, -1.0])?;
            let z11 = env.spawn(names::INV_CHOL, vec![s], vec![child, (off + h) as f64])?;
            let t = mul(z00, y, Operand::Plain, Operand::Plain, false, 1.0)?;
            let x = mul(t, z11, Operand::Plain, Operand::Plain, false, -1.0)?;
            env.assemble(level, [z00, x, nil(), z11])
        }
    }
}

/// A nil diagonal block is singular unless it lies entirely in the padding.
pub(super) fn inv_chol_fallback<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    _: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let off = params[1] as usize;
    if off >= env.geom.params.n_logical {
        return Ok(TaskOutput::Chunk(ChunkId::NIL));
    }
    Err(MatrixError::NotPositiveDefinite { index: off })
}
