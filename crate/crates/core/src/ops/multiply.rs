use quadmat_runtime::{Arg, ChunkId, TaskOutput};

use super::{level_of, names, nil, Env, Node};
use crate::leaf::LeafMatrix;
use crate::MatrixError;

/// How an operand enters a product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Operand {
    Plain,
    Transposed,
    /// Symmetric, only the upper triangle stored.
    Symmetric,
}

impl Operand {
    pub fn code(self) -> f64 {
        match self {
            Operand::Plain => 0.0,
            Operand::Transposed => 1.0,
            Operand::Symmetric => 2.0,
        }
    }

    fn from_code(x: f64) -> Result<Self, MatrixError> {
        match x as u8 {
            0 => Ok(Operand::Plain),
            1 => Ok(Operand::Transposed),
            2 => Ok(Operand::Symmetric),
            _ => Err(MatrixError::Invalid(format!("operand code {x}"))),
        }
    }

    /// Stored quadrant holding block `(r, c)` of the operand, and how it enters.
    fn quadrant(self, kids: &[ChunkId; 4], r: usize, c: usize) -> (ChunkId, Operand) {
        match self {
            Operand::Plain => (kids[2 * r + c], Operand::Plain),
            Operand::Transposed => (kids[2 * c + r], Operand::Transposed),
            Operand::Symmetric if r == c => (kids[3 * r], Operand::Symmetric),
            Operand::Symmetric if r < c => (kids[1], Operand::Plain),
            Operand::Symmetric => (kids[1], Operand::Transposed),
        }
    }
}

fn leaf_product<L: LeafMatrix>(a: L, oa: Operand, b: L, ob: Operand) -> Result<L, MatrixError> {
    let a = if oa == Operand::Symmetric {
        a.symmetrize_upper()
    } else {
        a
    };
    let b = if ob == Operand::Symmetric {
        b.symmetrize_upper()
    } else {
        b
    };
    Ok(a.multiply(&b, oa == Operand::Transposed, ob == Operand::Transposed)?)
}

/// One operand pair of a `multiply` task. `path` holds the inner-index bits
/// chosen at each level below the originating product, outermost first.
#[derive(Debug, Clone, Copy)]
struct Term {
    oa: Operand,
    ob: Operand,
    path: u64,
}

/// Params for a single-pair `multiply`.
pub(crate) fn product_params(level: u32, upper: bool, alpha: f64, oa: Operand, ob: Operand) -> Vec<f64> {
    vec![level as f64, upper as u8 as f64, alpha, 0.0, oa.code(), ob.code(), 0.0]
}

fn parse_terms(params: &[f64], pairs: usize) -> Result<(u32, Vec<Term>), MatrixError> {
    if params.len() != 4 + 3 * pairs {
        return Err(MatrixError::Corrupt(format!(
            "multiply with {pairs} pairs got {} params",
            params.len()
        )));
    }
    let mut terms = Vec::with_capacity(pairs);
    for t in params[4..].chunks_exact(3) {
        terms.push(Term {
            oa: Operand::from_code(t[0])?,
            ob: Operand::from_code(t[1])?,
            path: t[2] as u64,
        });
    }
    Ok((params[3] as u32, terms))
}

/// Sum of the products whose paths share the leading `bits` bits, grouped as
/// `(first half) + (second half)` at every bit. Zero products and sums count
/// as absent.
fn tree_sum<L: LeafMatrix>(items: Vec<(u64, L)>, bits: u32) -> Result<Option<L>, MatrixError> {
    if bits == 0 || items.len() < 2 {
        return Ok(items.into_iter().next().map(|x| x.1));
    }
    let (lo, hi): (Vec<_>, Vec<_>) = items.into_iter().partition(|x| x.0 >> (bits - 1) & 1 == 0);
    let strip = |v: Vec<(u64, L)>| v.into_iter().map(|(p, l)| (p & ((1 << (bits - 1)) - 1), l)).collect();
    Ok(match (tree_sum(strip(lo), bits - 1)?, tree_sum(strip(hi), bits - 1)?) {
        (Some(x), Some(y)) => Some(x.add(&y, 1.0, 1.0)?).filter(|s| !s.is_zero()),
        (x, y) => x.or(y),
    })
}

/// Inputs: `[a0, b0, a1, b1, ...]`. Params: `[level, upper_only, alpha, bits,
/// (op_a, op_b, path) per pair]`.
///
/// Computes `alpha · Σ op(a_t) · op(b_t)`, keeping only the upper triangle
/// when `upper_only` is set. The value is that of the plain recursion
/// `C_ij = A_i0·B_0j + A_i1·B_1j`, first term first, with every product and
/// partial sum rounded as if it were its own task. Instead of spawning those
/// tasks, a branch hands each result quadrant all of its contributing pairs,
/// and the leaf level forms the sums.
pub(super) fn multiply<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let level = level_of(params);
    let (upper, alpha) = (params[1] != 0.0, params[2]);
    let (bits, terms) = parse_terms(params, inputs.len() / 2)?;
    let mut nodes = Vec::with_capacity(inputs.len());
    for id in inputs {
        nodes.push(env.read(*id, level)?);
    }
    let mut nodes = nodes.into_iter();
    if level == env.geom.params.depth {
        let mut items = Vec::with_capacity(terms.len());
        for t in &terms {
            let (Some(Node::Leaf(a)), Some(Node::Leaf(b))) = (nodes.next(), nodes.next()) else {
                return Err(MatrixError::Corrupt("branch at the leaf level".into()));
            };
            let mut c = leaf_product(a, t.oa, b, t.ob)?;
            if upper {
                c = c.upper_triangle();
            }
            if alpha != 1.0 {
                c = c.scale(alpha);
            }
            if !c.is_zero() {
                items.push((t.path, c));
            }
        }
        return Ok(TaskOutput::Chunk(match tree_sum(items, bits)? {
            Some(c) => env.put_leaf(level, &c)?,
            None => ChunkId::NIL,
        }));
    }
    let mut kids = Vec::with_capacity(terms.len());
    for t in &terms {
        let (Some(Node::Branch(ka)), Some(Node::Branch(kb))) = (nodes.next(), nodes.next()) else {
            return Err(MatrixError::Corrupt("leaf above the leaf level".into()));
        };
        kids.push((t, ka, kb));
    }
    let mut out = [nil(); 4];
    for i in 0..2 {
        for j in 0..2 {
            if upper && i > j {
                continue;
            }
            let mut args: Vec<Arg> = Vec::new();
            let mut p = vec![
                (level + 1) as f64,
                (upper && i == j) as u8 as f64,
                alpha,
                (bits + 1) as f64,
            ];
            for (t, ka, kb) in &kids {
                for k in 0..2 {
                    let (ca, oa) = t.oa.quadrant(ka, i, k);
                    let (cb, ob) = t.ob.quadrant(kb, k, j);
                    if !ca.is_nil() && !cb.is_nil() {
                        args.extend([Arg::from(ca), cb.into()]);
                        p.extend([oa.code(), ob.code(), (2 * t.path + k as u64) as f64]);
                    }
                }
            }
            if !args.is_empty() {
                out[2 * i + j] = env.spawn(names::MULTIPLY, args, p)?;
            }
        }
    }
    env.assemble(level, out)
}

/// Pairs with a nil operand contribute nothing; the rest are multiplied.
pub(super) fn multiply_fallback<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let mut kept = Vec::with_capacity(inputs.len());
    let mut p = params[..4].to_vec();
    for (t, pair) in inputs.chunks_exact(2).enumerate() {
        if !pair[0].is_nil() && !pair[1].is_nil() {
            kept.extend_from_slice(pair);
            p.extend_from_slice(&params[4 + 3 * t..7 + 3 * t]);
        }
    }
    if kept.is_empty() {
        return Ok(TaskOutput::Chunk(ChunkId::NIL));
    }
    multiply(env, &kept, &p)
}

/// Spawns `C_ij = P_i0j + P_i1j` from the non-nil terms, first term first.
fn combine<L: LeafMatrix>(env: &Env<'_, '_, L>, level: u32, terms: Vec<Arg>) -> Result<Arg, MatrixError> {
    match terms.len() {
        0 => Ok(nil()),
        1 => Ok(terms[0]),
        _ => env.spawn(names::ADD, terms, vec![level as f64, 1.0, 1.0]),
    }
}

fn forward(arg: Arg) -> TaskOutput {
    match arg {
        Arg::Future(h) => TaskOutput::Forward(h),
        Arg::Chunk(c) => TaskOutput::Chunk(c),
    }
}

/// Inputs: `[a, b]`. Params: `[level, tau]`. Approximate `a · b` whose
/// Frobenius error is at most `tau`.
pub(super) fn spamm<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, tau) = (level_of(params), params[1]);
    if tau == 0.0 || level == env.geom.params.depth {
        let p = product_params(level, false, 1.0, Operand::Plain, Operand::Plain);
        return Ok(forward(env.spawn(
            names::MULTIPLY,
            vec![inputs[0].into(), inputs[1].into()],
            p,
        )?));
    }
    let (Node::Branch(ka), Node::Branch(kb)) = (env.read(inputs[0], level)?, env.read(inputs[1], level)?) else {
        return Err(MatrixError::Corrupt("leaf above the leaf level".into()));
    };
    let mut args: Vec<Arg> = vec![inputs[0].into(), inputs[1].into()];
    for id in ka.iter().chain(kb.iter()) {
        args.push(env.spawn_on(names::NORM2, *id, vec![(level + 1) as f64])?);
    }
    Ok(forward(env.spawn(names::SPAMM_SELECT, args, params.to_vec())?))
}

fn squared_norm(env: &Env<'_, '_, impl LeafMatrix>, id: ChunkId) -> Result<f64, MatrixError> {
    if id.is_nil() {
        return Ok(0.0);
    }
    let chunk = env.raw(id)?;
    let bytes: [u8; 8] = chunk
        .payload()
        .try_into()
        .map_err(|_| MatrixError::Corrupt("norm chunk is not 8 bytes".into()))?;
    Ok(f64::from_le_bytes(bytes))
}

/// Inputs: `[a, b, ‖a_q‖² × 4, ‖b_q‖² × 4]`. Params: `[level, tau]`.
///
/// Products are pruned in ascending order of `‖a_ik‖·‖b_kj‖` while their sum
/// stays within `tau`; the unused budget is split equally among the kept
/// products. Each pruned bound is logged as a `pruned` note.
pub(super) fn spamm_select<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let (level, tau) = (level_of(params), params[1]);
    let (Node::Branch(ka), Node::Branch(kb)) = (env.read(inputs[0], level)?, env.read(inputs[1], level)?) else {
        return Err(MatrixError::Corrupt("leaf above the leaf level".into()));
    };
    let mut na = [0.0; 4];
    let mut nb = [0.0; 4];
    for q in 0..4 {
        na[q] = squared_norm(env, inputs[2 + q])?.sqrt();
        nb[q] = squared_norm(env, inputs[6 + q])?.sqrt();
    }
    // (bound, i, j, k) for every product of two non-nil quadrants.
    let mut cands: Vec<(f64, usize, usize, usize)> = Vec::with_capacity(8);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                if !ka[2 * i + k].is_nil() && !kb[2 * k + j].is_nil() {
                    cands.push((na[2 * i + k] * nb[2 * k + j], i, j, k));
                }
            }
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2, x.3).cmp(&(y.1, y.2, y.3))));
    let mut spent = 0.0;
    let mut pruned = [[[false; 2]; 2]; 2];
    for &(p, i, j, k) in &cands {
        if spent + p > tau {
            break;
        }
        spent += p;
        pruned[i][j][k] = true;
        env.ctx.note("pruned", p);
    }
    let kept = cands.iter().filter(|c| !pruned[c.1][c.2][c.3]).count();
    let share = if kept > 0 {
        ((tau - spent) / kept as f64).max(0.0)
    } else {
        0.0
    };
    let mut out = [nil(); 4];
    for i in 0..2 {
        for j in 0..2 {
            let mut terms = Vec::with_capacity(2);
            for k in 0..2 {
                let (ca, cb) = (ka[2 * i + k], kb[2 * k + j]);
                if ca.is_nil() || cb.is_nil() || pruned[i][j][k] {
                    continue;
                }
                terms.push(env.spawn(
                    names::SPAMM,
                    vec![ca.into(), cb.into()],
                    vec![(level + 1) as f64, share],
                )?);
            }
            out[2 * i + j] = combine(env, level + 1, terms)?;
        }
    }
    env.assemble(level, out)
}

/// Inputs: `[a]`. Params: `[level]`. Produces an 8-byte chunk holding `‖a‖²`.
pub(super) fn norm2<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    params: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let level = level_of(params);
    match env.read(inputs[0], level)? {
        Node::Leaf(a) => {
            let s: f64 = a.block_norms().iter().map(|x| x * x).sum();
            Ok(TaskOutput::Chunk(env.put_bytes(s.to_le_bytes().to_vec())?))
        }
        Node::Branch(k) => {
            let mut args = Vec::with_capacity(4);
            for id in k {
                args.push(env.spawn_on(names::NORM2, id, vec![(level + 1) as f64])?);
            }
            Ok(forward(env.spawn(names::SUM, args, vec![])?))
        }
    }
}

/// Inputs: 8-byte value chunks, nil counting as zero. Produces their sum.
pub(super) fn sum<L: LeafMatrix>(
    env: &Env<'_, '_, L>,
    inputs: &[ChunkId],
    _: &[f64],
) -> Result<TaskOutput, MatrixError> {
    let mut s = 0.0;
    for &id in inputs {
        s += squared_norm(env, id)?;
    }
    Ok(TaskOutput::Chunk(env.put_bytes(s.to_le_bytes().to_vec())?))
}
