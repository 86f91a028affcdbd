//! Experiment matrix families and their exact flop counts.
//!
//! All patterns are symmetric, so the number of `(i, j, k)` triples with
//! `pattern(i, k) ∧ pattern(k, j)` is `Σ_k deg(k)²`, where `deg(k)` is the
//! number of nonzeros in column `k`. Each column's nonzeros form one
//! interval, which makes `deg` piecewise linear in `k` and the sum
//! computable in closed form.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::quadtree::Pattern;
use crate::{Matrix, MatrixError, Session};

/// Rows per block in the random-blocks family at the reference scale.
pub const ROWS_PER_RANDOM_BLOCK: usize = 100_000;

const PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("cannot place {n_blocks} blocks of size {s} in dimension {n} with half bandwidth {b}: {reason}")]
    Placement {
        n: usize,
        b: usize,
        s: usize,
        n_blocks: usize,
        reason: String,
    },
    #[error("no block size reaches {ratio} times the banded flop count for n = {n}, b = {b}")]
    NoFeasibleSize { n: usize, b: usize, ratio: f64 },
    #[error("invalid case: {0}")]
    Invalid(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Banded,
    GrowingBlock,
    RandomBlocks,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Banded, Family::GrowingBlock, Family::RandomBlocks];

    pub fn name(self) -> &'static str {
        match self {
            Family::Banded => "banded",
            Family::GrowingBlock => "growing-block",
            Family::RandomBlocks => "random-blocks",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('_', "-");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| GenError::Invalid(format!("unknown family `{s}`")))
    }
}

/// One experiment matrix: band `|i − j| ≤ b`, plus `n_blocks` dense `s × s`
/// diagonal blocks for the block families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentCase {
    pub family: Family,
    pub n: usize,
    pub b: usize,
    pub s: usize,
    pub n_blocks: usize,
    pub seed: u64,
}

impl ExperimentCase {
    pub fn banded(n: usize, b: usize) -> Self {
        ExperimentCase {
            family: Family::Banded,
            n,
            b,
            s: 0,
            n_blocks: 0,
            seed: 0,
        }
    }

    pub fn growing_block(n: usize, b: usize, s: usize) -> Self {
        ExperimentCase {
            family: Family::GrowingBlock,
            s,
            n_blocks: 1,
            ..ExperimentCase::banded(n, b)
        }
    }

    pub fn random_blocks(n: usize, b: usize, s: usize, n_blocks: usize, seed: u64) -> Self {
        ExperimentCase {
            family: Family::RandomBlocks,
            s,
            n_blocks,
            seed,
            ..ExperimentCase::banded(n, b)
        }
    }

    /// Short identifier such as `banded-n8192-b256`.
    pub fn id(&self) -> String {
        match self.family {
            Family::Banded => format!("banded-n{}-b{}", self.n, self.b),
            Family::GrowingBlock => format!("growing-block-n{}-b{}-s{}", self.n, self.b, self.s),
            Family::RandomBlocks => format!(
                "random-blocks-n{}-b{}-s{}x{}-seed{}",
                self.n, self.b, self.s, self.n_blocks, self.seed
            ),
        }
    }

    fn placement_error(&self, reason: impl Into<String>) -> GenError {
        GenError::Placement {
            n: self.n,
            b: self.b,
            s: self.s,
            n_blocks: self.n_blocks,
            reason: reason.into(),
        }
    }

    /// Block start offsets, ascending. Random blocks are placed by seeded
    /// rejection sampling at least `b` away from both matrix edges.
    pub fn block_starts(&self) -> Result<Vec<usize>, GenError> {
        if self.n == 0 {
            return Err(GenError::Invalid("dimension must be positive".into()));
        }
        match self.family {
            Family::Banded => Ok(Vec::new()),
            Family::GrowingBlock => {
                if self.s > self.n {
                    return Err(self.placement_error("block larger than the matrix"));
                }
                Ok(if self.s == 0 { Vec::new() } else { vec![0] })
            }
            Family::RandomBlocks => {
                if self.s == 0 || self.n_blocks == 0 {
                    return Ok(Vec::new());
                }
                let span = self.s + 2 * self.b;
                if span > self.n || self.n_blocks.saturating_mul(self.s) > self.n - 2 * self.b {
                    return Err(self.placement_error("blocks do not fit"));
                }
                let hi = self.n - self.s - self.b;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut starts: Vec<usize> = Vec::with_capacity(self.n_blocks);
                for _ in 0..PLACEMENT_ATTEMPTS * self.n_blocks {
                    if starts.len() == self.n_blocks {
                        break;
                    }
                    let p = rng.gen_range(self.b..=hi);
                    if starts.iter().all(|&q| p + self.s <= q || q + self.s <= p) {
                        starts.push(p);
                    }
                }
                if starts.len() < self.n_blocks {
                    return Err(self.placement_error(format!("only {} placed after bounded retries", starts.len())));
                }
                starts.sort_unstable();
                Ok(starts)
            }
        }
    }

    /// The case's pattern with value 1.0 at every position.
    pub fn pattern(&self) -> Result<BlockBandPattern, GenError> {
        Ok(BlockBandPattern {
            n: self.n,
            b: self.b,
            s: self.s,
            starts: self.block_starts()?,
        })
    }
}

/// Band of half width `b` united with dense diagonal blocks of size `s`
/// starting at `starts` (non-overlapping, ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockBandPattern {
    pub n: usize,
    pub b: usize,
    pub s: usize,
    pub starts: Vec<usize>,
}

impl BlockBandPattern {
    fn block_of(&self, k: usize) -> Option<(usize, usize)> {
        let i = self.starts.partition_point(|&p| p <= k);
        let p = *self.starts.get(i.checked_sub(1)?)?;
        let q = (p + self.s).min(self.n) - 1;
        (k <= q).then_some((p, q))
    }

    /// Rows of the nonzeros in column `k`, as an inclusive interval.
    pub fn column(&self, k: usize) -> (usize, usize) {
        let lo = k.saturating_sub(self.b);
        let hi = (k + self.b).min(self.n - 1);
        match self.block_of(k) {
            Some((p, q)) => (lo.min(p), hi.max(q)),
            None => (lo, hi),
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        if i >= self.n || j >= self.n {
            return false;
        }
        i.abs_diff(j) <= self.b || matches!((self.block_of(i), self.block_of(j)), (Some(x), Some(y)) if x == y)
    }
}

impl Pattern for BlockBandPattern {
    fn touches(&self, r0: usize, c0: usize, size: usize) -> bool {
        if r0 >= self.n || c0 >= self.n {
            return false;
        }
        let (r1, c1) = (r0 + size - 1, c0 + size - 1);
        let gap = r0.saturating_sub(c1).max(c0.saturating_sub(r1));
        if gap <= self.b {
            return true;
        }
        self.starts.iter().any(|&p| {
            let q = (p + self.s).min(self.n) - 1;
            p <= r1.min(c1) && q >= r0.max(c0)
        })
    }

    fn entries(&self, r0: usize, c0: usize, size: usize, out: &mut Vec<(usize, usize, f64)>) {
        let r1 = (r0 + size).min(self.n);
        for j in c0..(c0 + size).min(self.n) {
            let (lo, hi) = self.column(j);
            for i in lo.max(r0)..(hi + 1).min(r1) {
                out.push((i, j, 1.0));
            }
        }
    }
}

/// `(Σ f, Σ f²)` over `k ∈ [x, y]` for `f` linear between cut points.
fn piecewise_sums(x: i128, y: i128, kinks: &[i128], f: impl Fn(i128) -> i128) -> (i128, i128) {
    if y < x {
        return (0, 0);
    }
    let mut starts: Vec<i128> = kinks
        .iter()
        .flat_map(|&c| [c, c + 1])
        .filter(|&c| c > x && c <= y)
        .collect();
    starts.push(x);
    starts.sort_unstable();
    starts.dedup();
    let (mut s1, mut s2) = (0i128, 0i128);
    for (i, &a) in starts.iter().enumerate() {
        let z = starts.get(i + 1).map_or(y, |&next| next - 1);
        let len = z - a + 1;
        let d0 = f(a);
        let slope = if len > 1 { f(a + 1) - d0 } else { 0 };
        debug_assert_eq!(f(z), d0 + slope * (len - 1), "deg not linear on [{a}, {z}]");
        s1 += len * d0 + slope * len * (len - 1) / 2;
        s2 += len * d0 * d0 + d0 * slope * len * (len - 1) + slope * slope * (len - 1) * len * (2 * len - 1) / 6;
    }
    (s1, s2)
}

/// `(Σ_k deg(k), Σ_k deg(k)²)` for band `b` and blocks at `starts`.
fn degree_sums(n: usize, b: usize, s: usize, starts: &[usize]) -> (u128, u128) {
    let (n, b) = (n as i128, b as i128);
    let lo = |k: i128| (k - b).max(0);
    let hi = |k: i128| (k + b).min(n - 1);
    let band_kinks = [b, n - 1 - b];
    let (mut s1, mut s2) = (0i128, 0i128);
    let mut add = |(a, c): (i128, i128)| {
        s1 += a;
        s2 += c;
    };
    let mut next = 0i128;
    for &p in starts {
        let p = p as i128;
        let q = (p + s as i128).min(n) - 1;
        add(piecewise_sums(next, p - 1, &band_kinks, |k| hi(k) - lo(k) + 1));
        let kinks = [b, n - 1 - b, p + b, q - b];
        add(piecewise_sums(p, q, &kinks, |k| hi(k).max(q) - lo(k).min(p) + 1));
        next = q + 1;
    }
    add(piecewise_sums(next, n - 1, &band_kinks, |k| hi(k) - lo(k) + 1));
    (s1 as u128, s2 as u128)
}

/// Number of nonzeros in the case's pattern.
pub fn nnz_exact(case: &ExperimentCase) -> Result<u128, GenError> {
    Ok(degree_sums(case.n, case.b, case.s, &case.block_starts()?).0)
}

/// Flops of one product of the case's matrix with itself: two per
/// contributing `(i, j, k)` triple.
pub fn flop_count_exact(case: &ExperimentCase) -> Result<u128, GenError> {
    Ok(flops_for(case.n, case.b, case.s, &case.block_starts()?))
}

fn flops_for(n: usize, b: usize, s: usize, starts: &[usize]) -> u128 {
    2 * degree_sums(n, b, s, starts).1
}

/// Placement used when solving for a block size: the first block at the
/// origin and the rest spread evenly, clear of the band's edge effects.
fn reference_starts(family: Family, n: usize, n_blocks: usize) -> Vec<usize> {
    match family {
        Family::Banded => Vec::new(),
        Family::GrowingBlock => vec![0],
        Family::RandomBlocks => (0..n_blocks).map(|i| i * (n / n_blocks)).collect(),
    }
}

/// Number of blocks in the random-blocks family for dimension `n`.
pub fn reference_block_count(n: usize) -> usize {
    (n / ROWS_PER_RANDOM_BLOCK).max(1)
}

/// Smallest block size `s` whose flop count reaches `target_ratio` times
/// the banded flop count. Returns `(s, n_blocks)`.
pub fn solve_block_size(family: Family, n: usize, b: usize, target_ratio: f64) -> Result<(usize, usize), GenError> {
    let n_blocks = match family {
        Family::Banded => return Err(GenError::Invalid("the banded family has no block".into())),
        Family::GrowingBlock => 1,
        Family::RandomBlocks => reference_block_count(n),
    };
    if n == 0 || !(target_ratio.is_finite()) {
        return Err(GenError::Invalid("need n > 0 and a finite ratio".into()));
    }
    let starts = reference_starts(family, n, n_blocks);
    let target = target_ratio * flops_for(n, b, 0, &[]) as f64;
    let reaches = |s: usize| {
        let st = if s == 0 { &[][..] } else { &starts[..] };
        flops_for(n, b, s, st) as f64 >= target
    };
    // Largest s keeping the evenly spaced blocks apart and inside the matrix.
    let max_s = match family {
        Family::GrowingBlock => n,
        _ => (n / n_blocks).saturating_sub(b).max(1),
    };
    if reaches(0) {
        return Ok((0, n_blocks));
    }
    if !reaches(max_s) {
        return Err(GenError::NoFeasibleSize {
            n,
            b,
            ratio: target_ratio,
        });
    }
    let (mut lo, mut hi) = (0, max_s);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, n_blocks))
}

/// Builds the case's matrix in `session`.
pub fn generate(session: &mut Session, case: &ExperimentCase) -> Result<Matrix, GenError> {
    if session.params().n_logical != case.n {
        return Err(GenError::Invalid(format!(
            "session dimension {} differs from case dimension {}",
            session.params().n_logical,
            case.n
        )));
    }
    let pattern = case.pattern()?;
    Ok(session.from_pattern(&pattern)?)
}

/// Triple count by explicit enumeration over a materialized pattern.
pub fn flop_count_brute_force(case: &ExperimentCase) -> Result<u128, GenError> {
    let pattern = case.pattern()?;
    let n = case.n;
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..n {
            if pattern.contains(i, j) {
                cols[j].push(i);
                rows[i].push(j);
            }
        }
    }
    let mut triples: u128 = 0;
    for k in 0..n {
        for _i in &cols[k] {
            for _j in &rows[k] {
                triples += 1;
            }
        }
    }
    Ok(2 * triples)
}
