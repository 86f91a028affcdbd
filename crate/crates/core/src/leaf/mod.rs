//! Leaf matrix representations used at the bottom of a quadtree.
//!
//! Three kinds share the [`LeafMatrix`] interface:
//!
//! * [`DenseLeaf`]: `n × n` column-major array.
//! * [`BlockSparseLeaf`]: a 2-D grid of optional `block_size × block_size`
//!   dense blocks; absent blocks are exactly zero.
//! * [`HierarchicalLeaf`]: a local quadtree whose bottom nodes are dense
//!   blocks of `block_size`.
//!
//! Products accumulate each element over `k` in ascending order, so the three
//! kinds produce identical values up to the sign of zero.

mod block_sparse;
mod codec;
mod dense;
mod hierarchical;
pub(crate) mod kernel;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use block_sparse::BlockSparseLeaf;
pub use dense::DenseLeaf;
pub use hierarchical::HierarchicalLeaf;

pub(crate) use codec::{Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LeafKind {
    Dense,
    BlockSparse,
    Hierarchical,
}

impl LeafKind {
    pub const ALL: [LeafKind; 3] = [LeafKind::Dense, LeafKind::BlockSparse, LeafKind::Hierarchical];

    pub fn name(self) -> &'static str {
        match self {
            LeafKind::Dense => "dense",
            LeafKind::BlockSparse => "block-sparse",
            LeafKind::Hierarchical => "hierarchical",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            LeafKind::Dense => 0,
            LeafKind::BlockSparse => 1,
            LeafKind::Hierarchical => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(LeafKind::Dense),
            1 => Some(LeafKind::BlockSparse),
            2 => Some(LeafKind::Hierarchical),
            _ => None,
        }
    }
}

impl fmt::Display for LeafKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LeafKind {
    type Err = LeafError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LeafKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LeafError::InvalidConfig(format!("unknown leaf kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LeafError {
    #[error("leaf dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("mixed leaf kinds: expected {expected}, found {found}")]
    MixedKind { expected: LeafKind, found: LeafKind },
    #[error("index ({row}, {col}) out of range for leaf of dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("truncation threshold must be non-negative, got {0}")]
    NegativeTolerance(f64),
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },
    #[error("malformed leaf payload: {0}")]
    Decode(String),
    #[error("invalid leaf configuration: {0}")]
    InvalidConfig(String),
}

/// Shape parameters shared by every leaf of one matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafConfig {
    pub n: usize,
    pub block_size: usize,
}

impl LeafConfig {
    pub fn new(n: usize, block_size: usize) -> Result<Self, LeafError> {
        let cfg = LeafConfig { n, block_size };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LeafError> {
        if self.n == 0 || self.block_size == 0 {
            return Err(LeafError::InvalidConfig("leaf and block sizes must be positive".into()));
        }
        if self.n % self.block_size != 0 {
            return Err(LeafError::InvalidConfig(format!(
                "block size {} does not divide leaf dimension {}",
                self.block_size, self.n
            )));
        }
        Ok(())
    }

    /// Number of blocks along one side.
    pub fn grid(&self) -> usize {
        self.n / self.block_size
    }
}

impl Default for LeafConfig {
    fn default() -> Self {
        LeafConfig { n: 256, block_size: 64 }
    }
}

/// Operations every leaf representation provides.
///
/// "Blocks" are the unit of truncation: stored dense blocks for the blocked
/// kinds and single elements for [`DenseLeaf`]. [`LeafMatrix::block_norms`]
/// and [`LeafMatrix::drop_blocks`] agree on block order.
pub trait LeafMatrix: Clone + Send + Sync + fmt::Debug + 'static {
    const KIND: LeafKind;

    fn zeros(cfg: &LeafConfig) -> Self;

    fn config(&self) -> LeafConfig;

    fn dim(&self) -> usize {
        self.config().n
    }

    /// Builds a leaf from local `(row, col, value)` entries; duplicates are summed.
    fn from_triplets(cfg: &LeafConfig, entries: &[(usize, usize, f64)]) -> Result<Self, LeafError>;

    fn get(&self, row: usize, col: usize) -> f64;

    fn get_elements(&self, indices: &[(usize, usize)]) -> Result<Vec<f64>, LeafError> {
        let n = self.dim();
        indices
            .iter()
            .map(|&(row, col)| {
                if row >= n || col >= n {
                    Err(LeafError::IndexOutOfRange { row, col, n })
                } else {
                    Ok(self.get(row, col))
                }
            })
            .collect()
    }

    /// `op(self) · op(other)` where `op` transposes when its flag is set.
    fn multiply(&self, other: &Self, ta: bool, tb: bool) -> Result<Self, LeafError>;

    /// `alpha · self + beta · other`.
    fn add(&self, other: &Self, alpha: f64, beta: f64) -> Result<Self, LeafError>;

    fn scale(&self, alpha: f64) -> Self;

    /// Frobenius norms of the stored blocks.
    fn block_norms(&self) -> Vec<f64>;

    /// Removes the blocks flagged in `drop` (aligned with `block_norms`).
    fn drop_blocks(&self, drop: &[bool]) -> Self;

    fn frobenius_norm(&self) -> f64 {
        self.block_norms().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Greedily drops blocks in ascending norm order while the Frobenius norm
    /// of everything dropped stays within `tau`. Returns the removed norm.
    fn truncate(&self, tau: f64) -> Result<(Self, f64), LeafError> {
        if tau.is_nan() || tau < 0.0 {
            return Err(LeafError::NegativeTolerance(tau));
        }
        if tau == 0.0 {
            return Ok((self.clone(), 0.0));
        }
        let total = self.frobenius_norm();
        if tau >= total {
            return Ok((Self::zeros(&self.config()), total));
        }
        let norms = self.block_norms();
        let mut order: Vec<usize> = (0..norms.len()).collect();
        order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
        let mut drop = vec![false; norms.len()];
        let mut removed_sq = 0.0;
        for i in order {
            let next = removed_sq + norms[i] * norms[i];
            if next.sqrt() > tau {
                break;
            }
            removed_sq = next;
            drop[i] = true;
        }
        Ok((self.drop_blocks(&drop), removed_sq.sqrt()))
    }

    /// True when no element is stored as a nonzero.
    fn is_zero(&self) -> bool;

    /// Number of stored nonzero elements.
    fn nnz(&self) -> usize;

    fn to_dense(&self) -> DenseLeaf;

    fn from_dense(cfg: &LeafConfig, dense: &DenseLeaf) -> Self;

    fn transpose(&self) -> Self {
        Self::from_dense(&self.config(), &self.to_dense().transpose())
    }

    /// Upper triangle including the diagonal.
    fn upper_triangle(&self) -> Self {
        Self::from_dense(&self.config(), &self.to_dense().upper_triangle())
    }

    /// Full symmetric matrix `U + Uᵀ - diag(U)` from upper-triangle storage.
    fn symmetrize_upper(&self) -> Self {
        Self::from_dense(&self.config(), &self.to_dense().symmetrize_upper())
    }

    /// Adds `c` to the first `m` diagonal elements.
    fn add_diagonal(&self, c: f64, m: usize) -> Self {
        Self::from_dense(&self.config(), &self.to_dense().add_diagonal(c, m))
    }

    /// Upper-triangular `Z` with `Zᵀ A Z = I` on the leading `m × m` part;
    /// only the upper triangle of `A` is read.
    fn cholesky_inverse(&self, m: usize) -> Result<Self, LeafError> {
        let z = self.to_dense().cholesky_inverse(m)?;
        Ok(Self::from_dense(&self.config(), &z))
    }

    fn encode(&self, out: &mut Vec<u8>);

    fn decode(bytes: &[u8]) -> Result<Self, LeafError>;
}

/// Checks the kind tag at the head of a leaf payload.
pub(crate) fn expect_kind(bytes: &[u8], expected: LeafKind) -> Result<(), LeafError> {
    let tag = *bytes
        .first()
        .ok_or_else(|| LeafError::Decode("empty leaf payload".into()))?;
    let found = LeafKind::from_tag(tag).ok_or_else(|| LeafError::Decode(format!("unknown leaf tag {tag}")))?;
    if found != expected {
        return Err(LeafError::MixedKind { expected, found });
    }
    Ok(())
}

pub(crate) fn check_same_shape(a: &LeafConfig, b: &LeafConfig) -> Result<(), LeafError> {
    if a.n != b.n {
        return Err(LeafError::DimensionMismatch { left: a.n, right: b.n });
    }
    if a.block_size != b.block_size {
        return Err(LeafError::InvalidConfig(format!(
            "block size mismatch: {} vs {}",
            a.block_size, b.block_size
        )));
    }
    Ok(())
}

pub(crate) fn check_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Result<(), LeafError> {
    for &(row, col, _) in entries {
        if row >= n || col >= n {
            return Err(LeafError::IndexOutOfRange { row, col, n });
        }
    }
    Ok(())
}
