use std::fmt;

use crate::MatrixError;

/// Shape of a quadtree matrix: the logical dimension is padded with implicit
/// zeros up to `leaf_dim · 2^depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixParams {
    pub n_logical: usize,
    pub leaf_dim: usize,
    pub n_padded: usize,
    pub depth: u32,
}

impl MatrixParams {
    pub fn new(n_logical: usize, leaf_dim: usize) -> Result<Self, MatrixError> {
        if n_logical == 0 || leaf_dim == 0 {
            return Err(MatrixError::Invalid(
                "matrix and leaf dimensions must be positive".into(),
            ));
        }
        let mut depth = 0;
        let mut n_padded = leaf_dim;
        while n_padded < n_logical {
            n_padded = n_padded
                .checked_mul(2)
                .ok_or_else(|| MatrixError::Invalid(format!("dimension {n_logical} too large")))?;
            depth += 1;
        }
        Ok(MatrixParams {
            n_logical,
            leaf_dim,
            n_padded,
            depth,
        })
    }

    /// Side length of a node at `level` (root is level 0).
    pub fn node_dim(&self, level: u32) -> usize {
        self.leaf_dim << (self.depth - level)
    }
}

impl fmt::Display for MatrixParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} leaf={} padded={} depth={}",
            self.n_logical, self.leaf_dim, self.n_padded, self.depth
        )
    }
}
