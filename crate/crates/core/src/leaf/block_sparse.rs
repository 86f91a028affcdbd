use super::kernel::{all_zero, frobenius_sq, gemm_acc};
use super::{
    check_same_shape, check_triplets, expect_kind, DenseLeaf, LeafConfig, LeafError, LeafKind, LeafMatrix, Reader,
    Writer,
};

/// Grid of optional dense blocks. Grid position `(bi, bj)` lives at
/// `bi + bj * grid`; every stored block is column-major and has at least one
/// nonzero element.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseLeaf {
    cfg: LeafConfig,
    blocks: Vec<Option<Box<[f64]>>>,
    norms: Vec<f64>,
}

impl BlockSparseLeaf {
    fn empty(cfg: LeafConfig) -> Self {
        let g = cfg.grid();
        BlockSparseLeaf {
            cfg,
            blocks: vec![None; g * g],
            norms: vec![0.0; g * g],
        }
    }

    /// Stores `block` unless it is exactly zero.
    fn put(&mut self, idx: usize, block: Box<[f64]>) {
        if all_zero(&block) {
            self.blocks[idx] = None;
            self.norms[idx] = 0.0;
        } else {
            self.norms[idx] = frobenius_sq(&block).sqrt();
            self.blocks[idx] = Some(block);
        }
    }

    pub fn block_size(&self) -> usize {
        self.cfg.block_size
    }

    pub fn stored_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.is_some()).count()
    }

    /// Stored block at grid position `(bi, bj)`.
    pub fn block(&self, bi: usize, bj: usize) -> Option<&[f64]> {
        self.blocks[bi + bj * self.cfg.grid()].as_deref()
    }

    /// Cached norm grid, zero at absent positions.
    pub fn norm_grid(&self) -> &[f64] {
        &self.norms
    }

    fn map_blocks(&self, f: impl Fn(&[f64]) -> Box<[f64]>) -> Self {
        let mut out = BlockSparseLeaf::empty(self.cfg);
        for (idx, b) in self.blocks.iter().enumerate() {
            if let Some(b) = b {
                out.put(idx, f(b));
            }
        }
        out
    }
}

impl LeafMatrix for BlockSparseLeaf {
    const KIND: LeafKind = LeafKind::BlockSparse;

    fn zeros(cfg: &LeafConfig) -> Self {
        BlockSparseLeaf::empty(*cfg)
    }

    fn config(&self) -> LeafConfig {
        self.cfg
    }

    fn from_triplets(cfg: &LeafConfig, entries: &[(usize, usize, f64)]) -> Result<Self, LeafError> {
        cfg.validate()?;
        check_triplets(cfg.n, entries)?;
        let (g, bs) = (cfg.grid(), cfg.block_size);
        let mut raw: Vec<Option<Vec<f64>>> = vec![None; g * g];
        for &(r, c, v) in entries {
            let block = raw[r / bs + (c / bs) * g].get_or_insert_with(|| vec![0.0; bs * bs]);
            block[r % bs + (c % bs) * bs] += v;
        }
        let mut leaf = BlockSparseLeaf::empty(*cfg);
        for (idx, b) in raw.into_iter().enumerate() {
            if let Some(b) = b {
                leaf.put(idx, b.into_boxed_slice());
            }
        }
        Ok(leaf)
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        let bs = self.cfg.block_size;
        self.block(row / bs, col / bs)
            .map_or(0.0, |b| b[row % bs + (col % bs) * bs])
    }

    fn multiply(&self, other: &Self, ta: bool, tb: bool) -> Result<Self, LeafError> {
        check_same_shape(&self.cfg, &other.cfg)?;
        let (g, bs) = (self.cfg.grid(), self.cfg.block_size);
        let mut out = BlockSparseLeaf::empty(self.cfg);
        let mut acc = vec![0.0; bs * bs];
        for bj in 0..g {
            for bi in 0..g {
                let mut touched = false;
                for bk in 0..g {
                    let a = if ta { self.block(bk, bi) } else { self.block(bi, bk) };
                    let b = if tb { other.block(bj, bk) } else { other.block(bk, bj) };
                    if let (Some(a), Some(b)) = (a, b) {
                        if !touched {
                            acc.iter_mut().for_each(|x| *x = 0.0);
                            touched = true;
                        }
                        gemm_acc(&mut acc, a, ta, b, tb, bs);
                    }
                }
                if touched {
                    out.put(bi + bj * g, acc.clone().into_boxed_slice());
                }
            }
        }
        Ok(out)
    }

    fn add(&self, other: &Self, alpha: f64, beta: f64) -> Result<Self, LeafError> {
        check_same_shape(&self.cfg, &other.cfg)?;
        let mut out = BlockSparseLeaf::empty(self.cfg);
        for (idx, (a, b)) in self.blocks.iter().zip(&other.blocks).enumerate() {
            let block: Box<[f64]> = match (a, b) {
                (Some(a), Some(b)) => a.iter().zip(b.iter()).map(|(x, y)| alpha * x + beta * y).collect(),
                (Some(a), None) => a.iter().map(|x| alpha * x).collect(),
                (None, Some(b)) => b.iter().map(|y| beta * y).collect(),
                (None, None) => continue,
            };
            out.put(idx, block);
        }
        Ok(out)
    }

    fn scale(&self, alpha: f64) -> Self {
        self.map_blocks(|b| b.iter().map(|x| alpha * x).collect())
    }

    fn block_norms(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .zip(&self.norms)
            .filter(|(b, _)| b.is_some())
            .map(|(_, &n)| n)
            .collect()
    }

    fn drop_blocks(&self, drop: &[bool]) -> Self {
        let mut out = self.clone();
        let present = out
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_some())
            .map(|(i, _)| i);
        let victims: Vec<usize> = present.zip(drop).filter(|(_, &d)| d).map(|(i, _)| i).collect();
        for i in victims {
            out.blocks[i] = None;
            out.norms[i] = 0.0;
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.blocks.iter().all(Option::is_none)
    }

    fn nnz(&self) -> usize {
        self.blocks
            .iter()
            .flatten()
            .map(|b| b.iter().filter(|&&x| x != 0.0).count())
            .sum()
    }

    fn to_dense(&self) -> DenseLeaf {
        let (n, g, bs) = (self.cfg.n, self.cfg.grid(), self.cfg.block_size);
        let mut d = DenseLeaf::from_column_major(n, vec![0.0; n * n]).expect("square");
        for bj in 0..g {
            for bi in 0..g {
                if let Some(b) = self.block(bi, bj) {
                    for c in 0..bs {
                        for r in 0..bs {
                            d.set(bi * bs + r, bj * bs + c, b[r + c * bs]);
                        }
                    }
                }
            }
        }
        d
    }

    fn from_dense(cfg: &LeafConfig, dense: &DenseLeaf) -> Self {
        let (g, bs) = (cfg.grid(), cfg.block_size);
        let mut out = BlockSparseLeaf::empty(*cfg);
        for bj in 0..g {
            for bi in 0..g {
                let mut b = vec![0.0; bs * bs];
                for c in 0..bs {
                    for r in 0..bs {
                        b[r + c * bs] = dense.at(bi * bs + r, bj * bs + c);
                    }
                }
                out.put(bi + bj * g, b.into_boxed_slice());
            }
        }
        out
    }

    fn transpose(&self) -> Self {
        let (g, bs) = (self.cfg.grid(), self.cfg.block_size);
        let mut out = BlockSparseLeaf::empty(self.cfg);
        for bj in 0..g {
            for bi in 0..g {
                if let Some(b) = self.block(bi, bj) {
                    let mut t = vec![0.0; bs * bs];
                    for c in 0..bs {
                        for r in 0..bs {
                            t[c + r * bs] = b[r + c * bs];
                        }
                    }
                    out.put(bj + bi * g, t.into_boxed_slice());
                }
            }
        }
        out
    }

    fn encode(&self, out: &mut Vec<u8>) {
        let mut w = Writer(out);
        w.u8(LeafKind::BlockSparse.tag());
        w.u32(self.cfg.n as u32);
        w.u32(self.cfg.block_size as u32);
        w.u32(self.stored_blocks() as u32);
        for (idx, b) in self.blocks.iter().enumerate() {
            if let Some(b) = b {
                w.u32(idx as u32);
                w.f64(self.norms[idx]);
                w.f64s(b);
            }
        }
    }

    fn decode(bytes: &[u8]) -> Result<Self, LeafError> {
        expect_kind(bytes, LeafKind::BlockSparse)?;
        let mut r = Reader::new(&bytes[1..]);
        let cfg = LeafConfig::new(r.u32()? as usize, r.u32()? as usize)?;
        let count = r.u32()? as usize;
        let mut leaf = BlockSparseLeaf::empty(cfg);
        let bs = cfg.block_size;
        for _ in 0..count {
            let idx = r.u32()? as usize;
            if idx >= leaf.blocks.len() {
                return Err(LeafError::Decode(format!("block index {idx} outside the grid")));
            }
            leaf.norms[idx] = r.f64()?;
            leaf.blocks[idx] = Some(r.f64s(bs * bs)?.into_boxed_slice());
        }
        r.finish()?;
        Ok(leaf)
    }
}
