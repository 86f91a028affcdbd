use super::kernel::{all_zero, frobenius_sq, gemm_acc};
use super::{
    check_same_shape, check_triplets, expect_kind, DenseLeaf, LeafConfig, LeafError, LeafKind, LeafMatrix, Reader,
    Writer,
};

#[derive(Debug, Clone, PartialEq)]
enum HNode {
    Zero,
    Dense(Box<[f64]>),
    /// Quadrants NW, NE, SW, SE; child `(r, c)` is at `2 * r + c`.
    Split(Box<[HNode; 4]>),
}

impl HNode {
    fn split_zero() -> HNode {
        HNode::Split(Box::new([HNode::Zero, HNode::Zero, HNode::Zero, HNode::Zero]))
    }

    fn normalize(&mut self) {
        let zero = match self {
            HNode::Zero => false,
            HNode::Dense(b) => all_zero(b),
            HNode::Split(ch) => ch.iter().all(|c| matches!(c, HNode::Zero)),
        };
        if zero {
            *self = HNode::Zero;
        }
    }

    fn child(&self, r: usize, c: usize) -> &HNode {
        match self {
            HNode::Split(ch) => &ch[2 * r + c],
            _ => &HNode::Zero,
        }
    }

    fn visit_blocks<'a>(&'a self, f: &mut impl FnMut(&'a [f64])) {
        match self {
            HNode::Zero => {}
            HNode::Dense(b) => f(b),
            HNode::Split(ch) => ch.iter().for_each(|c| c.visit_blocks(f)),
        }
    }

    fn map(&self, f: &impl Fn(&[f64]) -> Box<[f64]>) -> HNode {
        let mut out = match self {
            HNode::Zero => HNode::Zero,
            HNode::Dense(b) => HNode::Dense(f(b)),
            HNode::Split(ch) => HNode::Split(Box::new([ch[0].map(f), ch[1].map(f), ch[2].map(f), ch[3].map(f)])),
        };
        out.normalize();
        out
    }
}

/// `c += op(a) · op(b)` on nodes of equal level.
fn mul_acc(c: &mut HNode, a: &HNode, b: &HNode, ta: bool, tb: bool, bs: usize) {
    match (a, b) {
        (HNode::Zero, _) | (_, HNode::Zero) => {}
        (HNode::Dense(x), HNode::Dense(y)) => {
            if matches!(c, HNode::Zero) {
                *c = HNode::Dense(vec![0.0; bs * bs].into_boxed_slice());
            }
            if let HNode::Dense(z) = c {
                gemm_acc(z, x, ta, y, tb, bs);
            }
        }
        _ => {
            if matches!(c, HNode::Zero) {
                *c = HNode::split_zero();
            }
            if let HNode::Split(ch) = c {
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            let x = if ta { a.child(k, i) } else { a.child(i, k) };
                            let y = if tb { b.child(j, k) } else { b.child(k, j) };
                            mul_acc(&mut ch[2 * i + j], x, y, ta, tb, bs);
                        }
                    }
                }
            }
        }
    }
    c.normalize();
}

fn add_nodes(a: &HNode, b: &HNode, alpha: f64, beta: f64) -> HNode {
    let mut out = match (a, b) {
        (HNode::Zero, HNode::Zero) => HNode::Zero,
        (x, HNode::Zero) => x.map(&|v: &[f64]| v.iter().map(|e| alpha * e).collect()),
        (HNode::Zero, y) => y.map(&|v: &[f64]| v.iter().map(|e| beta * e).collect()),
        (HNode::Dense(x), HNode::Dense(y)) => {
            HNode::Dense(x.iter().zip(y.iter()).map(|(p, q)| alpha * p + beta * q).collect())
        }
        (HNode::Split(x), HNode::Split(y)) => {
            HNode::Split(Box::new(std::array::from_fn(|i| add_nodes(&x[i], &y[i], alpha, beta))))
        }
        _ => unreachable!("dense blocks only appear at the bottom level"),
    };
    out.normalize();
    out
}

fn build(dense: &DenseLeaf, r0: usize, c0: usize, size: usize, bs: usize) -> HNode {
    let mut node = if size == bs {
        let mut b = vec![0.0; bs * bs];
        for c in 0..bs {
            for r in 0..bs {
                b[r + c * bs] = dense.at(r0 + r, c0 + c);
            }
        }
        HNode::Dense(b.into_boxed_slice())
    } else {
        let h = size / 2;
        HNode::Split(Box::new(std::array::from_fn(|q| {
            build(dense, r0 + (q / 2) * h, c0 + (q % 2) * h, h, bs)
        })))
    };
    node.normalize();
    node
}

fn scatter(node: &HNode, out: &mut DenseLeaf, r0: usize, c0: usize, size: usize, bs: usize) {
    match node {
        HNode::Zero => {}
        HNode::Dense(b) => {
            for c in 0..bs {
                for r in 0..bs {
                    out.set(r0 + r, c0 + c, b[r + c * bs]);
                }
            }
        }
        HNode::Split(ch) => {
            let h = size / 2;
            for (q, child) in ch.iter().enumerate() {
                scatter(child, out, r0 + (q / 2) * h, c0 + (q % 2) * h, h, bs);
            }
        }
    }
}

fn drop_walk(node: &HNode, drop: &[bool], next: &mut usize) -> HNode {
    let mut out = match node {
        HNode::Zero => HNode::Zero,
        HNode::Dense(b) => {
            let d = drop.get(*next).copied().unwrap_or(false);
            *next += 1;
            if d {
                HNode::Zero
            } else {
                HNode::Dense(b.clone())
            }
        }
        HNode::Split(ch) => HNode::Split(Box::new(std::array::from_fn(|i| drop_walk(&ch[i], drop, next)))),
    };
    out.normalize();
    out
}

fn encode_node(node: &HNode, w: &mut Writer<'_>) {
    match node {
        HNode::Zero => w.u8(0),
        HNode::Dense(b) => {
            w.u8(1);
            w.f64s(b);
        }
        HNode::Split(ch) => {
            w.u8(2);
            ch.iter().for_each(|c| encode_node(c, w));
        }
    }
}

fn decode_node(r: &mut Reader<'_>, size: usize, bs: usize) -> Result<HNode, LeafError> {
    match r.u8()? {
        0 => Ok(HNode::Zero),
        1 if size == bs => Ok(HNode::Dense(r.f64s(bs * bs)?.into_boxed_slice())),
        2 if size > bs => {
            let mut ch: [HNode; 4] = std::array::from_fn(|_| HNode::Zero);
            for c in ch.iter_mut() {
                *c = decode_node(r, size / 2, bs)?;
            }
            Ok(HNode::Split(Box::new(ch)))
        }
        t => Err(LeafError::Decode(format!("node tag {t} invalid at size {size}"))),
    }
}

/// Local quadtree over `block_size` dense blocks; `n / block_size` must be a
/// power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalLeaf {
    cfg: LeafConfig,
    root: HNode,
}

impl HierarchicalLeaf {
    pub fn check_config(cfg: &LeafConfig) -> Result<(), LeafError> {
        cfg.validate()?;
        if !cfg.grid().is_power_of_two() {
            return Err(LeafError::InvalidConfig(format!(
                "hierarchical leaves need n / block_size to be a power of two, got {}",
                cfg.grid()
            )));
        }
        Ok(())
    }

    /// Number of stored dense blocks.
    pub fn stored_blocks(&self) -> usize {
        let mut count = 0;
        self.root.visit_blocks(&mut |_| count += 1);
        count
    }

    /// True if some internal node has four zero children or a stored block is
    /// exactly zero.
    pub fn has_unnormalized_nodes(&self) -> bool {
        fn walk(n: &HNode) -> bool {
            match n {
                HNode::Zero => false,
                HNode::Dense(b) => all_zero(b),
                HNode::Split(ch) => ch.iter().all(|c| matches!(c, HNode::Zero)) || ch.iter().any(walk),
            }
        }
        walk(&self.root)
    }
}

impl LeafMatrix for HierarchicalLeaf {
    const KIND: LeafKind = LeafKind::Hierarchical;

    fn zeros(cfg: &LeafConfig) -> Self {
        HierarchicalLeaf {
            cfg: *cfg,
            root: HNode::Zero,
        }
    }

    fn config(&self) -> LeafConfig {
        self.cfg
    }

    fn from_triplets(cfg: &LeafConfig, entries: &[(usize, usize, f64)]) -> Result<Self, LeafError> {
        HierarchicalLeaf::check_config(cfg)?;
        check_triplets(cfg.n, entries)?;
        let d = DenseLeaf::from_triplets(cfg, entries)?;
        Ok(HierarchicalLeaf::from_dense(cfg, &d))
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        let bs = self.cfg.block_size;
        let (mut node, mut r, mut c, mut size) = (&self.root, row, col, self.cfg.n);
        loop {
            match node {
                HNode::Zero => return 0.0,
                HNode::Dense(b) => return b[r + c * bs],
                HNode::Split(ch) => {
                    size /= 2;
                    node = &ch[2 * (r / size) + c / size];
                    r %= size;
                    c %= size;
                }
            }
        }
    }

    fn multiply(&self, other: &Self, ta: bool, tb: bool) -> Result<Self, LeafError> {
        check_same_shape(&self.cfg, &other.cfg)?;
        let mut root = HNode::Zero;
        mul_acc(&mut root, &self.root, &other.root, ta, tb, self.cfg.block_size);
        Ok(HierarchicalLeaf { cfg: self.cfg, root })
    }

    fn add(&self, other: &Self, alpha: f64, beta: f64) -> Result<Self, LeafError> {
        check_same_shape(&self.cfg, &other.cfg)?;
        Ok(HierarchicalLeaf {
            cfg: self.cfg,
            root: add_nodes(&self.root, &other.root, alpha, beta),
        })
    }

    fn scale(&self, alpha: f64) -> Self {
        HierarchicalLeaf {
            cfg: self.cfg,
            root: self.root.map(&|v: &[f64]| v.iter().map(|e| alpha * e).collect()),
        }
    }

    fn block_norms(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.root.visit_blocks(&mut |b| out.push(frobenius_sq(b).sqrt()));
        out
    }

    fn drop_blocks(&self, drop: &[bool]) -> Self {
        HierarchicalLeaf {
            cfg: self.cfg,
            root: drop_walk(&self.root, drop, &mut 0),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self.root, HNode::Zero)
    }

    fn nnz(&self) -> usize {
        let mut count = 0;
        self.root
            .visit_blocks(&mut |b| count += b.iter().filter(|&&x| x != 0.0).count());
        count
    }

    fn to_dense(&self) -> DenseLeaf {
        let n = self.cfg.n;
        let mut d = DenseLeaf::from_column_major(n, vec![0.0; n * n]).expect("square");
        scatter(&self.root, &mut d, 0, 0, n, self.cfg.block_size);
        d
    }

    fn from_dense(cfg: &LeafConfig, dense: &DenseLeaf) -> Self {
        HierarchicalLeaf {
            cfg: *cfg,
            root: build(dense, 0, 0, cfg.n, cfg.block_size),
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        let mut w = Writer(out);
        w.u8(LeafKind::Hierarchical.tag());
        w.u32(self.cfg.n as u32);
        w.u32(self.cfg.block_size as u32);
        encode_node(&self.root, &mut w);
    }

    fn decode(bytes: &[u8]) -> Result<Self, LeafError> {
        expect_kind(bytes, LeafKind::Hierarchical)?;
        let mut r = Reader::new(&bytes[1..]);
        let cfg = LeafConfig::new(r.u32()? as usize, r.u32()? as usize)?;
        HierarchicalLeaf::check_config(&cfg)?;
        let root = decode_node(&mut r, cfg.n, cfg.block_size)?;
        r.finish()?;
        Ok(HierarchicalLeaf { cfg, root })
    }
}
