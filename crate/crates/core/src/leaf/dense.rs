use super::kernel::gemm_acc;
use super::{
    check_same_shape, check_triplets, expect_kind, LeafConfig, LeafError, LeafKind, LeafMatrix, Reader, Writer,
};

/// Dense `n × n` leaf in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLeaf {
    n: usize,
    values: Vec<f64>,
}

impl DenseLeaf {
    pub fn from_column_major(n: usize, values: Vec<f64>) -> Result<Self, LeafError> {
        if values.len() != n * n {
            return Err(LeafError::InvalidConfig(format!(
                "expected {} values for a {n}x{n} leaf, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(DenseLeaf { n, values })
    }

    pub fn identity(n: usize) -> Self {
        DenseLeaf::zeros_n(n).add_diagonal(1.0, n)
    }

    fn zeros_n(n: usize) -> Self {
        DenseLeaf {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row + col * self.n]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row + col * self.n] = v;
    }

    pub fn transpose(&self) -> DenseLeaf {
        let n = self.n;
        let mut t = DenseLeaf::zeros_n(n);
        for j in 0..n {
            for i in 0..n {
                t.values[j + i * n] = self.values[i + j * n];
            }
        }
        t
    }

    pub fn upper_triangle(&self) -> DenseLeaf {
        let n = self.n;
        let mut u = self.clone();
        for j in 0..n {
            for i in j + 1..n {
                u.values[i + j * n] = 0.0;
            }
        }
        u
    }

    pub fn symmetrize_upper(&self) -> DenseLeaf {
        let n = self.n;
        let mut s = self.upper_triangle();
        for j in 0..n {
            for i in j + 1..n {
                s.values[i + j * n] = s.values[j + i * n];
            }
        }
        s
    }

    pub fn add_diagonal(mut self, c: f64, m: usize) -> DenseLeaf {
        let n = self.n;
        for i in 0..m.min(n) {
            self.values[i + i * n] += c;
        }
        self
    }

    /// Cholesky `A = RᵀR` of the leading `m × m` block (upper triangle read),
    /// then `Z = R⁻¹` by back substitution.
    pub fn cholesky_inverse(&self, m: usize) -> Result<DenseLeaf, LeafError> {
        let n = self.n;
        let m = m.min(n);
        let a = |i: usize, j: usize| self.values[i + j * n];
        let mut r = vec![0.0; m * m];
        for j in 0..m {
            let mut d = a(j, j);
            for k in 0..j {
                d -= r[k + j * m] * r[k + j * m];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LeafError::NotPositiveDefinite { index: j });
            }
            let rjj = d.sqrt();
            r[j + j * m] = rjj;
            for i in j + 1..m {
                let mut s = a(j, i);
                for k in 0..j {
                    s -= r[k + j * m] * r[k + i * m];
                }
                r[j + i * m] = s / rjj;
            }
        }
        let mut z = DenseLeaf::zeros_n(n);
        for c in 0..m {
            z.values[c + c * n] = 1.0 / r[c + c * m];
            for i in (0..c).rev() {
                let mut s = 0.0;
                for k in i + 1..=c {
                    s += r[i + k * m] * z.values[k + c * n];
                }
                z.values[i + c * n] = -s / r[i + i * m];
            }
        }
        Ok(z)
    }
}

impl LeafMatrix for DenseLeaf {
    const KIND: LeafKind = LeafKind::Dense;

    fn zeros(cfg: &LeafConfig) -> Self {
        DenseLeaf::zeros_n(cfg.n)
    }

    fn config(&self) -> LeafConfig {
        LeafConfig {
            n: self.n,
            block_size: 1,
        }
    }

    fn from_triplets(cfg: &LeafConfig, entries: &[(usize, usize, f64)]) -> Result<Self, LeafError> {
        check_triplets(cfg.n, entries)?;
        let mut leaf = DenseLeaf::zeros_n(cfg.n);
        for &(r, c, v) in entries {
            leaf.values[r + c * cfg.n] += v;
        }
        Ok(leaf)
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        self.at(row, col)
    }

    fn multiply(&self, other: &Self, ta: bool, tb: bool) -> Result<Self, LeafError> {
        if self.n != other.n {
            return Err(LeafError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut c = DenseLeaf::zeros_n(self.n);
        gemm_acc(&mut c.values, &self.values, ta, &other.values, tb, self.n);
        Ok(c)
    }

    fn add(&self, other: &Self, alpha: f64, beta: f64) -> Result<Self, LeafError> {
        check_same_shape(&self.config(), &other.config())?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(DenseLeaf { n: self.n, values })
    }

    fn scale(&self, alpha: f64) -> Self {
        DenseLeaf {
            n: self.n,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    fn block_norms(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs()).collect()
    }

    fn drop_blocks(&self, drop: &[bool]) -> Self {
        let mut out = self.clone();
        for (v, &d) in out.values.iter_mut().zip(drop) {
            if d {
                *v = 0.0;
            }
        }
        out
    }

    fn frobenius_norm(&self) -> f64 {
        super::kernel::frobenius_sq(&self.values).sqrt()
    }

    fn is_zero(&self) -> bool {
        super::kernel::all_zero(&self.values)
    }

    fn nnz(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    fn to_dense(&self) -> DenseLeaf {
        self.clone()
    }

    fn from_dense(_cfg: &LeafConfig, dense: &DenseLeaf) -> Self {
        dense.clone()
    }

    fn transpose(&self) -> Self {
        DenseLeaf::transpose(self)
    }

    fn upper_triangle(&self) -> Self {
        DenseLeaf::upper_triangle(self)
    }

    fn symmetrize_upper(&self) -> Self {
        DenseLeaf::symmetrize_upper(self)
    }

    fn add_diagonal(&self, c: f64, m: usize) -> Self {
        self.clone().add_diagonal(c, m)
    }

    fn cholesky_inverse(&self, m: usize) -> Result<Self, LeafError> {
        DenseLeaf::cholesky_inverse(self, m)
    }

    fn encode(&self, out: &mut Vec<u8>) {
        let mut w = Writer(out);
        w.u8(LeafKind::Dense.tag());
        w.u32(self.n as u32);
        w.f64s(&self.values);
    }

    fn decode(bytes: &[u8]) -> Result<Self, LeafError> {
        expect_kind(bytes, LeafKind::Dense)?;
        let mut r = Reader::new(&bytes[1..]);
        let n = r.u32()? as usize;
        let values = r.f64s(n * n)?;
        r.finish()?;
        Ok(DenseLeaf { n, values })
    }
}
