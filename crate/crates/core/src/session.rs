use std::sync::Arc;

use quadmat_runtime::{Arg, ChunkId, Engine, RunReport, RuntimeConfig, TaskRegistry, TaskSpec};

use crate::backend::{backend_for, LeafBackend};
use crate::leaf::{LeafConfig, LeafKind};
use crate::ops::{drop_threshold, names, product_params, Geometry, Operand};
use crate::quadtree::{self, OwnerPolicy, Pattern, TreeStats};
use crate::{MatrixError, MatrixParams};

/// A matrix owned by a [`Session`]: the root chunk plus its storage flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Matrix {
    pub root: ChunkId,
    /// Symmetric with only the upper triangle stored.
    pub symmetric: bool,
    pub params: MatrixParams,
}

impl Matrix {
    pub fn is_nil(&self) -> bool {
        self.root.is_nil()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplyVariant {
    /// `A · B`.
    Regular,
    /// `A · B` with `A` symmetric.
    Symmetric,
    /// `A²` for symmetric `A`; upper triangle result.
    SymmetricSquare,
    /// `A · Aᵀ`; upper triangle result.
    RankK,
    /// `A · B` with Frobenius error at most `tau`.
    Approximate(f64),
}

/// Matrices of one shape, their chunks, and the engine that runs their tasks.
pub struct Session {
    engine: Engine,
    backend: Arc<dyn LeafBackend>,
    geom: Geometry,
    policy: OwnerPolicy,
    last: RunReport,
}

impl Session {
    pub fn new(
        n: usize,
        leaf: LeafConfig,
        backend: Arc<dyn LeafBackend>,
        runtime: RuntimeConfig,
    ) -> Result<Self, MatrixError> {
        backend.check(&leaf)?;
        let geom = Geometry {
            params: MatrixParams::new(n, leaf.n)?,
            leaf,
        };
        let mut registry = TaskRegistry::new();
        backend.install_tasks(&mut registry, geom);
        Ok(Session {
            engine: Engine::new(registry, runtime)?,
            backend,
            geom,
            policy: OwnerPolicy::default(),
            last: RunReport::default(),
        })
    }

    pub fn with_kind(n: usize, leaf: LeafConfig, kind: LeafKind, runtime: RuntimeConfig) -> Result<Self, MatrixError> {
        Session::new(n, leaf, backend_for(kind), runtime)
    }

    pub fn set_owner_policy(&mut self, policy: OwnerPolicy) {
        self.policy = policy;
    }

    pub fn params(&self) -> MatrixParams {
        self.geom.params
    }

    pub fn geometry(&self) -> Geometry {
        self.geom
    }

    pub fn leaf_kind(&self) -> LeafKind {
        self.backend.kind()
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// Report of the most recent task run.
    pub fn last_report(&self) -> &RunReport {
        &self.last
    }

    fn wrap(&self, root: ChunkId, symmetric: bool) -> Matrix {
        Matrix {
            root,
            symmetric,
            params: self.geom.params,
        }
    }

    fn check(&self, m: &Matrix) -> Result<(), MatrixError> {
        if m.params != self.geom.params {
            return Err(MatrixError::ParamsMismatch {
                left: m.params.to_string(),
                right: self.geom.params.to_string(),
            });
        }
        Ok(())
    }

    fn run(&mut self, name: &str, inputs: Vec<Arg>, params: Vec<f64>) -> Result<ChunkId, MatrixError> {
        let (out, report) = self
            .engine
            .run_task(TaskSpec::new(name, inputs, params))
            .map_err(MatrixError::from_run)?;
        self.last = report;
        Ok(out)
    }

    pub fn zero(&self) -> Matrix {
        self.wrap(ChunkId::NIL, false)
    }

    /// Builds from global `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(&mut self, entries: &[(usize, usize, f64)]) -> Result<Matrix, MatrixError> {
        let root = quadtree::build_from_triplets(&self.engine, &*self.backend, self.geom, entries, self.policy)?;
        Ok(self.wrap(root, false))
    }

    /// Builds a symmetric matrix from entries on or above the diagonal.
    pub fn symmetric_from_triplets(&mut self, entries: &[(usize, usize, f64)]) -> Result<Matrix, MatrixError> {
        if let Some(&(row, col, _)) = entries.iter().find(|e| e.0 > e.1) {
            return Err(MatrixError::Invalid(format!(
                "symmetric matrices take upper-triangle entries only, got ({row}, {col})"
            )));
        }
        let root = quadtree::build_from_triplets(&self.engine, &*self.backend, self.geom, entries, self.policy)?;
        Ok(self.wrap(root, true))
    }

    pub fn from_pattern(&mut self, pattern: &dyn Pattern) -> Result<Matrix, MatrixError> {
        let root = quadtree::build_from_pattern(&self.engine, &*self.backend, self.geom, pattern, self.policy)?;
        Ok(self.wrap(root, false))
    }

    /// A full tree of explicitly stored zero leaves. Not normalized; meant for
    /// checking that nil and zero operands behave alike.
    pub fn explicit_zeros(&mut self, symmetric: bool) -> Result<Matrix, MatrixError> {
        let root = quadtree::build_explicit_zeros(&self.engine, &*self.backend, self.geom, 0)?;
        Ok(self.wrap(root, symmetric))
    }

    /// Builds from entries with `assign` tasks on the workers.
    pub fn assign(&mut self, entries: &[(usize, usize, f64)]) -> Result<Matrix, MatrixError> {
        let n = self.geom.params.n_logical;
        if let Some(&(row, col, _)) = entries.iter().find(|&&(r, c, _)| r >= n || c >= n) {
            return Err(MatrixError::IndexOutOfRange { row, col, n });
        }
        if entries.is_empty() {
            return Ok(self.zero());
        }
        let mut params = vec![0.0, 0.0, 0.0];
        for &(r, c, v) in entries {
            params.extend([r as f64, c as f64, v]);
        }
        let root = self.run(names::ASSIGN, vec![], params)?;
        Ok(self.wrap(root, false))
    }

    /// Reads elements directly from the store.
    pub fn get_elements(&self, m: &Matrix, indices: &[(usize, usize)]) -> Result<Vec<f64>, MatrixError> {
        self.check(m)?;
        quadtree::get_elements(self.engine.store(), &*self.backend, self.geom, m.root, indices)
    }

    /// Reads elements with `extract` tasks on the workers.
    pub fn extract(&mut self, m: &Matrix, indices: &[(usize, usize)]) -> Result<Vec<f64>, MatrixError> {
        self.check(m)?;
        let n = self.geom.params.n_logical;
        if let Some(&(row, col)) = indices.iter().find(|&&(r, c)| r >= n || c >= n) {
            return Err(MatrixError::IndexOutOfRange { row, col, n });
        }
        let mut out = vec![0.0; indices.len()];
        if m.is_nil() || indices.is_empty() {
            return Ok(out);
        }
        let mut params = vec![0.0, 0.0, 0.0];
        for (slot, &(r, c)) in indices.iter().enumerate() {
            params.extend([slot as f64, r as f64, c as f64]);
        }
        let found = self.run(names::EXTRACT, vec![m.root.into()], params)?;
        if !found.is_nil() {
            let chunk = self.engine.store().get(found)?;
            for pair in chunk.payload().chunks_exact(16) {
                let slot = u64::from_le_bytes(pair[..8].try_into().unwrap()) as usize;
                out[slot] = f64::from_le_bytes(pair[8..].try_into().unwrap());
            }
        }
        Ok(out)
    }

    /// `alpha · A + beta · B`.
    pub fn add(&mut self, a: &Matrix, b: &Matrix, alpha: f64, beta: f64) -> Result<Matrix, MatrixError> {
        self.check(a)?;
        self.check(b)?;
        if a.symmetric != b.symmetric {
            return Err(MatrixError::Invalid(
                "cannot add a symmetric and a general matrix".into(),
            ));
        }
        let root = self.run(names::ADD, vec![a.root.into(), b.root.into()], vec![0.0, alpha, beta])?;
        Ok(self.wrap(root, a.symmetric))
    }

    /// `A + c · I`.
    pub fn add_scaled_identity(&mut self, a: &Matrix, c: f64) -> Result<Matrix, MatrixError> {
        self.check(a)?;
        let root = self.run(names::ADD_IDENTITY, vec![a.root.into()], vec![0.0, c, 0.0])?;
        Ok(self.wrap(root, a.symmetric))
    }

    fn product(
        &mut self,
        a: &Matrix,
        b: &Matrix,
        oa: Operand,
        ob: Operand,
        upper: bool,
    ) -> Result<ChunkId, MatrixError> {
        let params = product_params(0, upper, 1.0, oa, ob);
        self.run(names::MULTIPLY, vec![a.root.into(), b.root.into()], params)
    }

    pub fn multiply(&mut self, a: &Matrix, b: &Matrix, variant: MultiplyVariant) -> Result<Matrix, MatrixError> {
        self.check(a)?;
        self.check(b)?;
        match variant {
            MultiplyVariant::Regular => {
                if a.symmetric || b.symmetric {
                    return Err(MatrixError::Invalid("regular multiply takes general operands".into()));
                }
                let root = self.product(a, b, Operand::Plain, Operand::Plain, false)?;
                Ok(self.wrap(root, false))
            }
            MultiplyVariant::Symmetric => {
                if !a.symmetric {
                    return Err(MatrixError::SymmetryRequired("symmetric"));
                }
                if b.symmetric {
                    return Err(MatrixError::Invalid(
                        "symmetric multiply takes a general right operand".into(),
                    ));
                }
                let root = self.product(a, b, Operand::Symmetric, Operand::Plain, false)?;
                Ok(self.wrap(root, false))
            }
            MultiplyVariant::SymmetricSquare => {
                if !a.symmetric || !b.symmetric {
                    return Err(MatrixError::SymmetryRequired("symmetric square"));
                }
                if a.root != b.root {
                    return Err(MatrixError::Invalid(
                        "symmetric square needs the same operand twice".into(),
                    ));
                }
                let root = self.product(a, a, Operand::Symmetric, Operand::Symmetric, true)?;
                Ok(self.wrap(root, true))
            }
            MultiplyVariant::RankK => {
                if a.symmetric {
                    return Err(MatrixError::Invalid(
                        "rank-k construction takes a general operand".into(),
                    ));
                }
                if a.root != b.root {
                    return Err(MatrixError::Invalid(
                        "rank-k construction needs the same operand twice".into(),
                    ));
                }
                let root = self.product(a, a, Operand::Plain, Operand::Transposed, true)?;
                Ok(self.wrap(root, true))
            }
            MultiplyVariant::Approximate(tau) => Ok(self.approximate_multiply(a, b, tau)?.0),
        }
    }

    /// `A²` for symmetric `A`.
    pub fn symmetric_square(&mut self, a: &Matrix) -> Result<Matrix, MatrixError> {
        self.multiply(a, a, MultiplyVariant::SymmetricSquare)
    }

    /// `A · Aᵀ`.
    pub fn rank_k(&mut self, a: &Matrix) -> Result<Matrix, MatrixError> {
        self.multiply(a, a, MultiplyVariant::RankK)
    }

    /// Approximate product and the norm-product bound of every pruned
    /// subproduct.
    pub fn approximate_multiply(
        &mut self,
        a: &Matrix,
        b: &Matrix,
        tau: f64,
    ) -> Result<(Matrix, Vec<f64>), MatrixError> {
        self.check(a)?;
        self.check(b)?;
        if tau.is_nan() || tau < 0.0 {
            return Err(MatrixError::NegativeTolerance(tau));
        }
        if a.symmetric || b.symmetric {
            return Err(MatrixError::Invalid(
                "approximate multiply takes general operands".into(),
            ));
        }
        let root = self.run(names::SPAMM, vec![a.root.into(), b.root.into()], vec![0.0, tau])?;
        let pruned = self
            .last
            .notes
            .iter()
            .filter(|n| n.label == "pruned")
            .map(|n| n.value)
            .collect();
        Ok((self.wrap(root, false), pruned))
    }

    /// Drops the smallest leaf blocks, globally, while the Frobenius norm of
    /// what is dropped stays within `tau`. Returns the removed norm.
    ///
    /// For a symmetric matrix the budget applies to the stored upper
    /// triangle; the implied full matrix may change by up to `√2 · tau`.
    pub fn truncate(&mut self, a: &Matrix, tau: f64) -> Result<(Matrix, f64), MatrixError> {
        self.check(a)?;
        if tau.is_nan() || tau < 0.0 {
            return Err(MatrixError::NegativeTolerance(tau));
        }
        if a.is_nil() || tau == 0.0 {
            return Ok((*a, 0.0));
        }
        let census = self.run(names::CENSUS, vec![a.root.into()], vec![0.0])?;
        let norms: Vec<f64> = if census.is_nil() {
            Vec::new()
        } else {
            self.engine
                .store()
                .get(census)?
                .payload()
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        };
        let total = norms.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tau >= total {
            return Ok((self.wrap(ChunkId::NIL, a.symmetric), total));
        }
        match drop_threshold(&norms, tau) {
            None => Ok((*a, 0.0)),
            Some((threshold, removed)) => {
                let root = self.run(names::TRUNCATE_BELOW, vec![a.root.into()], vec![0.0, threshold])?;
                Ok((self.wrap(root, a.symmetric), removed))
            }
        }
    }

    /// Upper-triangular `Z` with `Zᵀ A Z = I` for symmetric positive definite `A`.
    pub fn inverse_cholesky(&mut self, a: &Matrix) -> Result<Matrix, MatrixError> {
        self.check(a)?;
        if !a.symmetric {
            return Err(MatrixError::SymmetryRequired("inverse Cholesky"));
        }
        let root = self.run(names::INV_CHOL, vec![a.root.into()], vec![0.0, 0.0])?;
        Ok(self.wrap(root, false))
    }

    /// Stored values as a column-major `n × n` array (upper triangle only
    /// for symmetric matrices).
    pub fn to_dense(&self, m: &Matrix) -> Result<Vec<f64>, MatrixError> {
        self.check(m)?;
        quadtree::to_dense(self.engine.store(), &*self.backend, self.geom, m.root)
    }

    /// Stored nonzeros as global `(row, col, value)`.
    pub fn triplets(&self, m: &Matrix) -> Result<Vec<(usize, usize, f64)>, MatrixError> {
        self.check(m)?;
        quadtree::nonzeros(self.engine.store(), &*self.backend, self.geom, m.root)
    }

    pub fn tree_stats(&self, m: &Matrix) -> Result<TreeStats, MatrixError> {
        quadtree::tree_stats(self.engine.store(), &*self.backend, m.root)
    }

    /// Handle-independent serialization of the whole tree.
    pub fn canonical_bytes(&self, m: &Matrix) -> Result<Vec<u8>, MatrixError> {
        quadtree::canonical_bytes(self.engine.store(), m.root)
    }

    /// First normalization violation in the tree, if any.
    pub fn find_unnormalized(&self, m: &Matrix) -> Result<Option<String>, MatrixError> {
        quadtree::find_unnormalized(self.engine.store(), self.geom, m.root)
    }
}
