//! Leaf backends: one strategy object per leaf kind, looked up by name.

use std::collections::BTreeMap;
use std::marker::PhantomData;
use std::sync::Arc;

use quadmat_runtime::TaskRegistry;

use crate::leaf::{BlockSparseLeaf, DenseLeaf, HierarchicalLeaf, LeafConfig, LeafError, LeafKind, LeafMatrix};
use crate::node::encode_leaf_with;
use crate::ops::{install, Geometry};

/// Everything the driver and the task layer need from a leaf type.
pub trait LeafBackend: Send + Sync {
    fn kind(&self) -> LeafKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Rejects leaf shapes this kind cannot represent.
    fn check(&self, cfg: &LeafConfig) -> Result<(), LeafError>;

    fn install_tasks(&self, registry: &mut TaskRegistry, geom: Geometry);

    /// Node payload for a leaf built from local entries, `None` if it is zero.
    fn leaf_node(
        &self,
        cfg: &LeafConfig,
        level: u32,
        entries: &[(usize, usize, f64)],
    ) -> Result<Option<Vec<u8>>, LeafError>;

    /// Node payload for a leaf holding `dense`, stored even when it is zero.
    fn leaf_node_from_dense(&self, cfg: &LeafConfig, level: u32, dense: &DenseLeaf) -> Vec<u8>;

    fn to_dense(&self, payload: &[u8]) -> Result<DenseLeaf, LeafError>;

    fn get(&self, payload: &[u8], row: usize, col: usize) -> Result<f64, LeafError>;

    fn nnz(&self, payload: &[u8]) -> Result<usize, LeafError>;
}

pub struct Backend<L>(PhantomData<fn() -> L>);

impl<L> Default for Backend<L> {
    fn default() -> Self {
        Backend(PhantomData)
    }
}

impl<L: LeafMatrix> LeafBackend for Backend<L> {
    fn kind(&self) -> LeafKind {
        L::KIND
    }

    fn check(&self, cfg: &LeafConfig) -> Result<(), LeafError> {
        cfg.validate()?;
        if L::KIND == LeafKind::Hierarchical {
            HierarchicalLeaf::check_config(cfg)?;
        }
        Ok(())
    }

    fn install_tasks(&self, registry: &mut TaskRegistry, geom: Geometry) {
        install::<L>(registry, geom);
    }

    fn leaf_node(
        &self,
        cfg: &LeafConfig,
        level: u32,
        entries: &[(usize, usize, f64)],
    ) -> Result<Option<Vec<u8>>, LeafError> {
        let leaf = L::from_triplets(cfg, entries)?;
        if leaf.is_zero() {
            return Ok(None);
        }
        Ok(Some(encode_leaf_with(level, |o| leaf.encode(o))))
    }

    fn leaf_node_from_dense(&self, cfg: &LeafConfig, level: u32, dense: &DenseLeaf) -> Vec<u8> {
        let leaf = L::from_dense(cfg, dense);
        encode_leaf_with(level, |o| leaf.encode(o))
    }

    fn to_dense(&self, payload: &[u8]) -> Result<DenseLeaf, LeafError> {
        Ok(L::decode(payload)?.to_dense())
    }

    fn get(&self, payload: &[u8], row: usize, col: usize) -> Result<f64, LeafError> {
        Ok(L::decode(payload)?.get(row, col))
    }

    fn nnz(&self, payload: &[u8]) -> Result<usize, LeafError> {
        Ok(L::decode(payload)?.nnz())
    }
}

/// Leaf backends by name.
#[derive(Clone)]
pub struct LeafRegistry {
    backends: BTreeMap<&'static str, Arc<dyn LeafBackend>>,
}

impl LeafRegistry {
    pub fn empty() -> Self {
        LeafRegistry {
            backends: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, backend: Arc<dyn LeafBackend>) {
        self.backends.insert(backend.name(), backend);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn LeafBackend>, LeafError> {
        self.backends.get(name).cloned().ok_or_else(|| {
            LeafError::InvalidConfig(format!(
                "unknown leaf kind `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.backends.keys().copied()
    }
}

impl Default for LeafRegistry {
    fn default() -> Self {
        let mut r = LeafRegistry::empty();
        r.register(Arc::new(Backend::<DenseLeaf>::default()));
        r.register(Arc::new(Backend::<BlockSparseLeaf>::default()));
        r.register(Arc::new(Backend::<HierarchicalLeaf>::default()));
        r
    }
}

/// Backend for one of the built-in kinds.
pub fn backend_for(kind: LeafKind) -> Arc<dyn LeafBackend> {
    LeafRegistry::default()
        .get(kind.name())
        .expect("built-in kinds are registered")
}
