//! Sparse quadtree matrices stored as immutable chunks.
//!
//! A matrix is a tree whose nodes are chunks: a nil handle stands for an
//! all-zero submatrix, a leaf holds a small matrix of one [`leaf::LeafKind`],
//! and a branch holds four child handles. Operations run as tasks on a
//! [`quadmat_runtime::Engine`] through a [`Session`].

pub mod backend;
mod error;
pub mod gen;
pub mod leaf;
pub mod mtx;
pub mod node;
pub mod ops;
mod params;
pub mod quadtree;
mod session;

pub use backend::{backend_for, Backend, LeafBackend, LeafRegistry};
pub use error::MatrixError;
pub use ops::Geometry;
pub use params::MatrixParams;
pub use quadtree::{OwnerPolicy, Pattern, TreeStats};
pub use session::{Matrix, MultiplyVariant, Session};
