//! Weak-scaling benchmarks of quadtree matrix squaring.
//!
//! [`run_bench`] generates an experiment matrix, squares it a number of
//! times and records wall time, efficiency against a configured peak, and
//! per-worker data received and tasks executed. Records go to a versioned
//! CSV file ([`records`]) and three SVG panels ([`plot`]).

mod config;
pub mod plot;
pub mod records;
mod run;

use std::path::PathBuf;

use quadmat::gen::GenError;
use thiserror::Error;

pub use config::{
    make_case, BenchConfig, Mode, SweepConfig, DEFAULT_BLOCK_SIZE, DEFAULT_CACHE_BYTES, DEFAULT_LEAF_DIM,
    DEFAULT_PEAK_FLOPS,
};
pub use plot::{emit_plots, Panel};
pub use records::{emit_csv, load_csv};
pub use run::{default_memory_bytes, run_bench, BenchRecord};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("n = {n} needs about {needed} bytes but only {available} are available; try n = {suggested_n} or less")]
    Sizing {
        n: usize,
        needed: u64,
        available: u64,
        suggested_n: usize,
    },
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("write failed: {0}")]
    Write(std::io::Error),
    #[error("csv: {0}")]
    Csv(String),
}
