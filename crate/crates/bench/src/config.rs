use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use quadmat::gen::{solve_block_size, ExperimentCase, Family};
use quadmat::leaf::LeafKind;
use quadmat_runtime::ExecMode;
use serde::Deserialize;

use crate::BenchError;

pub const DEFAULT_LEAF_DIM: usize = 256;
pub const DEFAULT_BLOCK_SIZE: usize = 64;
pub const DEFAULT_CACHE_BYTES: u64 = 64 << 20;
/// Per-worker peak used for efficiency, in flop/s.
pub const DEFAULT_PEAK_FLOPS: f64 = 5e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Shared,
    Simulate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Shared => "shared",
            Mode::Simulate => "simulate",
        }
    }

    pub fn exec(self) -> ExecMode {
        match self {
            Mode::Shared => ExecMode::Shared,
            Mode::Simulate => ExecMode::Simulate,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shared" | "shared-memory" => Ok(Mode::Shared),
            "simulate" => Ok(Mode::Simulate),
            _ => Err(BenchError::Config(format!(
                "unknown mode `{s}` (expected shared or simulate)"
            ))),
        }
    }
}

/// Builds a case, filling in defaults: `b = n / 32`, and for the block
/// families the block size that doubles the banded flop count.
pub fn make_case(
    family: Family,
    n: usize,
    b: Option<usize>,
    s: Option<usize>,
    seed: u64,
) -> Result<ExperimentCase, BenchError> {
    if n == 0 {
        return Err(BenchError::Config("n must be positive".into()));
    }
    let b = b.unwrap_or(n / 32);
    let solved = |family| solve_block_size(family, n, b, 2.0);
    Ok(match family {
        Family::Banded => ExperimentCase::banded(n, b),
        Family::GrowingBlock => {
            let s = match s {
                Some(s) => s,
                None => solved(family)?.0,
            };
            ExperimentCase::growing_block(n, b, s)
        }
        Family::RandomBlocks => {
            let (s0, blocks) = solved(family)?;
            ExperimentCase::random_blocks(n, b, s.unwrap_or(s0), blocks, seed)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub case: ExperimentCase,
    pub n_workers: usize,
    pub leaf_dim: usize,
    pub block_size: usize,
    pub leaf_kind: LeafKind,
    pub cache_capacity_bytes: u64,
    pub mode: Mode,
    pub repeats: usize,
    pub seed: u64,
    pub peak_flops: f64,
    /// Chunk store limit; `None` means a limit derived from available memory.
    pub memory_bytes: Option<u64>,
}

impl BenchConfig {
    pub fn new(case: ExperimentCase, n_workers: usize, mode: Mode) -> Self {
        BenchConfig {
            case,
            n_workers,
            leaf_dim: DEFAULT_LEAF_DIM,
            block_size: DEFAULT_BLOCK_SIZE,
            leaf_kind: LeafKind::BlockSparse,
            cache_capacity_bytes: DEFAULT_CACHE_BYTES,
            mode,
            repeats: 1,
            seed: 0,
            peak_flops: DEFAULT_PEAK_FLOPS,
            memory_bytes: None,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let positive = [
            ("n", self.case.n),
            ("workers", self.n_workers),
            ("leaf-dim", self.leaf_dim),
            ("block-size", self.block_size),
            ("repeats", self.repeats),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(BenchError::Config(format!("{name} must be positive")));
            }
        }
        if self.cache_capacity_bytes == 0 {
            return Err(BenchError::Config("cache-bytes must be positive".into()));
        }
        if !(self.peak_flops > 0.0 && self.peak_flops.is_finite()) {
            return Err(BenchError::Config("peak-flops must be positive".into()));
        }
        if self.memory_bytes == Some(0) {
            return Err(BenchError::Config("memory-bytes must be positive".into()));
        }
        Ok(())
    }
}

/// A weak-scaling sweep read from a TOML key-value file:
///
/// ```toml
/// cases = ["banded", "growing-block", "random-blocks"]
/// workers = [1, 2, 4, 8]
/// n_per_worker = 4096
/// b = 64
/// mode = "simulate"
/// repeats = 4
/// ```
///
/// Each case runs at `n = n_per_worker · P` for every worker count `P`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub cases: Vec<String>,
    pub workers: Vec<usize>,
    pub n_per_worker: usize,
    pub b: Option<usize>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_leaf_dim")]
    pub leaf_dim: usize,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    #[serde(default = "default_leaf_kind")]
    pub leaf_kind: String,
    #[serde(default = "default_cache_bytes")]
    pub cache_bytes: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_peak")]
    pub peak_flops: f64,
    pub memory_bytes: Option<u64>,
    pub out: Option<PathBuf>,
}

fn default_mode() -> Mode {
    Mode::Simulate
}
fn default_leaf_dim() -> usize {
    DEFAULT_LEAF_DIM
}
fn default_block_size() -> usize {
    DEFAULT_BLOCK_SIZE
}
fn default_leaf_kind() -> String {
    LeafKind::BlockSparse.name().into()
}
fn default_cache_bytes() -> u64 {
    DEFAULT_CACHE_BYTES
}
fn default_repeats() -> usize {
    1
}
fn default_peak() -> f64 {
    DEFAULT_PEAK_FLOPS
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// One config per (case, worker count), cases outermost.
    pub fn expand(&self) -> Result<Vec<BenchConfig>, BenchError> {
        if self.cases.is_empty() || self.workers.is_empty() {
            return Err(BenchError::Config(
                "a sweep needs at least one case and one worker count".into(),
            ));
        }
        let leaf_kind: LeafKind = self.leaf_kind.parse().map_err(|e| BenchError::Config(format!("{e}")))?;
        let mut out = Vec::new();
        for name in &self.cases {
            let family: Family = name.parse().map_err(|e| BenchError::Config(format!("{e}")))?;
            for &p in &self.workers {
                let n = self.n_per_worker * p;
                let b = self.b.or(Some(self.n_per_worker / 32));
                let config = BenchConfig {
                    leaf_dim: self.leaf_dim,
                    block_size: self.block_size,
                    leaf_kind,
                    cache_capacity_bytes: self.cache_bytes,
                    repeats: self.repeats,
                    seed: self.seed,
                    peak_flops: self.peak_flops,
                    memory_bytes: self.memory_bytes,
                    ..BenchConfig::new(make_case(family, n, b, None, self.seed)?, p, self.mode)
                };
                config.validate()?;
                out.push(config);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_expands_cases_over_workers() {
        let sweep = SweepConfig::parse(
            r#"
            cases = ["banded", "growing_block"]
            workers = [1, 2, 4]
            n_per_worker = 2048
            b = 16
            repeats = 2
            "#,
        )
        .unwrap();
        let configs = sweep.expand().unwrap();
        assert_eq!(configs.len(), 6);
        assert_eq!(configs[2].case.n, 8192);
        assert_eq!(configs[2].n_workers, 4);
        assert_eq!(configs[3].case.family, Family::GrowingBlock);
        assert!(configs
            .iter()
            .all(|c| c.case.b == 16 && c.repeats == 2 && c.mode == Mode::Simulate));
    }

    #[test]
    fn bad_sweeps_are_rejected() {
        assert!(SweepConfig::parse("cases = [\"banded\"]\nworkers = [1]\nn_per_worker = 64\nbogus = 1").is_err());
        let sweep = SweepConfig::parse("cases = [\"dense\"]\nworkers = [1]\nn_per_worker = 64").unwrap();
        assert!(sweep.expand().is_err());
        let sweep = SweepConfig::parse("cases = [\"banded\"]\nworkers = [1]\nn_per_worker = 64\nrepeats = 0").unwrap();
        assert!(sweep.expand().is_err());
    }

    #[test]
    fn block_families_get_a_solved_block() {
        let case = make_case(Family::GrowingBlock, 4096, Some(32), None, 0).unwrap();
        assert!(case.s > 0);
        assert_eq!(make_case(Family::Banded, 4096, None, None, 0).unwrap().b, 128);
    }
}
