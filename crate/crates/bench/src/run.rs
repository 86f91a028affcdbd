use std::time::Instant;

use quadmat::gen::{flop_count_exact, generate, nnz_exact, GenError};
use quadmat::leaf::LeafConfig;
use quadmat::{MatrixError, MultiplyVariant, Session};
use quadmat_runtime::{RuntimeConfig, RuntimeError, WorkerStats};
use serde::{Deserialize, Serialize};

use crate::{BenchConfig, BenchError};

/// One multiply of one repeat. Per-worker quantities are summarized as
/// min / mean / max over workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub case_id: String,
    pub family: String,
    pub mode: String,
    pub n: usize,
    pub b: usize,
    pub n_workers: usize,
    pub repeat: usize,
    pub wall_seconds: f64,
    pub flops: u64,
    pub efficiency: f64,
    pub bytes_min: u64,
    pub bytes_mean: f64,
    pub bytes_max: u64,
    pub tasks_min: u64,
    pub tasks_mean: f64,
    pub tasks_max: u64,
}

impl BenchRecord {
    /// Label shared by all records of one plotted series.
    pub fn series(&self) -> String {
        format!("{} ({})", self.family, self.mode)
    }
}

fn spread(values: impl Iterator<Item = u64> + Clone) -> (u64, f64, u64) {
    let count = values.clone().count().max(1) as f64;
    let min = values.clone().min().unwrap_or(0);
    let max = values.clone().max().unwrap_or(0);
    let mean = values.map(|v| v as f64).sum::<f64>() / count;
    (min, mean, max)
}

/// Bytes the chunk store may hold when the config does not say.
pub fn default_memory_bytes() -> u64 {
    let available = std::fs::read_to_string("/proc/meminfo").ok().and_then(|text| {
        text.lines()
            .find(|l| l.starts_with("MemAvailable:"))
            .and_then(|l| l.split_whitespace().nth(1))
            .and_then(|kb| kb.parse::<u64>().ok())
            .map(|kb| kb * 1024)
    });
    available.unwrap_or(8 << 30) / 4 * 3
}

/// Rough store footprint of the input plus its square: both are stored
/// as leaves holding about `8 · nnz` bytes, and the square of these band
/// shapes has at most twice the input's nonzeros per column.
fn estimated_bytes(nnz: u128) -> u128 {
    8 * 3 * nnz
}

fn sizing_error(config: &BenchConfig, needed: u128, available: u64) -> BenchError {
    let n = config.case.n;
    // The footprint grows linearly in n for a fixed band.
    let mut suggested = ((n as u128 * available as u128 / needed.max(1)) as usize).min(n / 2);
    if suggested >= 1024 {
        suggested -= suggested % 1024;
    }
    let suggested = suggested.max(1);
    BenchError::Sizing {
        n,
        needed: needed.min(u64::MAX as u128) as u64,
        available,
        suggested_n: suggested,
    }
}

fn is_out_of_memory(err: &GenError) -> bool {
    matches!(
        err,
        GenError::Matrix(MatrixError::Runtime(RuntimeError::OutOfMemory { .. }))
    )
}

/// Generates the case and squares it `repeats` times, each time in a fresh
/// session so caches and counters start cold.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate()?;
    let case = &config.case;
    let flops = flop_count_exact(case)?;
    let flops =
        u64::try_from(flops).map_err(|_| BenchError::Config(format!("{} flops overflow the record", case.id())))?;
    let memory = config.memory_bytes.unwrap_or_else(default_memory_bytes);
    let needed = estimated_bytes(nnz_exact(case)?);
    if needed > memory as u128 {
        return Err(sizing_error(config, needed, memory));
    }
    let leaf = LeafConfig::new(config.leaf_dim, config.block_size).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut records = Vec::with_capacity(config.repeats);
    for repeat in 0..config.repeats {
        let runtime = RuntimeConfig {
            n_workers: config.n_workers,
            cache_capacity_bytes: config.cache_capacity_bytes,
            seed: config.seed.wrapping_add(repeat as u64),
            mode: config.mode.exec(),
            store_capacity_bytes: Some(memory),
            ..RuntimeConfig::default()
        };
        let mut session = Session::with_kind(case.n, leaf, config.leaf_kind, runtime).map_err(GenError::from)?;
        let squared = generate(&mut session, case).and_then(|a| {
            let start = Instant::now();
            session.multiply(&a, &a, MultiplyVariant::Regular)?;
            Ok(start.elapsed().as_secs_f64())
        });
        let wall = match squared {
            Ok(wall) => wall,
            Err(e) if is_out_of_memory(&e) => return Err(sizing_error(config, needed.max(memory as u128 + 1), memory)),
            Err(e) => return Err(e.into()),
        };
        let stats: &[WorkerStats] = &session.last_report().stats;
        let (bytes_min, bytes_mean, bytes_max) = spread(stats.iter().map(|s| s.bytes_received));
        let (tasks_min, tasks_mean, tasks_max) = spread(stats.iter().map(|s| s.tasks_executed));
        records.push(BenchRecord {
            case_id: case.id(),
            family: case.family.name().into(),
            mode: config.mode.name().into(),
            n: case.n,
            b: case.b,
            n_workers: config.n_workers,
            repeat,
            wall_seconds: wall,
            flops,
            efficiency: flops as f64 / wall.max(f64::MIN_POSITIVE) / (config.peak_flops * config.n_workers as f64),
            bytes_min,
            bytes_mean,
            bytes_max,
            tasks_min,
            tasks_mean,
            tasks_max,
        });
    }
    Ok(records)
}
