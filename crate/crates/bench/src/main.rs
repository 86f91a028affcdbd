use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use quadmat::gen::{flop_count_exact, ExperimentCase, Family};
use quadmat::leaf::LeafKind;
use quadmat_bench::{
    emit_csv, emit_plots, make_case, run_bench, BenchConfig, BenchRecord, Mode, SweepConfig, DEFAULT_BLOCK_SIZE,
    DEFAULT_CACHE_BYTES, DEFAULT_LEAF_DIM, DEFAULT_PEAK_FLOPS,
};

#[derive(Parser)]
#[command(name = "bench", about = "Weak-scaling benchmarks of quadtree sparse matrix squaring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Square one experiment matrix and write records.csv plus plots.
    Run(RunArgs),
    /// Run every case and worker count of a TOML sweep file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out` from the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exact flop count of squaring a case.
    Flops(CaseArgs),
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long, value_parser = parse_family)]
    case: Family,
    #[arg(long)]
    n: usize,
    /// Half bandwidth; defaults to n / 32.
    #[arg(long)]
    b: Option<usize>,
    /// Block size for the block families; solved for twice the banded work if omitted.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CaseArgs {
    fn build(&self) -> Result<ExperimentCase> {
        Ok(make_case(self.case, self.n, self.b, self.s, self.seed)?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "simulate", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_LEAF_DIM)]
    leaf_dim: usize,
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    block_size: usize,
    #[arg(long, default_value = "block-sparse", value_parser = parse_kind)]
    leaf_kind: LeafKind,
    #[arg(long, default_value_t = DEFAULT_CACHE_BYTES)]
    cache_bytes: u64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Per-worker peak in flop/s, the efficiency denominator.
    #[arg(long, default_value_t = DEFAULT_PEAK_FLOPS)]
    peak_flops: f64,
    /// Chunk store limit; defaults to three quarters of available memory.
    #[arg(long)]
    memory_bytes: Option<u64>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_kind(s: &str) -> Result<LeafKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn write_outputs(records: &[BenchRecord], out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv = out.join("records.csv");
    emit_csv(records, &csv)?;
    let plots = emit_plots(records, out)?;
    println!("wrote {}", csv.display());
    for p in plots {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(records: &[BenchRecord]) {
    println!(
        "{:<44} {:>8} {:>6} {:>10} {:>10} {:>14}",
        "case", "mode", "P", "wall s", "eff", "bytes/worker"
    );
    for r in records {
        println!(
            "{:<44} {:>8} {:>6} {:>10.4} {:>10.4} {:>14.0}",
            r.case_id, r.mode, r.n_workers, r.wall_seconds, r.efficiency, r.bytes_mean
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Flops(args) => {
            let case = args.build()?;
            println!("{}", flop_count_exact(&case)?);
        }
        Command::Run(args) => {
            let config = BenchConfig {
                leaf_dim: args.leaf_dim,
                block_size: args.block_size,
                leaf_kind: args.leaf_kind,
                cache_capacity_bytes: args.cache_bytes,
                repeats: args.repeats,
                seed: args.case.seed,
                peak_flops: args.peak_flops,
                memory_bytes: args.memory_bytes,
                ..BenchConfig::new(args.case.build()?, args.workers, args.mode)
            };
            let records = run_bench(&config)?;
            print_summary(&records);
            write_outputs(&records, &args.out)?;
        }
        Command::Sweep { config, out } => {
            let sweep = SweepConfig::load(&config)?;
            let out = out
                .or_else(|| sweep.out.clone())
                .unwrap_or_else(|| PathBuf::from("bench-out"));
            let mut records = Vec::new();
            for c in sweep.expand()? {
                eprintln!("running {} on {} workers", c.case.id(), c.n_workers);
                records.extend(run_bench(&c)?);
            }
            print_summary(&records);
            write_outputs(&records, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
