#![allow(dead_code)]

use quadmat::leaf::{LeafConfig, LeafKind};
use quadmat::Session;
use quadmat_runtime::{ExecMode, RuntimeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Triplets = Vec<(usize, usize, f64)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn runtime(workers: usize, mode: ExecMode) -> RuntimeConfig {
    RuntimeConfig {
        n_workers: workers,
        mode,
        ..RuntimeConfig::default()
    }
}

pub fn session(n: usize, leaf: usize, block: usize, kind: LeafKind, workers: usize) -> Session {
    Session::with_kind(
        n,
        LeafConfig::new(leaf, block).unwrap(),
        kind,
        runtime(workers, ExecMode::Simulate),
    )
    .unwrap()
}

/// About `density · n²` entries with values in [-1, 1), possibly repeated.
pub fn random_triplets(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Triplets {
    let count = ((n * n) as f64 * density).ceil() as usize;
    (0..count)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn dense_of(n: usize, entries: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for &(r, c, v) in entries {
        d[r + c * n] += v;
    }
    d
}

pub fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            let bkj = b[k + j * n];
            if bkj != 0.0 {
                for i in 0..n {
                    c[i + j * n] += a[i + k * n] * bkj;
                }
            }
        }
    }
    c
}

pub fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            t[j + i * n] = a[i + j * n];
        }
    }
    t
}

pub fn upper(n: usize, a: &[f64]) -> Vec<f64> {
    let mut u = a.to_vec();
    for j in 0..n {
        for i in j + 1..n {
            u[i + j * n] = 0.0;
        }
    }
    u
}

/// Full matrix from upper-triangle storage.
pub fn symmetrize(n: usize, u: &[f64]) -> Vec<f64> {
    let mut s = upper(n, u);
    for j in 0..n {
        for i in j + 1..n {
            s[i + j * n] = s[j + i * n];
        }
    }
    s
}

pub fn frob(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// ‖a − b‖ / max(‖b‖, tiny).
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    diff_norm(a, b) / frob(b).max(f64::MIN_POSITIVE)
}
