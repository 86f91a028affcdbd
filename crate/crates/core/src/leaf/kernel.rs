//! Naive column-major block kernels.
//!
//! Every element of `C` accumulates its products in ascending `k`; results
//! are therefore independent of how the caller tiles the computation along
//! `i` and `j`.

/// `c += op(a) · op(b)` for `n × n` column-major blocks.
pub(crate) fn gemm_acc(c: &mut [f64], a: &[f64], ta: bool, b: &[f64], tb: bool, n: usize) {
    debug_assert!(c.len() == n * n && a.len() == n * n && b.len() == n * n);
    match (ta, tb) {
        (false, false) => {
            for j in 0..n {
                let cj = &mut c[j * n..(j + 1) * n];
                for k in 0..n {
                    let bkj = b[k + j * n];
                    if bkj == 0.0 {
                        continue;
                    }
                    let ak = &a[k * n..(k + 1) * n];
                    for (ci, ai) in cj.iter_mut().zip(ak) {
                        *ci += ai * bkj;
                    }
                }
            }
        }
        (false, true) => {
            for k in 0..n {
                let ak = &a[k * n..(k + 1) * n];
                for j in 0..n {
                    let bjk = b[j + k * n];
                    if bjk == 0.0 {
                        continue;
                    }
                    let cj = &mut c[j * n..(j + 1) * n];
                    for (ci, ai) in cj.iter_mut().zip(ak) {
                        *ci += ai * bjk;
                    }
                }
            }
        }
        (true, false) => {
            for j in 0..n {
                let bj = &b[j * n..(j + 1) * n];
                for i in 0..n {
                    let ai = &a[i * n..(i + 1) * n];
                    let mut acc = c[i + j * n];
                    for (x, y) in ai.iter().zip(bj) {
                        if *y != 0.0 {
                            acc += x * y;
                        }
                    }
                    c[i + j * n] = acc;
                }
            }
        }
        (true, true) => {
            for j in 0..n {
                for i in 0..n {
                    let ai = &a[i * n..(i + 1) * n];
                    let mut acc = c[i + j * n];
                    for (k, x) in ai.iter().enumerate() {
                        let y = b[j + k * n];
                        if y != 0.0 {
                            acc += x * y;
                        }
                    }
                    c[i + j * n] = acc;
                }
            }
        }
    }
}

pub(crate) fn frobenius_sq(values: &[f64]) -> f64 {
    values.iter().map(|x| x * x).sum()
}

pub(crate) fn all_zero(values: &[f64]) -> bool {
    values.iter().all(|&x| x == 0.0)
}
