//! Small dense linear algebra: everything here operates on row-major slices
//! of order n <= a few dozen, which covers regression normal equations,
//! volatility matrices, and regime transition matrices.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// a (r x c) times b (c) into out (r).
pub fn mat_vec(a: &[f64], rows: usize, cols: usize, b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(b.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for r in 0..rows {
        let mut acc = 0.0;
        for c in 0..cols {
            acc += a[r * cols + c] * b[c];
        }
        out[r] = acc;
    }
}

/// sigma (n x n) -> sigma sigma' (n x n).
pub fn gram(sigma: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += sigma[i * n + k] * sigma[j * n + k];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// In-place Cholesky factorization of a symmetric positive definite matrix
/// (lower triangle). Returns the smallest and largest pivot encountered.
pub fn cholesky(a: &mut [f64], n: usize) -> Result<(f64, f64), String> {
    let mut min_piv = f64::INFINITY;
    let mut max_piv = 0.0f64;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(alloc::format!("non-positive pivot {d} at column {j}"));
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        min_piv = min_piv.min(d);
        max_piv = max_piv.max(d);
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    Ok((min_piv, max_piv))
}

/// Solves L L' x = b in place given the Cholesky factor from [`cholesky`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves a general square system by Gaussian elimination with partial
/// pivoting; `a` and `b` are consumed. Returns x.
pub fn solve_general(mut a: Vec<f64>, n: usize, mut b: Vec<f64>) -> Result<Vec<f64>, String> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in (col + 1)..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(alloc::format!("singular matrix at column {col}"));
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for c in (i + 1)..n {
            s -= a[i * n + c] * b[c];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(b)
}

/// Eigenvalue range of a symmetric matrix via cyclic Jacobi rotations.
/// Returns (min eigenvalue, max eigenvalue).
pub fn sym_eigen_range(a_in: &[f64], n: usize) -> (f64, f64) {
    let mut a = a_in.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(a[i * n + i]);
        hi = hi.max(a[i * n + i]);
    }
    (lo, hi)
}
