//! Deterministic summation and sample statistics.

#[allow(unused_imports)]
use num_traits::Float;

/// Pairwise (cascade) sum: deterministic order, O(log n) error growth.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and its standard error (sd / sqrt(n)).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 2 {
        return (mean(xs), 0.0);
    }
    let m = mean(xs);
    let mut devs = alloc::vec::Vec::with_capacity(n);
    for &x in xs {
        devs.push((x - m) * (x - m));
    }
    let var = pairwise_sum(&devs) / (n as f64 - 1.0);
    (m, (var / n as f64).sqrt())
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let (_, se) = mean_and_se(xs);
    se * (xs.len() as f64).sqrt()
}
