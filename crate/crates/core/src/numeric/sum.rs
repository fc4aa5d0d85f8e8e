//! Fixed-order pairwise reductions.
//!
//! The summation tree depends only on the slice length, so results are
//! bitwise reproducible no matter how the callers schedule work.

const LEAF: usize = 64;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Pairwise sum of `map(i)` over `0..len`.
pub fn pairwise_sum_by(len: usize, map: &impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, hi: usize, map: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= LEAF {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += map(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, map) + rec(mid, hi, map)
    }
    rec(0, len, map)
}

pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), &|i| a[i] * b[i])
}
