//! Kendall rank correlation with tie correction.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub tau: f64,
    /// Two-sided, normal approximation.
    pub p_value: f64,
    pub n: usize,
}

/// Sizes of runs of equal values in a sorted slice.
fn tie_groups(sorted: &[f64]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            out.push((j - i) as u64);
        }
        i = j;
    }
    out
}

/// Merge sort returning the number of inversions.
fn count_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_swaps(&mut v[..mid], buf) + count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..]);
    v.copy_from_slice(buf);
    swaps
}

/// Tau-b in O(n log n), with the two-sided p-value of the tie-adjusted
/// normal approximation.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {n} vs {}", y.len())));
    }
    if n < 2 {
        return Err(Error::CorrelationUndefined(format!("need at least 2 pairs, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value".into()));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let pairs_of = |t: u64| t * (t - 1) / 2;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let x_ties = tie_groups(&xs);
    // pairs tied in both coordinates
    let mut joint = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pairs[j] == pairs[i] {
            j += 1;
        }
        joint += pairs_of((j - i) as u64);
        i = j;
    }
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = count_swaps(&mut ys, &mut Vec::with_capacity(n));
    let y_ties = tie_groups(&ys);

    let n0 = pairs_of(n as u64);
    let n1: u64 = x_ties.iter().map(|&t| pairs_of(t)).sum();
    let n2: u64 = y_ties.iter().map(|&t| pairs_of(t)).sum();
    if n1 == n0 || n2 == n0 {
        return Err(Error::CorrelationUndefined("all values tied".into()));
    }
    let s = n0 as i64 - n1 as i64 - n2 as i64 + joint as i64 - 2 * swaps as i64;
    let tau = s as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();

    let nf = n as f64;
    let v = |ties: &[u64]| ties.iter().map(|&t| (t * (t - 1) * (2 * t + 5)) as f64).sum::<f64>();
    let sum1 = |ties: &[u64]| ties.iter().map(|&t| (t * (t - 1)) as f64).sum::<f64>();
    let sum2 = |ties: &[u64]| ties.iter().map(|&t| (t * (t - 1) * (t - 2)) as f64).sum::<f64>();
    let mut var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - v(&x_ties) - v(&y_ties)) / 18.0
        + sum1(&x_ties) * sum1(&y_ties) / (2.0 * nf * (nf - 1.0));
    if n > 2 {
        var += sum2(&x_ties) * sum2(&y_ties) / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    let z = s as f64 / var.sqrt();
    let p_value = erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(CorrelationResult {
        tau: tau.clamp(-1.0, 1.0),
        p_value,
        n,
    })
}
