//! Local-maximum peak detection with prominence and spacing constraints.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    pub min_distance_s: f64,
    /// Absolute threshold, or a multiple of the window's standard deviation
    /// when `relative` is set.
    pub min_prominence: f64,
    #[serde(default)]
    pub relative: bool,
}

/// Strict local maxima. A flat top counts once, at its middle sample.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        i += 1;
    }
    out
}

/// Height of a peak above the higher of the two lowest points reached
/// before the signal climbs above the peak on either side.
pub fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Peaks of `x` sampled at `rate` Hz. Candidates below `min_prominence` are
/// discarded first; spacing conflicts are then resolved in favour of the
/// higher peak, ties going to the earlier index.
pub fn detect_peaks(x: &[f64], rate: f64, min_distance_s: f64, min_prominence: f64) -> Vec<Peak> {
    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&i| prominence(x, i) >= min_prominence)
        .collect();
    let distance = (min_distance_s * rate).ceil().max(1.0) as usize;

    let mut order = candidates.clone();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept = BTreeSet::new();
    for i in order {
        let left_ok = kept.range(..=i).next_back().is_none_or(|&k| i - k >= distance);
        let right_ok = kept.range(i..).next().is_none_or(|&k| k - i >= distance);
        if left_ok && right_ok {
            kept.insert(i);
        }
    }
    kept.into_iter()
        .map(|index| Peak {
            index,
            amplitude: x[index],
        })
        .collect()
}

pub fn detect_with(x: &[f64], rate: f64, params: &PeakParams) -> Vec<Peak> {
    let threshold = if params.relative {
        params.min_prominence * std_dev(x)
    } else {
        params.min_prominence
    };
    detect_peaks(x, rate, params.min_distance_s, threshold)
}

/// Population standard deviation; zero for fewer than two samples.
pub(crate) fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
