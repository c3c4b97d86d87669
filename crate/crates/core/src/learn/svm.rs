use rand::seq::SliceRandom;

use super::data::{Samples, Standardizer};
use super::Predictor;
use crate::error::Result;
use crate::rng::Rng;

const MAX_EPOCHS: usize = 1000;
const TOLERANCE: f64 = 1e-2;

/// Hinge-loss linear SVM, bias folded in as a constant feature, trained
/// by dual coordinate descent on standardized inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    scaler: Standardizer,
    w: Vec<f64>,
    bias: f64,
}

impl LinearSvm {
    pub fn fit(data: &Samples, c: f64, rng: &mut Rng) -> Result<LinearSvm> {
        data.require_both_classes()?;
        let scaler = Standardizer::fit(data);
        let z = scaler.transform(data);
        let n = z.len();
        let sign: Vec<f64> = z.y.iter().map(|&y| if y { 1.0 } else { -1.0 }).collect();
        // the bias rides along as a constant feature equal to 1
        let q: Vec<f64> = z.rows().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).collect();
        let mut alpha = vec![0.0; n];
        let mut w = vec![0.0; z.d];
        let mut bias = 0.0;
        let mut order: Vec<usize> = (0..n).collect();

        for _ in 0..MAX_EPOCHS {
            order.shuffle(rng);
            let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
            for &i in &order {
                let r = z.row(i);
                let g = sign[i] * (r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + bias) - 1.0;
                let pg = if alpha[i] == 0.0 {
                    g.min(0.0)
                } else if alpha[i] == c {
                    g.max(0.0)
                } else {
                    g
                };
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);
                if pg != 0.0 {
                    let old = alpha[i];
                    alpha[i] = (old - g / q[i]).clamp(0.0, c);
                    let step = (alpha[i] - old) * sign[i];
                    for (wj, v) in w.iter_mut().zip(r) {
                        *wj += step * v;
                    }
                    bias += step;
                }
            }
            if pg_max - pg_min < TOLERANCE {
                break;
            }
        }
        Ok(LinearSvm { scaler, w, bias })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; x.len()];
        self.scaler.apply_row(x, &mut z);
        z.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }
}

impl Predictor for LinearSvm {
    fn predict_row(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }
}
