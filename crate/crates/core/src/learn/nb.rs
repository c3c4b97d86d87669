use super::data::Samples;
use super::Predictor;
use crate::error::Result;

/// Gaussian naive Bayes. Every class variance is inflated by
/// `var_smoothing` times the largest feature variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(data: &Samples, var_smoothing: f64) -> Result<GaussianNb> {
        data.require_both_classes()?;
        let d = data.d;
        let mut count = [0.0f64; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        for (r, &y) in data.rows().zip(&data.y) {
            let c = y as usize;
            count[c] += 1.0;
            for (m, v) in mean[c].iter_mut().zip(r) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c]);
        }
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for (r, &y) in data.rows().zip(&data.y) {
            let c = y as usize;
            for ((s, v), m) in var[c].iter_mut().zip(r).zip(&mean[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for c in 0..2 {
            var[c].iter_mut().for_each(|s| *s /= count[c]);
        }

        let n = data.len() as f64;
        let max_var = (0..d)
            .map(|j| {
                let mu = data.rows().map(|r| r[j]).sum::<f64>() / n;
                data.rows().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let eps = if max_var > 0.0 {
            var_smoothing * max_var
        } else {
            var_smoothing
        };
        let eps = eps.max(f64::MIN_POSITIVE);
        for v in var.iter_mut().flatten() {
            *v += eps;
        }
        Ok(GaussianNb {
            log_prior: [(count[0] / n).ln(), (count[1] / n).ln()],
            mean,
            var,
        })
    }

    fn joint_log_likelihood(&self, c: usize, x: &[f64]) -> f64 {
        let ll: f64 = x
            .iter()
            .zip(&self.mean[c])
            .zip(&self.var[c])
            .map(|((v, m), s)| (2.0 * std::f64::consts::PI * s).ln() + (v - m).powi(2) / s)
            .sum();
        self.log_prior[c] - 0.5 * ll
    }
}

impl Predictor for GaussianNb {
    fn predict_row(&self, x: &[f64]) -> bool {
        self.joint_log_likelihood(1, x) > self.joint_log_likelihood(0, x)
    }
}
