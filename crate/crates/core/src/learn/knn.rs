use super::data::{Samples, Standardizer};
use super::Predictor;
use crate::error::Result;

/// Majority vote among the `k` nearest standardized training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    k: usize,
    scaler: Standardizer,
    train: Samples,
}

impl Knn {
    pub fn fit(data: &Samples, k: usize) -> Result<Knn> {
        data.require_both_classes()?;
        let scaler = Standardizer::fit(data);
        Ok(Knn {
            k: k.clamp(1, data.len()),
            train: scaler.transform(data),
            scaler,
        })
    }
}

impl Predictor for Knn {
    fn predict_row(&self, x: &[f64]) -> bool {
        let mut z = vec![0.0; x.len()];
        self.scaler.apply_row(x, &mut z);
        let mut dist: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        let votes = dist.iter().filter(|(_, i)| self.train.y[*i]).count();
        match (2 * votes).cmp(&self.k) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            // even split: the single nearest neighbour decides
            std::cmp::Ordering::Equal => self.train.y[dist.iter().min_by(|a, b| cmp(a, b)).unwrap().1],
        }
    }
}
