//! Random forest and boosted shallow trees.

use rand::Rng as _;

use super::data::Samples;
use super::tree::{Binner, Tree, TreeParams, MAX_BINS};
use super::Predictor;
use crate::error::Result;
use crate::rng::Rng;

pub const FOREST_TREES: usize = 100;
pub const BOOST_DEPTH: usize = 2;

/// Bagged trees, each split drawing `mtry` candidate features.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(data: &Samples, mtry: usize, n_trees: usize, rng: &mut Rng) -> Result<Forest> {
        data.require_both_classes()?;
        let binner = Binner::fit(data, MAX_BINS);
        let codes = binner.codes(data);
        let params = TreeParams {
            mtry: Some(mtry.clamp(1, data.d)),
            ..TreeParams::default()
        };
        let n = data.len();
        let trees = (0..n_trees)
            .map(|_| {
                let mut counts = vec![0.0; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1.0;
                }
                Tree::grow(data, &codes, &binner, &counts, &params, Some(&mut *rng))
            })
            .collect();
        Ok(Forest { trees })
    }
}

impl Predictor for Forest {
    fn predict_row(&self, x: &[f64]) -> bool {
        let p: f64 = self.trees.iter().map(|t| t.p_code(x)).sum::<f64>() / self.trees.len() as f64;
        p > 0.5
    }
}

/// Discrete AdaBoost over depth-limited trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Boost {
    stages: Vec<(f64, Tree)>,
}

impl Boost {
    pub fn fit(data: &Samples, trials: usize) -> Result<Boost> {
        data.require_both_classes()?;
        let binner = Binner::fit(data, MAX_BINS);
        let codes = binner.codes(data);
        let params = TreeParams {
            max_depth: Some(BOOST_DEPTH),
            ..TreeParams::default()
        };
        let n = data.len() as f64;
        // weights are kept summing to n so the split threshold stays meaningful
        let mut w = vec![1.0; data.len()];
        let mut stages = Vec::new();
        for _ in 0..trials.max(1) {
            let tree = Tree::grow(data, &codes, &binner, &w, &params, None);
            let wrong: Vec<bool> = data
                .rows()
                .zip(&data.y)
                .map(|(r, &y)| tree.predict_row(r) != y)
                .collect();
            let err = wrong.iter().zip(&w).filter(|(m, _)| **m).map(|(_, w)| w).sum::<f64>() / n;
            if err <= 1e-10 {
                stages.push((1.0, tree));
                break;
            }
            if err >= 0.5 {
                if stages.is_empty() {
                    stages.push((1.0, tree));
                }
                break;
            }
            let alpha = ((1.0 - err) / err).ln();
            for (wi, m) in w.iter_mut().zip(&wrong) {
                if *m {
                    *wi *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v *= n / s);
            stages.push((alpha, tree));
        }
        Ok(Boost { stages })
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }
}

impl Predictor for Boost {
    fn predict_row(&self, x: &[f64]) -> bool {
        let score: f64 = self
            .stages
            .iter()
            .map(|(a, t)| if t.predict_row(x) { *a } else { -*a })
            .sum();
        score > 0.0
    }
}
