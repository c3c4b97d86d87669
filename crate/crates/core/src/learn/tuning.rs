use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::Samples;
use super::metrics::{balanced_accuracy, Confusion};
use super::Learner;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for, Rng};

pub const INNER_FOLDS: usize = 5;

/// Assigns each row to one of `k` folds so that both classes are spread
/// round-robin over the folds after a seeded shuffle.
pub fn stratified_folds(y: &[bool], k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub index: usize,
    pub param: f64,
    /// Mean inner BAC per grid point; `None` if no fold was scorable.
    pub scores: Vec<Option<f64>>,
}

/// Picks the grid point with the highest mean BAC under stratified
/// cross-validation on `data`. Earlier grid points win ties.
pub fn grid_search<L: Learner + ?Sized>(learner: &L, grid: &[f64], data: &Samples, seed: u64) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: empty tuning grid", learner.name())));
    }
    data.require_both_classes()?;
    let (neg, pos) = data.class_counts();
    let k = INNER_FOLDS.min(neg).min(pos);
    if grid.len() == 1 || k < 2 {
        return Ok(GridResult {
            index: 0,
            param: grid[0],
            scores: vec![None; grid.len()],
        });
    }
    let fold = stratified_folds(&data.y, k, &mut rng_for(seed, &[u64::MAX]));
    let splits: Vec<(Samples, Samples)> = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| fold[i] == f);
            (data.subset(&train), data.subset(&test))
        })
        .collect();

    let mut scores = Vec::with_capacity(grid.len());
    for (g, &param) in grid.iter().enumerate() {
        let mut bacs = Vec::with_capacity(k);
        for (f, (train, test)) in splits.iter().enumerate() {
            let model = learner.fit(param, train, derive_seed(seed, &[g as u64, f as u64]))?;
            let c = Confusion::from_predictions(&test.y, &model.predict(test));
            bacs.extend(balanced_accuracy(&c));
        }
        scores.push((!bacs.is_empty()).then(|| bacs.iter().sum::<f64>() / bacs.len() as f64));
    }
    let mut index = 0;
    let mut best = f64::NEG_INFINITY;
    for (g, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if s > best {
                best = s;
                index = g;
            }
        }
    }
    Ok(GridResult {
        index,
        param: grid[index],
        scores,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::learn::Family;

    #[test]
    fn folds_are_stratified() {
        let y: Vec<bool> = (0..27).map(|i| i % 3 == 0).collect();
        let fold = stratified_folds(&y, 5, &mut Rng::seed_from_u64(0));
        for f in 0..5 {
            let pos = (0..27).filter(|&i| fold[i] == f && y[i]).count();
            let all = (0..27).filter(|&i| fold[i] == f).count();
            assert!((1..=2).contains(&pos));
            assert!((5..=6).contains(&all));
        }
    }

    #[test]
    fn separable_data_keeps_first_grid_point() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![s * (2.0 + (i % 7) as f64), ((i * 13) % 5) as f64]
            })
            .collect();
        let y = rows.iter().map(|r| r[0] > 0.0).collect();
        let data = Samples::from_rows(&rows, y).unwrap();
        let r = grid_search(&Family::Knn, &[1.0, 5.0, 9.0, 13.0, 17.0], &data, 3).unwrap();
        assert!(r.scores.iter().all(|s| *s == Some(1.0)));
        assert_eq!(r.index, 0);
        assert_eq!(r.param, 1.0);
    }

    #[test]
    fn single_point_grid() {
        let data = crate::learn::tests::blobs(30, 2, 1.0, 0);
        let r = grid_search(&Family::Nb, &[1e-3], &data, 0).unwrap();
        assert_eq!((r.index, r.param), (0, 1e-3));
    }
}
