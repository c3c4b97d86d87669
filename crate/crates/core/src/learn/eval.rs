//! Leave-one-participant-out and repeated hold-out evaluation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Samples;
use super::metrics::{balanced_accuracy, macro_metrics, median, Confusion, MacroMetrics};
use super::tuning::grid_search;
use super::{ClassifierSpec, Family, Learner};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, SignalConfig};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Loro,
    Holdout,
}

impl Protocol {
    pub fn key(self) -> &'static str {
        match self {
            Protocol::Loro => "loro",
            Protocol::Holdout => "holdout",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Protocol::Loro => "LORO",
            Protocol::Holdout => "Hold-out",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().replace(['-', '_'], "").as_str() {
            "loro" => Ok(Protocol::Loro),
            "holdout" => Ok(Protocol::Holdout),
            _ => Err(Error::InvalidArgument(format!("unknown protocol `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub seed: u64,
    /// Hold-out repetitions.
    pub repeats: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { seed: 0, repeats: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Participants whose rows were handed to model selection and training.
    pub train_participants: Vec<String>,
    pub test_participants: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    /// Tuning parameter chosen by the inner grid search.
    pub param: f64,
    pub confusion: Confusion,
    /// `None` when the test rows hold a single class.
    pub bac: Option<f64>,
    pub metrics: Option<MacroMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: SignalConfig,
    pub family: String,
    pub grid: Vec<f64>,
    pub folds: Vec<FoldResult>,
    pub median_bac: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl CellResult {
    fn new(config: SignalConfig, family: String, grid: Vec<f64>, folds: Vec<FoldResult>) -> CellResult {
        let bacs: Vec<f64> = folds.iter().filter_map(|f| f.bac).collect();
        let metrics: Vec<MacroMetrics> = folds.iter().filter_map(|f| f.metrics).collect();
        let mean = |get: fn(&MacroMetrics) -> f64| {
            (!metrics.is_empty()).then(|| metrics.iter().map(get).sum::<f64>() / metrics.len() as f64)
        };
        CellResult {
            config,
            family,
            grid,
            median_bac: median(&bacs),
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            folds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub participants: Vec<String>,
    pub cells: Vec<CellResult>,
}

impl ProtocolReport {
    pub fn cell(&self, config: SignalConfig, family: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.config == config && c.family == family)
    }
}

/// Training and test sizes of a hold-out split: 20:8 scaled to `n`,
/// rounding the training side up.
pub fn holdout_split_sizes(n: usize) -> (usize, usize) {
    let train = (n * 20).div_ceil(28);
    (train, n - train)
}

type Split = (Vec<String>, Vec<String>);

fn participants(m: &FeatureMatrix) -> Vec<String> {
    m.rows
        .iter()
        .map(|r| r.participant_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn make_splits(protocol: Protocol, ids: &[String], opts: &EvalOptions) -> Result<Vec<Split>> {
    match protocol {
        Protocol::Loro => {
            if ids.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "leave-one-participant-out needs at least 2 participants, got {}",
                    ids.len()
                )));
            }
            Ok(ids
                .iter()
                .map(|held| {
                    let train = ids.iter().filter(|p| *p != held).cloned().collect();
                    (train, vec![held.clone()])
                })
                .collect())
        }
        Protocol::Holdout => {
            if ids.len() < 9 {
                return Err(Error::InvalidArgument(format!(
                    "hold-out needs at least 9 participants, got {}",
                    ids.len()
                )));
            }
            let (n_train, _) = holdout_split_sizes(ids.len());
            Ok((0..opts.repeats)
                .map(|r| {
                    let mut shuffled = ids.to_vec();
                    shuffled.shuffle(&mut rng_for(opts.seed, &[0x401d, r as u64]));
                    let mut train = shuffled[..n_train].to_vec();
                    let mut test = shuffled[n_train..].to_vec();
                    train.sort();
                    test.sort();
                    (train, test)
                })
                .collect())
        }
    }
}

fn run_fold<L: Learner + ?Sized>(
    learner: &L,
    grid: &[f64],
    data: &Samples,
    ids: &[&str],
    fold: usize,
    split: &Split,
    seed: u64,
) -> Result<FoldResult> {
    let test_set: BTreeSet<&str> = split.1.iter().map(String::as_str).collect();
    let train_set: BTreeSet<&str> = split.0.iter().map(String::as_str).collect();
    let train_idx: Vec<usize> = (0..ids.len()).filter(|&i| train_set.contains(ids[i])).collect();
    let test_idx: Vec<usize> = (0..ids.len()).filter(|&i| test_set.contains(ids[i])).collect();
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let seen = |idx: &[usize]| {
        idx.iter()
            .map(|&i| ids[i].to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect::<Vec<_>>()
    };

    let chosen = grid_search(learner, grid, &train, seed)?;
    let model = learner.fit(chosen.param, &train, derive_seed(seed, &[u64::MAX - 1]))?;
    let confusion = Confusion::from_predictions(&test.y, &model.predict(&test));
    Ok(FoldResult {
        fold,
        train_participants: seen(&train_idx),
        test_participants: seen(&test_idx),
        n_train: train.len(),
        n_test: test.len(),
        param: chosen.param,
        confusion,
        bac: balanced_accuracy(&confusion),
        metrics: macro_metrics(&confusion),
    })
}

struct Prepared {
    samples: Samples,
    ids: Vec<String>,
    splits: Vec<Split>,
}

fn prepare(matrix: &FeatureMatrix, protocol: Protocol, opts: &EvalOptions) -> Result<Prepared> {
    let ids = participants(matrix);
    let splits = make_splits(protocol, &ids, opts)?;
    Ok(Prepared {
        samples: Samples::from_matrix(matrix)?,
        ids: matrix.rows.iter().map(|r| r.participant_id.clone()).collect(),
        splits,
    })
}

/// Evaluates one learner on one matrix. `seed_path` identifies the cell so
/// that fold seeds stay independent of scheduling.
pub fn run_protocol<L: Learner + ?Sized>(
    learner: &L,
    grid: &[f64],
    matrix: &FeatureMatrix,
    protocol: Protocol,
    opts: &EvalOptions,
    seed_path: &[u64],
) -> Result<CellResult> {
    let p = prepare(matrix, protocol, opts)?;
    let ids: Vec<&str> = p.ids.iter().map(String::as_str).collect();
    let folds = p
        .splits
        .par_iter()
        .enumerate()
        .map(|(f, split)| {
            let mut path = seed_path.to_vec();
            path.push(f as u64);
            run_fold(learner, grid, &p.samples, &ids, f, split, derive_seed(opts.seed, &path))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellResult::new(matrix.config, learner.name(), grid.to_vec(), folds))
}

fn config_index(c: SignalConfig) -> u64 {
    SignalConfig::ALL.iter().position(|x| *x == c).unwrap_or(0) as u64
}

fn family_index(f: Family) -> u64 {
    Family::ALL.iter().position(|x| *x == f).unwrap_or(0) as u64
}

/// One fold per participant.
pub fn loro_cv(matrix: &FeatureMatrix, spec: &ClassifierSpec) -> Result<CellResult> {
    let opts = EvalOptions {
        seed: spec.seed,
        ..EvalOptions::default()
    };
    let path = [config_index(matrix.config), family_index(spec.family)];
    run_protocol(&spec.family, &spec.grid, matrix, Protocol::Loro, &opts, &path)
}

/// `repeats` seeded participant-level 20:8 splits.
pub fn holdout_eval(matrix: &FeatureMatrix, spec: &ClassifierSpec, repeats: usize, seed: u64) -> Result<CellResult> {
    let opts = EvalOptions { seed, repeats };
    let path = [config_index(matrix.config), family_index(spec.family)];
    run_protocol(&spec.family, &spec.grid, matrix, Protocol::Holdout, &opts, &path)
}

/// Every matrix × family under one protocol, with default grids. All folds
/// run as independent tasks on the current rayon pool; results keep the
/// input order.
pub fn evaluate(
    matrices: &[FeatureMatrix],
    families: &[Family],
    protocol: Protocol,
    opts: &EvalOptions,
) -> Result<ProtocolReport> {
    let prepared = matrices
        .iter()
        .map(|m| prepare(m, protocol, opts))
        .collect::<Result<Vec<_>>>()?;
    let id_refs: Vec<Vec<&str>> = prepared
        .iter()
        .map(|p| p.ids.iter().map(String::as_str).collect())
        .collect();

    let mut tasks = Vec::new();
    for (mi, p) in prepared.iter().enumerate() {
        for &family in families {
            for f in 0..p.splits.len() {
                tasks.push((mi, family, f));
            }
        }
    }
    let results = tasks
        .par_iter()
        .map(|&(mi, family, f)| {
            let p = &prepared[mi];
            let grid = family.default_grid(p.samples.d);
            let seed = derive_seed(
                opts.seed,
                &[config_index(matrices[mi].config), family_index(family), f as u64],
            );
            run_fold(&family, &grid, &p.samples, &id_refs[mi], f, &p.splits[f], seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut results = results.into_iter();
    let mut cells = Vec::new();
    for (mi, p) in prepared.iter().enumerate() {
        for &family in families {
            let folds: Vec<FoldResult> = results.by_ref().take(p.splits.len()).collect();
            cells.push(CellResult::new(
                matrices[mi].config,
                family.key().to_string(),
                family.default_grid(p.samples.d),
                folds,
            ));
        }
    }
    let participants = matrices.first().map(participants).unwrap_or_default();
    Ok(ProtocolReport {
        protocol,
        seed: opts.seed,
        participants,
        cells,
    })
}
