//! Classifier families, model selection, validation protocols, metrics and
//! the rank correlation used for the expertise analysis.

mod correlation;
mod data;
mod ensemble;
mod eval;
mod knn;
mod metrics;
mod mlp;
mod nb;
mod report;
mod svm;
mod tree;
mod tuning;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use correlation::{kendall_tau, CorrelationResult};
pub use data::{Samples, Standardizer};
pub use ensemble::{Boost, Forest, BOOST_DEPTH, FOREST_TREES};
pub use eval::{
    evaluate, holdout_eval, holdout_split_sizes, loro_cv, run_protocol, CellResult, EvalOptions, FoldResult, Protocol,
    ProtocolReport,
};
pub use knn::Knn;
pub use metrics::{balanced_accuracy, macro_metrics, median, Confusion, MacroMetrics};
pub use mlp::{Mlp, MlpModel, EPOCHS as MLP_EPOCHS};
pub use nb::GaussianNb;
pub use report::{best_bac_per_participant, BestRow, EvalReport};
pub use svm::LinearSvm;
pub use tree::{Binner, Tree, TreeParams, MAX_BINS};
pub use tuning::{grid_search, stratified_folds, GridResult, INNER_FOLDS};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A fitted model.
pub trait Predictor: Send + Sync {
    /// `true` predicts CODE.
    fn predict_row(&self, x: &[f64]) -> bool;

    fn predict(&self, data: &Samples) -> Vec<bool> {
        data.rows().map(|r| self.predict_row(r)).collect()
    }
}

/// Something that fits a [`Predictor`] given one tuning parameter value.
/// Implemented by [`Family`]; other learners can be evaluated through the
/// same protocols.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;

    fn fit(&self, param: f64, data: &Samples, seed: u64) -> Result<Box<dyn Predictor>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Nb,
    Knn,
    Tree,
    SvmLinear,
    Mlp,
    Rf,
    Boost,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Nb,
        Family::Knn,
        Family::Tree,
        Family::SvmLinear,
        Family::Mlp,
        Family::Rf,
        Family::Boost,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Family::Nb => "NB",
            Family::Knn => "KNN",
            Family::Tree => "TREE",
            Family::SvmLinear => "SVM_LINEAR",
            Family::Mlp => "MLP",
            Family::Rf => "RF",
            Family::Boost => "BOOST",
        }
    }

    /// Name of the single tuned parameter.
    pub fn param_name(self) -> &'static str {
        match self {
            Family::Nb => "var_smoothing",
            Family::Knn => "k",
            Family::Tree => "ccp_alpha",
            Family::SvmLinear => "cost",
            Family::Mlp => "hidden",
            Family::Rf => "mtry",
            Family::Boost => "trials",
        }
    }

    /// Five candidate values (fewer for RF when `d` is tiny).
    pub fn default_grid(self, d: usize) -> Vec<f64> {
        match self {
            Family::Nb => vec![1e-9, 1e-7, 1e-5, 1e-3, 1e-1],
            Family::Knn => vec![5.0, 7.0, 9.0, 11.0, 13.0],
            Family::Tree => vec![0.0, 0.0025, 0.005, 0.01, 0.02],
            Family::SvmLinear => vec![0.25, 0.5, 1.0, 2.0, 4.0],
            Family::Mlp => vec![1.0, 3.0, 5.0, 7.0, 9.0],
            Family::Rf => mtry_grid(d),
            Family::Boost => vec![10.0, 20.0, 30.0, 40.0, 50.0],
        }
    }
}

/// 1, ⌈√d⌉, d and the midpoints between them.
fn mtry_grid(d: usize) -> Vec<f64> {
    let d = d.max(1);
    let s = (d as f64).sqrt().ceil() as usize;
    let mid = |a: usize, b: usize| (a + b).div_ceil(2);
    let mut g = vec![1, mid(1, s), s, mid(s, d), d];
    g.dedup();
    g.into_iter().map(|v| v as f64).collect()
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_uppercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.key() == up || (up == "SVM" && *f == Family::SvmLinear))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown classifier family `{s}`")))
    }
}

fn rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

fn as_count(param: f64, what: &str) -> Result<usize> {
    if param.is_finite() && param >= 1.0 && param.fract() == 0.0 {
        Ok(param as usize)
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} must be a positive integer, got {param}"
        )))
    }
}

/// Fits one model of `family` with tuning parameter `param`.
pub fn train(family: Family, param: f64, data: &Samples, seed: u64) -> Result<Box<dyn Predictor>> {
    Ok(match family {
        Family::Nb => Box::new(GaussianNb::fit(data, param)?),
        Family::Knn => Box::new(Knn::fit(data, as_count(param, "k")?)?),
        Family::Tree => {
            let mut t = Tree::fit(data, &TreeParams::default())?;
            t.prune(param);
            Box::new(t)
        }
        Family::SvmLinear => Box::new(LinearSvm::fit(data, param, &mut rng(seed))?),
        Family::Mlp => Box::new(MlpModel::fit(
            data,
            as_count(param, "hidden")?,
            MLP_EPOCHS,
            &mut rng(seed),
        )?),
        Family::Rf => Box::new(Forest::fit(
            data,
            as_count(param, "mtry")?,
            FOREST_TREES,
            &mut rng(seed),
        )?),
        Family::Boost => Box::new(Boost::fit(data, as_count(param, "trials")?)?),
    })
}

impl Learner for Family {
    fn name(&self) -> String {
        self.key().to_string()
    }

    fn fit(&self, param: f64, data: &Samples, seed: u64) -> Result<Box<dyn Predictor>> {
        train(*self, param, data, seed)
    }
}

/// A family with its tuning grid and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub family: Family,
    pub grid: Vec<f64>,
    pub seed: u64,
}

impl ClassifierSpec {
    /// Default grid for data with `d` features.
    pub fn new(family: Family, d: usize, seed: u64) -> ClassifierSpec {
        ClassifierSpec {
            family,
            grid: family.default_grid(d),
            seed,
        }
    }
}
