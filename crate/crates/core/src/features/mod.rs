//! Per-task feature vectors, signal configurations and feature matrices.

mod extract;
mod peaks;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

pub use extract::{
    build_matrix, eda_features, eeg_features, extract_corpus, extract_session, heart_features, rmssd, sdnn, trapezoid,
    CorpusFeatures, TaskFeatures,
};
pub use peaks::{detect_peaks, detect_with, prominence, Peak, PeakParams};

use crate::error::{Error, Result};
use crate::ingest::TaskKind;
use crate::preprocess::{CvxEdaParams, EegBand};
use crate::signal::ChannelKind;

/// Sensor group contributing a block of features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SignalGroup {
    Eeg,
    Eda,
    Heart,
}

impl SignalGroup {
    pub const ALL: [SignalGroup; 3] = [SignalGroup::Eeg, SignalGroup::Eda, SignalGroup::Heart];

    pub fn feature_names(self) -> &'static [String] {
        match self {
            SignalGroup::Eeg => &EEG_NAMES,
            SignalGroup::Eda => &EDA_NAMES,
            SignalGroup::Heart => &HEART_NAMES,
        }
    }

    pub fn required_channels(self) -> &'static [ChannelKind] {
        match self {
            SignalGroup::Eeg => &[ChannelKind::EegRaw, ChannelKind::Attention, ChannelKind::Meditation],
            SignalGroup::Eda => &[ChannelKind::Eda],
            SignalGroup::Heart => &[ChannelKind::Bvp],
        }
    }
}

static EEG_NAMES: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut names: Vec<String> = EegBand::ALL.iter().map(|b| format!("eeg_{}_power", b.name())).collect();
    for a in EegBand::ALL {
        for b in EegBand::ALL {
            if a != b {
                names.push(format!("eeg_ratio_{}_{}", a.name(), b.name()));
            }
        }
    }
    for stream in ["attention", "meditation"] {
        for stat in ["min", "max", "mean_diff"] {
            names.push(format!("{stream}_{stat}"));
        }
    }
    names
});

static EDA_NAMES: LazyLock<Vec<String>> = LazyLock::new(|| {
    [
        "eda_tonic_mean",
        "eda_phasic_auc",
        "eda_scr_amp_min",
        "eda_scr_amp_max",
        "eda_scr_amp_mean",
        "eda_scr_amp_sum",
    ]
    .map(String::from)
    .to_vec()
});

static HEART_NAMES: LazyLock<Vec<String>> = LazyLock::new(|| {
    [
        "bvp_peak_amp_min",
        "bvp_peak_amp_max",
        "bvp_peak_amp_mean",
        "bvp_peak_amp_sum",
        "bvp_peak_amp_mean_diff",
        "hr_mean_diff",
        "hr_var_diff",
        "hrv_sdnn",
        "hrv_rmssd",
    ]
    .map(String::from)
    .to_vec()
});

/// Beat-interval features that may be missing when too few beats are found.
pub const IMPUTABLE: [&str; 4] = ["hr_mean_diff", "hr_var_diff", "hrv_sdnn", "hrv_rmssd"];

pub fn is_imputable(name: &str) -> bool {
    IMPUTABLE.contains(&name)
}

/// One of the seven sensor combinations a classifier is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignalConfig {
    #[serde(rename = "EEG")]
    Eeg,
    #[serde(rename = "EDA")]
    Eda,
    #[serde(rename = "HEART")]
    Heart,
    #[serde(rename = "EEG+EDA")]
    EegEda,
    #[serde(rename = "EEG+HEART")]
    EegHeart,
    #[serde(rename = "EDA+HEART")]
    EdaHeart,
    #[serde(rename = "EEG+EDA+HEART")]
    EegEdaHeart,
}

impl SignalConfig {
    pub const ALL: [SignalConfig; 7] = [
        SignalConfig::Eeg,
        SignalConfig::Eda,
        SignalConfig::Heart,
        SignalConfig::EegEda,
        SignalConfig::EegHeart,
        SignalConfig::EdaHeart,
        SignalConfig::EegEdaHeart,
    ];

    pub fn groups(self) -> &'static [SignalGroup] {
        use SignalGroup::*;
        match self {
            SignalConfig::Eeg => &[Eeg],
            SignalConfig::Eda => &[Eda],
            SignalConfig::Heart => &[Heart],
            SignalConfig::EegEda => &[Eeg, Eda],
            SignalConfig::EegHeart => &[Eeg, Heart],
            SignalConfig::EdaHeart => &[Eda, Heart],
            SignalConfig::EegEdaHeart => &[Eeg, Eda, Heart],
        }
    }

    /// Column names in registry order.
    pub fn feature_names(self) -> Vec<String> {
        self.groups()
            .iter()
            .flat_map(|g| g.feature_names().iter().cloned())
            .collect()
    }

    /// Identifier used in config files and file names.
    pub fn key(self) -> &'static str {
        match self {
            SignalConfig::Eeg => "EEG",
            SignalConfig::Eda => "EDA",
            SignalConfig::Heart => "HEART",
            SignalConfig::EegEda => "EEG+EDA",
            SignalConfig::EegHeart => "EEG+HEART",
            SignalConfig::EdaHeart => "EDA+HEART",
            SignalConfig::EegEdaHeart => "EEG+EDA+HEART",
        }
    }

    /// Label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            SignalConfig::Eeg => "EEG",
            SignalConfig::Eda => "EDA",
            SignalConfig::Heart => "Heart",
            SignalConfig::EegEda => "EEG + EDA",
            SignalConfig::EegHeart => "EEG + Heart",
            SignalConfig::EdaHeart => "EDA + Heart",
            SignalConfig::EegEdaHeart => "EEG + EDA + Heart",
        }
    }
}

impl fmt::Display for SignalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SignalConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_uppercase();
        SignalConfig::ALL
            .into_iter()
            .find(|c| c.key() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown signal configuration `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureParams {
    pub bvp_peaks: PeakParams,
    pub scr_peaks: PeakParams,
    pub ratio_eps: f64,
    pub cvxeda: CvxEdaParams,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            // 0.33 s spacing admits up to ~180 bpm
            bvp_peaks: PeakParams {
                min_distance_s: 0.33,
                min_prominence: 0.5,
                relative: true,
            },
            scr_peaks: PeakParams {
                min_distance_s: 1.0,
                min_prominence: 0.01,
                relative: false,
            },
            ratio_eps: 1e-12,
            cvxeda: CvxEdaParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub participant_id: String,
    pub task_id: String,
    pub label: TaskKind,
    /// `None` marks a missing value (before imputation only).
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub config: SignalConfig,
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn has_missing(&self) -> bool {
        self.rows.iter().any(|r| r.values.iter().any(Option::is_none))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Dense row-major values; fails if anything is still missing.
    pub fn dense(&self) -> Result<Vec<Vec<f64>>> {
        self.rows
            .iter()
            .map(|r| {
                r.values
                    .iter()
                    .zip(&self.names)
                    .map(|(v, n)| {
                        v.ok_or_else(|| Error::Feature(format!("{}/{}: {n} is missing", r.participant_id, r.task_id)))
                    })
                    .collect()
            })
            .collect()
    }

    /// Replaces missing values by the median of the same participant's
    /// other tasks of the same kind, falling back to the median over every
    /// participant's tasks of that kind.
    pub fn impute(&self) -> Result<FeatureMatrix> {
        let mut out = self.clone();
        for (col, name) in self.names.iter().enumerate() {
            let missing: Vec<usize> = (0..self.rows.len())
                .filter(|&r| self.rows[r].values[col].is_none())
                .collect();
            if missing.is_empty() {
                continue;
            }
            if !is_imputable(name) {
                let r = &self.rows[missing[0]];
                return Err(Error::Feature(format!(
                    "{}/{}: {name} is missing but not imputable",
                    r.participant_id, r.task_id
                )));
            }
            let mut by_owner: BTreeMap<(&str, TaskKind), Vec<f64>> = BTreeMap::new();
            let mut by_kind: BTreeMap<TaskKind, Vec<f64>> = BTreeMap::new();
            for r in &self.rows {
                if let Some(v) = r.values[col] {
                    by_owner.entry((&r.participant_id, r.label)).or_default().push(v);
                    by_kind.entry(r.label).or_default().push(v);
                }
            }
            for r in missing {
                let row = &self.rows[r];
                let own = by_owner
                    .get_mut(&(row.participant_id.as_str(), row.label))
                    .and_then(|v| median(v));
                let value = match own {
                    Some(v) => v,
                    None => by_kind
                        .get_mut(&row.label)
                        .and_then(|v| median(v))
                        .ok_or_else(|| Error::Imputation {
                            feature: name.clone(),
                            kind: row.label.to_string(),
                        })?,
                };
                out.rows[r].values[col] = Some(value);
            }
        }
        Ok(out)
    }

    /// CSV with `participant_id,task_id,label` then the feature columns.
    /// Missing values are written as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["participant_id".to_string(), "task_id".into(), "label".into()];
        header.extend(self.names.iter().cloned());
        let io = |e: csv::Error| Error::Feature(format!("writing CSV: {e}"));
        w.write_record(&header).map_err(io)?;
        for r in &self.rows {
            let mut record = vec![r.participant_id.clone(), r.task_id.clone(), r.label.to_string()];
            record.extend(
                r.values
                    .iter()
                    .map(|v| v.map_or_else(|| "NA".to_string(), |x| x.to_string())),
            );
            w.write_record(&record).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Feature(format!("writing CSV: {e}")))
    }
}
