//! Aggregated results and their table renderings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::eval::{CellResult, Protocol, ProtocolReport};
use crate::error::{Error, Result};
use crate::features::SignalConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub loro: Option<ProtocolReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub holdout: Option<ProtocolReport>,
}

/// The best family of one signal configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub config: SignalConfig,
    pub family: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub bac: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("writing CSV: {e}"))
}

impl ProtocolReport {
    pub fn configs(&self) -> Vec<SignalConfig> {
        let mut out: Vec<SignalConfig> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.config) {
                out.push(c.config);
            }
        }
        out
    }

    pub fn families(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.family) {
                out.push(c.family.clone());
            }
        }
        out
    }

    /// Per configuration, the family with the highest median BAC; earlier
    /// families win ties.
    pub fn best_rows(&self) -> Vec<BestRow> {
        self.configs()
            .into_iter()
            .filter_map(|config| {
                let mut best: Option<&CellResult> = None;
                for c in self.cells.iter().filter(|c| c.config == config) {
                    let better = match (best.and_then(|b| b.median_bac), c.median_bac) {
                        (_, None) => false,
                        (None, Some(_)) => true,
                        (Some(b), Some(v)) => v > b,
                    };
                    if best.is_none() || better {
                        best = Some(c);
                    }
                }
                best.map(|c| BestRow {
                    config,
                    family: c.family.clone(),
                    precision: c.precision,
                    recall: c.recall,
                    f1: c.f1,
                    bac: c.median_bac,
                })
            })
            .collect()
    }

    /// `Signal,Best Classifier,Precision,Recall,F1,BAC`.
    pub fn write_best_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["Signal", "Best Classifier", "Precision", "Recall", "F1", "BAC"])
            .map_err(csv_err)?;
        for r in self.best_rows() {
            w.write_record([
                r.config.label().to_string(),
                r.family,
                fmt_opt(r.precision),
                fmt_opt(r.recall),
                fmt_opt(r.f1),
                fmt_opt(r.bac),
            ])
            .map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("writing CSV: {e}")))
    }
}

impl EvalReport {
    pub fn protocols(&self) -> impl Iterator<Item = &ProtocolReport> {
        self.loro.iter().chain(&self.holdout)
    }

    pub fn get(&self, protocol: Protocol) -> Option<&ProtocolReport> {
        match protocol {
            Protocol::Loro => self.loro.as_ref(),
            Protocol::Holdout => self.holdout.as_ref(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(format!("serializing report: {e}")))
    }

    /// Median BAC grid: `Protocol,Signal,<family>...`, one row per protocol
    /// and configuration.
    pub fn write_medians<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let families = self
            .protocols()
            .next()
            .map(ProtocolReport::families)
            .unwrap_or_default();
        let mut header = vec!["Protocol".to_string(), "Signal".to_string()];
        header.extend(families.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for p in self.protocols() {
            for config in p.configs() {
                let mut row = vec![p.protocol.label().to_string(), config.label().to_string()];
                row.extend(
                    families
                        .iter()
                        .map(|f| fmt_opt(p.cell(config, f).and_then(|c| c.median_bac))),
                );
                w.write_record(&row).map_err(csv_err)?;
            }
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("writing CSV: {e}")))
    }
}

/// Highest leave-one-participant-out BAC each participant obtained across
/// every configuration and family.
pub fn best_bac_per_participant(report: &ProtocolReport) -> BTreeMap<String, f64> {
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for cell in &report.cells {
        for fold in &cell.folds {
            let (Some(bac), [p]) = (fold.bac, fold.test_participants.as_slice()) else {
                continue;
            };
            best.entry(p.clone()).and_modify(|b| *b = b.max(bac)).or_insert(bac);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{Confusion, FoldResult};

    fn fold(p: &str, bac: Option<f64>) -> FoldResult {
        FoldResult {
            fold: 0,
            train_participants: vec![],
            test_participants: vec![p.into()],
            n_train: 0,
            n_test: 0,
            param: 0.0,
            confusion: Confusion::default(),
            bac,
            metrics: None,
        }
    }

    fn cell(config: SignalConfig, family: &str, folds: Vec<FoldResult>, median: Option<f64>) -> CellResult {
        CellResult {
            config,
            family: family.into(),
            grid: vec![],
            folds,
            median_bac: median,
            precision: Some(0.5),
            recall: Some(0.5),
            f1: Some(0.5),
        }
    }

    fn report(cells: Vec<CellResult>) -> ProtocolReport {
        ProtocolReport {
            protocol: Protocol::Loro,
            seed: 0,
            participants: vec![],
            cells,
        }
    }

    #[test]
    fn best_participant_bac_is_max() {
        let r = report(vec![
            cell(
                SignalConfig::Eeg,
                "NB",
                vec![fold("P", Some(0.6)), fold("Q", None)],
                Some(0.6),
            ),
            cell(
                SignalConfig::Eda,
                "KNN",
                vec![fold("P", Some(0.8)), fold("Q", Some(0.4))],
                Some(0.6),
            ),
        ]);
        let best = best_bac_per_participant(&r);
        assert_eq!(best["P"], 0.8);
        assert_eq!(best["Q"], 0.4);
    }

    #[test]
    fn best_rows_prefer_earlier_on_ties() {
        let r = report(vec![
            cell(SignalConfig::Heart, "NB", vec![], Some(0.7)),
            cell(SignalConfig::Heart, "KNN", vec![], Some(0.7)),
            cell(SignalConfig::Heart, "RF", vec![], Some(0.9)),
            cell(SignalConfig::Eda, "NB", vec![], None),
        ]);
        let rows = r.best_rows();
        assert_eq!(rows[0].family, "RF");
        assert_eq!(rows[1].bac, None);
        let mut buf = Vec::new();
        r.write_best_table(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "Signal,Best Classifier,Precision,Recall,F1,BAC\nHeart,RF,0.5000,0.5000,0.5000,0.9000\nEDA,NB,0.5000,0.5000,0.5000,NA\n"
        );
    }
}
