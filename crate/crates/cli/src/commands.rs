//! Subcommand implementations. Each writes its outputs under the configured
//! output directory (the corpus root for `synth`) with fixed file names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use biocomp::features::{extract_corpus, CorpusFeatures, SignalGroup};
use biocomp::ingest::{load_corpus, load_participants, session_dirs, validate_corpus, ValidationReport, MANIFEST_FILE};
use biocomp::learn::{best_bac_per_participant, evaluate, kendall_tau, EvalOptions};
use biocomp::synth::synth_corpus;
use biocomp::{EvalReport, FeatureMatrix, Protocol};
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, ProtocolChoice};
use crate::CliError;

pub const VALIDATION_FILE: &str = "validation.json";
pub const REPORT_FILE: &str = "report.json";
pub const MEDIANS_FILE: &str = "medians.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const CORRELATION_FILE: &str = "correlation.json";

pub fn table_file(protocol: Protocol) -> &'static str {
    match protocol {
        Protocol::Loro => "table_loro.csv",
        Protocol::Holdout => "table_holdout.csv",
    }
}

pub fn features_file(config: biocomp::SignalConfig) -> String {
    format!("features_{}.csv", config.key())
}

fn out_dir(cfg: &PipelineConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Internal(format!("{}: {e}", cfg.output_dir.display())))?;
    Ok(&cfg.output_dir)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Writes `validation.json`; fails with an input error unless the corpus is
/// analyzable.
pub fn cmd_validate(cfg: &PipelineConfig) -> Result<ValidationReport, CliError> {
    let report = validate_corpus(&cfg.corpus_root);
    let dir = out_dir(cfg)?;
    write_file(&dir.join(VALIDATION_FILE), &to_json(&report)?)?;
    for s in &report.sessions {
        for w in &s.warnings {
            log::warn!("{}: {w}", s.dir.display());
        }
    }
    if report.analyzable() {
        return Ok(report);
    }
    let mut problems: Vec<String> = report.errors.clone();
    for s in &report.sessions {
        problems.extend(s.errors.iter().map(|e| format!("{}: {e}", s.dir.display())));
    }
    Err(CliError::Input(format!(
        "{} is not analyzable ({} problems):\n  {}",
        cfg.corpus_root.display(),
        problems.len(),
        problems.join("\n  ")
    )))
}

fn groups_for(cfg: &PipelineConfig) -> Vec<SignalGroup> {
    let set: BTreeSet<SignalGroup> = cfg.configs.iter().flat_map(|c| c.groups().iter().copied()).collect();
    set.into_iter().collect()
}

fn corpus_features(cfg: &PipelineConfig) -> Result<CorpusFeatures, CliError> {
    let sessions = load_corpus(&cfg.corpus_root)?;
    if sessions.is_empty() {
        return Err(CliError::Input(format!("{}: no sessions", cfg.corpus_root.display())));
    }
    Ok(extract_corpus(&sessions, &groups_for(cfg), &cfg.feature_params())?)
}

fn matrices(cfg: &PipelineConfig, features: &CorpusFeatures) -> Result<Vec<FeatureMatrix>, CliError> {
    cfg.configs
        .iter()
        .map(|c| features.matrix(*c).map_err(CliError::from))
        .collect()
}

/// Writes one imputed feature matrix per configuration; returns the paths.
pub fn cmd_features(cfg: &PipelineConfig) -> Result<Vec<PathBuf>, CliError> {
    let features = corpus_features(cfg)?;
    let dir = out_dir(cfg)?;
    let mut paths = Vec::new();
    for m in matrices(cfg, &features)? {
        let path = dir.join(features_file(m.config));
        m.write_csv(create(&path)?)?;
        paths.push(path);
    }
    Ok(paths)
}

fn run_evaluation(cfg: &PipelineConfig, protocol: ProtocolChoice) -> Result<EvalReport, CliError> {
    let features = corpus_features(cfg)?;
    let matrices = matrices(cfg, &features)?;
    let opts = EvalOptions {
        seed: cfg.seed,
        repeats: cfg.repeats,
    };
    let mut report = EvalReport {
        seed: cfg.seed,
        loro: None,
        holdout: None,
    };
    for p in protocol.protocols() {
        log::info!("evaluating {} configurations under {}", matrices.len(), p.label());
        let r = evaluate(&matrices, &cfg.families, p, &opts)?;
        match p {
            Protocol::Loro => report.loro = Some(r),
            Protocol::Holdout => report.holdout = Some(r),
        }
    }
    Ok(report)
}

/// Writes `report.json`, one best-classifier table per protocol run and the
/// median BAC grid.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<EvalReport, CliError> {
    let report = run_evaluation(cfg, cfg.protocol)?;
    let dir = out_dir(cfg)?;
    write_file(&dir.join(REPORT_FILE), &(report.to_json()? + "\n"))?;
    for p in report.protocols() {
        p.write_best_table(create(&dir.join(table_file(p.protocol)))?)?;
    }
    report.write_medians(create(&dir.join(MEDIANS_FILE))?)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub participant: String,
    pub gpa: f64,
    pub best_bac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub tau: f64,
    pub p_value: f64,
    pub n: usize,
    pub points: Vec<ScatterPoint>,
    /// Participants left out for lack of a GPA or a defined BAC.
    pub excluded: Vec<String>,
}

fn load_report(path: &Path) -> Result<EvalReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Joins each participant's best LORO BAC with their GPA and writes
/// `correlation.json` and `scatter.csv`.
pub fn cmd_correlate(cfg: &PipelineConfig, report: Option<&Path>) -> Result<CorrelationReport, CliError> {
    let default = cfg.output_dir.join(REPORT_FILE);
    let report = match report {
        Some(path) => load_report(path)?,
        None if default.is_file() => load_report(&default)?,
        None => run_evaluation(cfg, ProtocolChoice::Loro)?,
    };
    let loro = report
        .loro
        .as_ref()
        .ok_or_else(|| CliError::Input("the evaluation report has no LORO results".into()))?;
    let best = best_bac_per_participant(loro);
    let gpa: BTreeMap<String, Option<f64>> = load_participants(&cfg.corpus_root)?
        .into_iter()
        .map(|p| (p.id, p.gpa))
        .collect();

    let mut points = Vec::new();
    let mut excluded = Vec::new();
    let ids: BTreeSet<&String> = best.keys().chain(gpa.keys()).collect();
    for id in ids {
        match (gpa.get(id).copied().flatten(), best.get(id)) {
            (Some(g), Some(&b)) => points.push(ScatterPoint {
                participant: id.clone(),
                gpa: g,
                best_bac: b,
            }),
            _ => excluded.push(id.clone()),
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.gpa).collect();
    let y: Vec<f64> = points.iter().map(|p| p.best_bac).collect();
    let c = kendall_tau(&x, &y)?;
    let result = CorrelationReport {
        tau: c.tau,
        p_value: c.p_value,
        n: c.n,
        points,
        excluded,
    };

    let dir = out_dir(cfg)?;
    write_file(&dir.join(CORRELATION_FILE), &to_json(&result)?)?;
    let mut w = csv::Writer::from_writer(create(&dir.join(SCATTER_FILE))?);
    let csv_err = |e: csv::Error| CliError::Internal(format!("{SCATTER_FILE}: {e}"));
    w.write_record(["participant", "gpa", "best_bac"]).map_err(csv_err)?;
    for p in &result.points {
        w.write_record([p.participant.clone(), p.gpa.to_string(), p.best_bac.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| CliError::Internal(format!("{SCATTER_FILE}: {e}")))?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub root: PathBuf,
    pub participants: usize,
    pub events: usize,
    pub answered: usize,
}

impl fmt::Display for SynthSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} participants, {} events ({} answered)",
            self.root.display(),
            self.participants,
            self.events,
            self.answered
        )
    }
}

/// Generates the synthetic corpus under the corpus root. Existing session
/// directories are only replaced with `force`.
pub fn cmd_synth(cfg: &PipelineConfig, force: bool) -> Result<SynthSummary, CliError> {
    let root = &cfg.corpus_root;
    if root.exists() {
        let existing: Vec<PathBuf> = session_dirs(root)?
            .into_iter()
            .filter(|d| d.join(MANIFEST_FILE).is_file())
            .collect();
        if !existing.is_empty() {
            if !force {
                return Err(CliError::Input(format!(
                    "{} already holds {} sessions; pass --force to replace them",
                    root.display(),
                    existing.len()
                )));
            }
            for d in existing {
                fs::remove_dir_all(&d).map_err(|e| CliError::Internal(format!("{}: {e}", d.display())))?;
            }
        }
    }
    let sessions = synth_corpus(&cfg.synth, root)?;
    Ok(SynthSummary {
        root: root.clone(),
        participants: sessions.len(),
        events: sessions.iter().map(|s| s.events.len()).sum(),
        answered: sessions
            .iter()
            .map(|s| s.events.iter().filter(|e| e.is_answered()).count())
            .sum(),
    })
}
