//! Pipeline configuration: one TOML or JSON file, overridden by flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use biocomp::features::{FeatureParams, PeakParams};
use biocomp::learn::Family;
use biocomp::preprocess::CvxEdaParams;
use biocomp::synth::SynthConfig;
use biocomp::{Protocol, SignalConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "BIOCOMP_SEED";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolChoice {
    Loro,
    Holdout,
    #[default]
    Both,
}

impl ProtocolChoice {
    pub fn protocols(self) -> Vec<Protocol> {
        match self {
            ProtocolChoice::Loro => vec![Protocol::Loro],
            ProtocolChoice::Holdout => vec![Protocol::Holdout],
            ProtocolChoice::Both => vec![Protocol::Loro, Protocol::Holdout],
        }
    }
}

impl FromStr for ProtocolChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "loro" => Ok(ProtocolChoice::Loro),
            "holdout" => Ok(ProtocolChoice::Holdout),
            "both" | "all" => Ok(ProtocolChoice::Both),
            _ => Err(format!("unknown protocol `{s}` (expected loro, holdout or both)")),
        }
    }
}

impl fmt::Display for ProtocolChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolChoice::Loro => "loro",
            ProtocolChoice::Holdout => "holdout",
            ProtocolChoice::Both => "both",
        })
    }
}

/// Peak detector settings for BVP beats and SCRs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakConfig {
    pub bvp: PeakParams,
    pub scr: PeakParams,
}

impl Default for PeakConfig {
    fn default() -> Self {
        let f = FeatureParams::default();
        PeakConfig {
            bvp: f.bvp_peaks,
            scr: f.scr_peaks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_root: PathBuf,
    pub configs: Vec<SignalConfig>,
    pub families: Vec<Family>,
    pub protocol: ProtocolChoice,
    pub seed: u64,
    /// Hold-out repetitions.
    pub repeats: usize,
    pub cvxeda: CvxEdaParams,
    pub peaks: PeakConfig,
    pub output_dir: PathBuf,
    /// Worker threads; all cores when unset.
    pub jobs: Option<usize>,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_root: PathBuf::from("corpus"),
            configs: SignalConfig::ALL.to_vec(),
            families: Family::ALL.to_vec(),
            protocol: ProtocolChoice::Both,
            seed: 0,
            repeats: 10,
            cvxeda: CvxEdaParams::default(),
            peaks: PeakConfig::default(),
            output_dir: PathBuf::from("out"),
            jobs: None,
            synth: SynthConfig::default(),
        }
    }
}

/// Values given on the command line; `None` leaves the file value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub protocol: Option<ProtocolChoice>,
    pub configs: Option<Vec<SignalConfig>>,
    pub families: Option<Vec<Family>>,
    pub out: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub n: Option<usize>,
}

impl PipelineConfig {
    /// Resolves the configuration. Precedence: flags, then the file, then
    /// `BIOCOMP_SEED` (seed only), then defaults. Relative paths in the file
    /// are taken relative to the file's directory. The synthetic corpus
    /// seed follows the pipeline seed unless the file sets `synth.seed`.
    pub fn resolve(file: Option<&Path>, env_seed: Option<&str>, flags: &Overrides) -> Result<Self, CliError> {
        let value = match file {
            Some(path) => read_value(path)?,
            None => serde_json::Value::Object(Default::default()),
        };
        let has_seed = value.get("seed").is_some();
        let has_synth_seed = value.pointer("/synth/seed").is_some();
        let mut cfg: PipelineConfig = serde_json::from_value(value.clone()).map_err(|e| {
            CliError::Input(format!(
                "{}: {e}",
                file.map_or("config".into(), |p| p.display().to_string())
            ))
        })?;

        if let Some(dir) = file.and_then(Path::parent) {
            for (key, path) in [
                ("corpus_root", &mut cfg.corpus_root),
                ("output_dir", &mut cfg.output_dir),
            ] {
                if value.get(key).is_some() && path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
        if !has_seed {
            if let Some(text) = env_seed {
                cfg.seed = text
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("{SEED_ENV}=`{text}` is not an unsigned integer")))?;
            }
        }

        if let Some(seed) = flags.seed {
            cfg.seed = seed;
        }
        if let Some(p) = flags.protocol {
            cfg.protocol = p;
        }
        if let Some(c) = &flags.configs {
            cfg.configs = c.clone();
        }
        if let Some(f) = &flags.families {
            cfg.families = f.clone();
        }
        if let Some(o) = &flags.out {
            cfg.output_dir = o.clone();
        }
        if let Some(c) = &flags.corpus {
            cfg.corpus_root = c.clone();
        }
        if flags.jobs.is_some() {
            cfg.jobs = flags.jobs;
        }
        if let Some(n) = flags.n {
            cfg.synth.n_participants = n;
        }
        if flags.seed.is_some() || !has_synth_seed {
            cfg.synth.seed = cfg.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.configs.is_empty() {
            return Err(CliError::Input("no signal configurations selected".into()));
        }
        if self.families.is_empty() {
            return Err(CliError::Input("no classifier families selected".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Input("repeats must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Input("jobs must be at least 1".into()));
        }
        self.cvxeda.validate()?;
        self.synth.validate()?;
        Ok(())
    }

    pub fn feature_params(&self) -> FeatureParams {
        FeatureParams {
            bvp_peaks: self.peaks.bvp,
            scr_peaks: self.peaks.scr,
            cvxeda: self.cvxeda,
            ..FeatureParams::default()
        }
    }
}

fn read_value(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    let value: serde_json::Value = parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::Input(format!(
            "{}: expected a table of settings",
            path.display()
        )));
    }
    Ok(value)
}
