use std::path::PathBuf;

use thiserror::Error;

use crate::signal::ChannelKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}: channel file has no samples")]
    EmptyChannel(PathBuf),
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("session {session}: missing {kind} channel ({detail})")]
    MissingChannel {
        session: String,
        kind: ChannelKind,
        detail: String,
    },
    #[error("{kind}: baseline window [{start}, {end}] is not covered by the recording")]
    InsufficientBaseline { kind: ChannelKind, start: f64, end: f64 },
    #[error("{0}: baseline standard deviation is zero (flat calibration recording)")]
    DegenerateBaseline(ChannelKind),
    #[error("filter design: {0}")]
    FilterDesign(String),
    #[error("EDA decomposition did not converge after {iterations} iterations (KKT residual {residual:e})")]
    Decomposition { iterations: usize, residual: f64 },
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("window [{start}, {end}] does not intersect the signal")]
    EmptyWindow { start: f64, end: f64 },
    #[error("feature extraction: {0}")]
    Feature(String),
    #[error("imputation: feature {feature} is missing for every {kind} row")]
    Imputation { feature: String, kind: String },
    #[error("training: {0}")]
    Train(String),
    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),
    #[error("synthetic corpus: {0}")]
    Synth(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
