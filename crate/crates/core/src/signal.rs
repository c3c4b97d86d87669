//! Uniformly sampled channels and the timestamp rule shared by every stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sensor streams recorded during a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChannelKind {
    Eda,
    Bvp,
    EegRaw,
    Attention,
    Meditation,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 5] = [
        ChannelKind::Eda,
        ChannelKind::Bvp,
        ChannelKind::EegRaw,
        ChannelKind::Attention,
        ChannelKind::Meditation,
    ];

    /// Device sampling rate in Hz.
    pub fn nominal_rate(self) -> f64 {
        match self {
            ChannelKind::Eda => 4.0,
            ChannelKind::Bvp => 64.0,
            ChannelKind::EegRaw => 512.0,
            ChannelKind::Attention | ChannelKind::Meditation => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Eda => "EDA",
            ChannelKind::Bvp => "BVP",
            ChannelKind::EegRaw => "EEG_RAW",
            ChannelKind::Attention => "ATTENTION",
            ChannelKind::Meditation => "MEDITATION",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown channel kind `{s}`")))
    }
}

/// A uniformly sampled real-valued channel. Sample `i` is taken at
/// `start_time + i / sample_rate` (seconds since the Unix epoch).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub kind: ChannelKind,
    pub sample_rate: f64,
    pub start_time: f64,
    pub values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(kind: ChannelKind, sample_rate: f64, start_time: f64, values: Vec<f64>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::InvalidArgument("start time must be finite".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        Ok(SampledSignal {
            kind,
            sample_rate,
            start_time,
            values,
        })
    }

    /// Same metadata, new samples. Length is the caller's responsibility.
    pub fn with_values(&self, values: Vec<f64>) -> SampledSignal {
        SampledSignal {
            kind: self.kind,
            sample_rate: self.sample_rate,
            start_time: self.start_time,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> f64 {
        self.start_time + i as f64 / self.sample_rate
    }

    /// Timestamp of the last sample, or `start_time` for an empty signal.
    pub fn end_time(&self) -> f64 {
        self.timestamp(self.values.len().saturating_sub(1))
    }

    /// Inclusive index range of samples whose timestamps fall in `[t0, t1]`.
    pub fn index_range(&self, t0: f64, t1: f64) -> Option<(usize, usize)> {
        if self.values.is_empty() || t1 < t0 {
            return None;
        }
        // Tolerance absorbs representation error in epoch-scale timestamps.
        const EPS: f64 = 1e-6;
        let lo = ((t0 - self.start_time) * self.sample_rate - EPS).ceil().max(0.0);
        let hi = ((t1 - self.start_time) * self.sample_rate + EPS).floor();
        let last = (self.values.len() - 1) as f64;
        if hi < 0.0 || lo > last {
            return None;
        }
        let (lo, hi) = (lo as usize, hi.min(last) as usize);
        (lo <= hi).then_some((lo, hi))
    }
}
