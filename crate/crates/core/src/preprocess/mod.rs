//! Baseline normalization, band-pass filtering and EDA decomposition.

mod cvxeda;
mod filter;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use cvxeda::{
    arma_coefficients, decompose_eda, phasic_response, CvxEdaParams, EdaDecomposition, SolverDiagnostics,
};
pub use filter::{Band, Biquad, SosFilter, BUTTERWORTH_ORDER};

use crate::error::{Error, Result};
use crate::ingest::Session;
use crate::signal::{ChannelKind, SampledSignal};

/// Length of the calibration tail used as the resting baseline.
pub const BASELINE_SECONDS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelBaseline {
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub std: f64,
    pub n_samples: usize,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub channels: BTreeMap<ChannelKind, ChannelBaseline>,
}

impl BaselineStats {
    pub fn get(&self, kind: ChannelKind) -> Result<&ChannelBaseline> {
        self.channels
            .get(&kind)
            .ok_or_else(|| Error::InvalidArgument(format!("no baseline statistics for {kind}")))
    }
}

/// Mean and sample standard deviation of one channel over `[start, end]`.
pub fn channel_baseline(signal: &SampledSignal, start: f64, end: f64) -> Result<ChannelBaseline> {
    let insufficient = || Error::InsufficientBaseline {
        kind: signal.kind,
        start,
        end,
    };
    let tol = 1.0 / signal.sample_rate;
    if signal.is_empty() || signal.start_time > start + tol || signal.end_time() < end - tol {
        return Err(insufficient());
    }
    let (lo, hi) = signal.index_range(start, end).ok_or_else(insufficient)?;
    let window = &signal.values[lo..=hi];
    if window.len() < 2 {
        return Err(insufficient());
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let ss: f64 = window.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ChannelBaseline {
        mean,
        std: (ss / (n - 1.0)).sqrt(),
        n_samples: window.len(),
        window: [start, end],
    })
}

/// Baseline statistics over the last 30 s of calibration, for every channel.
pub fn baseline_stats(session: &Session) -> Result<BaselineStats> {
    let end = session.baseline_end();
    let start = end - BASELINE_SECONDS;
    let channels = session
        .channels
        .iter()
        .map(|(&kind, signal)| Ok((kind, channel_baseline(signal, start, end)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(BaselineStats { channels })
}

/// Z-score normalization against the channel's baseline.
pub fn zscore(signal: &SampledSignal, stats: &BaselineStats) -> Result<SampledSignal> {
    let b = stats.get(signal.kind)?;
    if b.std <= 0.0 {
        return Err(Error::DegenerateBaseline(signal.kind));
    }
    Ok(signal.with_values(signal.values.iter().map(|v| (v - b.mean) / b.std).collect()))
}

/// Zero-phase fourth-order Butterworth band-pass. `low_hz == 0` gives a
/// low-pass, `high_hz == None` a high-pass.
pub fn bandpass(signal: &SampledSignal, low_hz: f64, high_hz: Option<f64>) -> Result<SampledSignal> {
    let filter = SosFilter::butterworth(BUTTERWORTH_ORDER, Band::new(low_hz, high_hz), signal.sample_rate)?;
    Ok(signal.with_values(filter.filtfilt(&signal.values)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EegBand {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl EegBand {
    pub const ALL: [EegBand; 5] = [
        EegBand::Delta,
        EegBand::Theta,
        EegBand::Alpha,
        EegBand::Beta,
        EegBand::Gamma,
    ];

    pub fn band(self) -> Band {
        match self {
            EegBand::Delta => Band::new(0.0, Some(4.0)),
            EegBand::Theta => Band::new(4.0, Some(8.0)),
            EegBand::Alpha => Band::new(8.0, Some(12.0)),
            EegBand::Beta => Band::new(12.0, Some(30.0)),
            EegBand::Gamma => Band::new(30.0, None),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EegBand::Delta => "delta",
            EegBand::Theta => "theta",
            EegBand::Alpha => "alpha",
            EegBand::Beta => "beta",
            EegBand::Gamma => "gamma",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Band-filtered copies of one EEG recording, in [`EegBand::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct EegBands {
    pub bands: [SampledSignal; 5],
}

impl EegBands {
    pub fn get(&self, band: EegBand) -> &SampledSignal {
        &self.bands[band.index()]
    }
}

pub fn eeg_band_split(eeg: &SampledSignal) -> Result<EegBands> {
    if eeg.kind != ChannelKind::EegRaw {
        return Err(Error::InvalidArgument(format!("expected EEG_RAW, got {}", eeg.kind)));
    }
    let [d, t, a, b, g] = EegBand::ALL.map(|band| {
        let Band { low_hz, high_hz } = band.band();
        bandpass(eeg, low_hz, high_hz)
    });
    Ok(EegBands {
        bands: [d?, t?, a?, b?, g?],
    })
}

/// Pass band applied to BVP before peak detection.
pub const BVP_BAND: Band = Band::new(1.0, Some(8.0));

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(kind: ChannelKind, rate: f64, values: Vec<f64>) -> SampledSignal {
        SampledSignal::new(kind, rate, 1000.0, values).unwrap()
    }

    fn two_pass(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn constant_baseline() {
        let s = signal(ChannelKind::Eda, 4.0, vec![5.0; 200]);
        let b = channel_baseline(&s, 1010.0, 1040.0).unwrap();
        assert_eq!(b.mean, 5.0);
        assert_eq!(b.std, 0.0);
        assert_eq!(b.n_samples, 121);
        let stats = BaselineStats {
            channels: [(ChannelKind::Eda, b)].into(),
        };
        assert!(matches!(
            zscore(&s, &stats),
            Err(Error::DegenerateBaseline(ChannelKind::Eda))
        ));
    }

    #[test]
    fn alternating_baseline_mean() {
        let s = signal(
            ChannelKind::Eda,
            4.0,
            (0..200).map(|i| if i % 2 == 0 { 1.0 } else { 3.0 }).collect(),
        );
        let b = channel_baseline(&s, 1010.0, 1039.75).unwrap();
        assert_eq!(b.n_samples, 120);
        assert_eq!(b.mean, 2.0);
    }

    #[test]
    fn baseline_matches_two_pass_oracle() {
        let values: Vec<f64> = (0..400)
            .map(|i| ((i * 37 % 101) as f64).sqrt() + (i as f64 * 0.1).sin())
            .collect();
        let s = signal(ChannelKind::Bvp, 64.0, values.clone());
        let b = channel_baseline(&s, 1000.5, 1005.5).unwrap();
        let (lo, hi) = (32, 352);
        let (mean, std) = two_pass(&values[lo..=hi]);
        assert_eq!(b.n_samples, hi - lo + 1);
        assert!((b.mean - mean).abs() < 1e-12);
        assert!((b.std - std).abs() < 1e-12);
    }

    #[test]
    fn short_channel_is_insufficient() {
        let s = signal(ChannelKind::Eda, 4.0, vec![1.0; 40]);
        assert!(matches!(
            channel_baseline(&s, 1000.0, 1030.0),
            Err(Error::InsufficientBaseline { .. })
        ));
    }

    #[test]
    fn zscore_arithmetic_and_identity() {
        let s = signal(ChannelKind::Eda, 4.0, vec![3.0, 2.0, 1.0]);
        let stats = |mean, std| BaselineStats {
            channels: [(
                ChannelKind::Eda,
                ChannelBaseline {
                    mean,
                    std,
                    n_samples: 3,
                    window: [0.0, 1.0],
                },
            )]
            .into(),
        };
        let z = zscore(&s, &stats(2.0, 1.0)).unwrap();
        assert_eq!(z.values, vec![1.0, 0.0, -1.0]);
        assert_eq!(zscore(&z, &stats(0.0, 1.0)).unwrap(), z);
    }

    #[test]
    fn normalized_baseline_is_standard() {
        let values: Vec<f64> = (0..300).map(|i| 4.0 + ((i * 7919) % 113) as f64 / 50.0).collect();
        let s = signal(ChannelKind::Eda, 4.0, values);
        let b = channel_baseline(&s, 1020.0, 1050.0).unwrap();
        let stats = BaselineStats {
            channels: [(ChannelKind::Eda, b)].into(),
        };
        let z = zscore(&s, &stats).unwrap();
        let renorm = channel_baseline(&z, 1020.0, 1050.0).unwrap();
        assert!(renorm.mean.abs() < 1e-9);
        assert!((renorm.std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_input_stays_zero() {
        let s = signal(ChannelKind::EegRaw, 512.0, vec![0.0; 1024]);
        let bands = eeg_band_split(&s).unwrap();
        for b in &bands.bands {
            assert_eq!(b.len(), 1024);
            assert_eq!(b.start_time, s.start_time);
            assert!(b.values.iter().all(|v| *v == 0.0));
        }
    }
}
