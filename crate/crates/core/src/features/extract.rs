use std::collections::BTreeMap;

use rayon::prelude::*;

use super::peaks::{detect_with, PeakParams};
use super::{FeatureMatrix, FeatureParams, FeatureRow, SignalConfig, SignalGroup};
use crate::error::{Error, Result};
use crate::ingest::{Session, TaskKind};
use crate::preprocess::{
    bandpass, channel_baseline, decompose_eda, eeg_band_split, zscore, BaselineStats, EegBand, EegBands,
    BASELINE_SECONDS, BVP_BAND,
};
use crate::segment::{compute_task_windows, slice, TaskWindow};
use crate::signal::{ChannelKind, SampledSignal};

fn non_empty<'a>(s: &'a SampledSignal, what: &str) -> Result<&'a [f64]> {
    if s.is_empty() {
        return Err(Error::Feature(format!("empty {what} window")));
    }
    Ok(&s.values)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Integral of the samples by the trapezoid rule with spacing `dt`.
pub fn trapezoid(x: &[f64], dt: f64) -> f64 {
    match x {
        [] | [_] => 0.0,
        [first, .., last] => dt * (x.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}

/// Sample standard deviation of beat intervals; `None` below two intervals.
pub fn sdnn(ibi: &[f64]) -> Option<f64> {
    if ibi.len() < 2 {
        return None;
    }
    // Centering on the first interval keeps a constant series exactly zero.
    let shifted: Vec<f64> = ibi.iter().map(|v| v - ibi[0]).collect();
    let m = mean(&shifted);
    let ss: f64 = shifted.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (ibi.len() - 1) as f64).sqrt())
}

/// Root mean square of successive interval differences; `None` below two
/// intervals.
pub fn rmssd(ibi: &[f64]) -> Option<f64> {
    if ibi.len() < 2 {
        return None;
    }
    let ss: f64 = ibi.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Some((ss / (ibi.len() - 1) as f64).sqrt())
}

/// Band powers, pairwise power ratios, and attention/meditation statistics.
pub fn eeg_features(
    bands: &[SampledSignal; 5],
    attention: &SampledSignal,
    meditation: &SampledSignal,
    stats: &BaselineStats,
    ratio_eps: f64,
) -> Result<Vec<f64>> {
    let mut powers = [0.0; 5];
    for (p, (band, s)) in powers.iter_mut().zip(EegBand::ALL.iter().zip(bands)) {
        let x = non_empty(s, band.name())?;
        *p = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    }
    let mut out = powers.to_vec();
    for a in 0..5 {
        for b in 0..5 {
            if a != b {
                out.push(powers[a] / (powers[b] + ratio_eps));
            }
        }
    }
    for s in [attention, meditation] {
        let x = non_empty(s, s.kind.name())?;
        let (lo, hi) = min_max(x);
        let base = stats.get(s.kind)?.mean;
        out.extend([lo, hi, mean(x) - base]);
    }
    Ok(out)
}

/// Tonic level, phasic area and SCR peak amplitude statistics.
pub fn eda_features(tonic: &SampledSignal, phasic: &SampledSignal, peaks: &PeakParams) -> Result<Vec<f64>> {
    let t = non_empty(tonic, "tonic")?;
    let p = non_empty(phasic, "phasic")?;
    let amps: Vec<f64> = detect_with(p, phasic.sample_rate, peaks)
        .iter()
        .map(|k| k.amplitude)
        .collect();
    let mut out = vec![mean(t), trapezoid(p, 1.0 / phasic.sample_rate)];
    out.extend(amplitude_stats(&amps));
    Ok(out)
}

/// min, max, mean, sum; all zero without peaks.
fn amplitude_stats(amps: &[f64]) -> [f64; 4] {
    if amps.is_empty() {
        return [0.0; 4];
    }
    let (lo, hi) = min_max(amps);
    [lo, hi, mean(amps), amps.iter().sum()]
}

struct Beats {
    amplitudes: Vec<f64>,
    ibi: Vec<f64>,
}

impl Beats {
    fn detect(bvp: &SampledSignal, params: &PeakParams) -> Beats {
        let peaks = detect_with(&bvp.values, bvp.sample_rate, params);
        let ibi = peaks
            .windows(2)
            .map(|w| (w[1].index - w[0].index) as f64 / bvp.sample_rate)
            .collect();
        Beats {
            amplitudes: peaks.iter().map(|p| p.amplitude).collect(),
            ibi,
        }
    }

    fn mean_amplitude(&self) -> f64 {
        if self.amplitudes.is_empty() {
            0.0
        } else {
            mean(&self.amplitudes)
        }
    }

    /// Mean and population variance of instantaneous heart rate.
    fn heart_rate(&self) -> Option<(f64, f64)> {
        if self.ibi.is_empty() {
            return None;
        }
        let hr: Vec<f64> = self.ibi.iter().map(|i| 60.0 / i).collect();
        let m = mean(&hr);
        Some((m, hr.iter().map(|h| (h - m).powi(2)).sum::<f64>() / hr.len() as f64))
    }
}

/// Peak amplitude, heart rate and HRV features of a filtered BVP window,
/// differenced against the same quantities on the baseline slice.
pub fn heart_features(bvp: &SampledSignal, baseline: &SampledSignal, peaks: &PeakParams) -> Result<Vec<Option<f64>>> {
    non_empty(bvp, "BVP")?;
    non_empty(baseline, "baseline BVP")?;
    let task = Beats::detect(bvp, peaks);
    let base = Beats::detect(baseline, peaks);

    let mut out: Vec<Option<f64>> = amplitude_stats(&task.amplitudes).into_iter().map(Some).collect();
    out.push(Some(task.mean_amplitude() - base.mean_amplitude()));
    let hr = task.heart_rate().zip(base.heart_rate());
    out.push(hr.map(|((t, _), (b, _))| t - b));
    out.push(hr.map(|((_, t), (_, b))| t - b));
    out.push(sdnn(&task.ibi));
    out.push(rmssd(&task.ibi));
    Ok(out)
}

/// Features of one answered task, grouped by sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFeatures {
    pub participant_id: String,
    pub task_id: String,
    pub label: TaskKind,
    pub groups: BTreeMap<SignalGroup, Vec<Option<f64>>>,
}

struct Prepared {
    stats: BaselineStats,
    eeg: Option<(EegBands, SampledSignal, SampledSignal)>,
    eda: Option<(SampledSignal, SampledSignal)>,
    bvp: Option<(SampledSignal, SampledSignal)>,
}

fn prepare(session: &Session, groups: &[SignalGroup], params: &FeatureParams) -> Result<Prepared> {
    let end = session.baseline_end();
    let start = end - BASELINE_SECONDS;
    let mut stats = BaselineStats::default();
    for g in groups {
        for &kind in g.required_channels() {
            let signal = session.channel(kind)?;
            stats.channels.insert(kind, channel_baseline(signal, start, end)?);
        }
    }
    let normalized = |kind| zscore(session.channel(kind)?, &stats);

    let eeg = if groups.contains(&SignalGroup::Eeg) {
        let bands = eeg_band_split(&normalized(ChannelKind::EegRaw)?)?;
        Some((
            bands,
            session.channel(ChannelKind::Attention)?.clone(),
            session.channel(ChannelKind::Meditation)?.clone(),
        ))
    } else {
        None
    };
    let eda = if groups.contains(&SignalGroup::Eda) {
        let d = decompose_eda(&normalized(ChannelKind::Eda)?, &params.cvxeda)?;
        Some((d.tonic, d.phasic))
    } else {
        None
    };
    let bvp = if groups.contains(&SignalGroup::Heart) {
        let filtered = bandpass(&normalized(ChannelKind::Bvp)?, BVP_BAND.low_hz, BVP_BAND.high_hz)?;
        let base = slice(&filtered, start, end)?;
        Some((filtered, base))
    } else {
        None
    };
    Ok(Prepared { stats, eeg, eda, bvp })
}

fn window_features(
    p: &Prepared,
    w: &TaskWindow,
    params: &FeatureParams,
) -> Result<BTreeMap<SignalGroup, Vec<Option<f64>>>> {
    let cut = |s: &SampledSignal| slice(s, w.t_start, w.t_end);
    let mut groups = BTreeMap::new();
    if let Some((bands, att, med)) = &p.eeg {
        let [d, t, a, b, g] = &bands.bands;
        let sliced = [cut(d)?, cut(t)?, cut(a)?, cut(b)?, cut(g)?];
        let v = eeg_features(&sliced, &cut(att)?, &cut(med)?, &p.stats, params.ratio_eps)?;
        groups.insert(SignalGroup::Eeg, v.into_iter().map(Some).collect());
    }
    if let Some((tonic, phasic)) = &p.eda {
        let v = eda_features(&cut(tonic)?, &cut(phasic)?, &params.scr_peaks)?;
        groups.insert(SignalGroup::Eda, v.into_iter().map(Some).collect());
    }
    if let Some((bvp, base)) = &p.bvp {
        groups.insert(SignalGroup::Heart, heart_features(&cut(bvp)?, base, &params.bvp_peaks)?);
    }
    Ok(groups)
}

/// Normalizes, filters and decomposes the channels needed by `groups`, then
/// computes their features for every answered task of the session.
pub fn extract_session(session: &Session, groups: &[SignalGroup], params: &FeatureParams) -> Result<Vec<TaskFeatures>> {
    let schedule = compute_task_windows(session)?;
    for w in &schedule.warnings {
        log::warn!("{}: {w}", session.participant.id);
    }
    let prepared = prepare(session, groups, params)?;
    schedule
        .windows
        .iter()
        .map(|w| {
            let groups = window_features(&prepared, w, params).map_err(|e| match e {
                Error::Feature(m) => Error::Feature(format!("{}/{}: {m}", session.participant.id, w.task_id)),
                other => other,
            })?;
            Ok(TaskFeatures {
                participant_id: session.participant.id.clone(),
                task_id: w.task_id.clone(),
                label: w.kind,
                groups,
            })
        })
        .collect()
}

/// Task features for a whole corpus, extracted once and shared by every
/// signal configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFeatures {
    pub groups: Vec<SignalGroup>,
    pub rows: Vec<TaskFeatures>,
}

impl CorpusFeatures {
    /// Imputed matrix for `config`, columns in registry order.
    pub fn matrix(&self, config: SignalConfig) -> Result<FeatureMatrix> {
        self.raw_matrix(config)?.impute()
    }

    /// Matrix for `config` before imputation.
    pub fn raw_matrix(&self, config: SignalConfig) -> Result<FeatureMatrix> {
        if let Some(g) = config.groups().iter().find(|g| !self.groups.contains(g)) {
            return Err(Error::InvalidArgument(format!("{g:?} features were not extracted")));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureRow {
                participant_id: r.participant_id.clone(),
                task_id: r.task_id.clone(),
                label: r.label,
                values: config
                    .groups()
                    .iter()
                    .flat_map(|g| r.groups[g].iter().copied())
                    .collect(),
            })
            .collect();
        Ok(FeatureMatrix {
            config,
            names: config.feature_names(),
            rows,
        })
    }
}

/// Extracts `groups` for every session; sessions are processed in parallel
/// on the current rayon pool and rows keep the corpus order.
pub fn extract_corpus(sessions: &[Session], groups: &[SignalGroup], params: &FeatureParams) -> Result<CorpusFeatures> {
    let mut groups = groups.to_vec();
    groups.sort();
    groups.dedup();
    let per_session = sessions
        .par_iter()
        .map(|s| extract_session(s, &groups, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorpusFeatures {
        groups,
        rows: per_session.into_iter().flatten().collect(),
    })
}

/// One imputed row per answered task with the columns of `config`.
pub fn build_matrix(sessions: &[Session], config: SignalConfig, params: &FeatureParams) -> Result<FeatureMatrix> {
    extract_corpus(sessions, config.groups(), params)?.matrix(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(kind: ChannelKind, rate: f64, values: Vec<f64>) -> SampledSignal {
        SampledSignal::new(kind, rate, 0.0, values).unwrap()
    }

    fn eeg_stats(att: f64, med: f64) -> BaselineStats {
        let b = |mean| crate::preprocess::ChannelBaseline {
            mean,
            std: 1.0,
            n_samples: 10,
            window: [0.0, 30.0],
        };
        BaselineStats {
            channels: [(ChannelKind::Attention, b(att)), (ChannelKind::Meditation, b(med))].into(),
        }
    }

    fn bands_of(values: Vec<Vec<f64>>) -> [SampledSignal; 5] {
        let v: Vec<SampledSignal> = values.into_iter().map(|v| sig(ChannelKind::EegRaw, 512.0, v)).collect();
        v.try_into().unwrap()
    }

    /// Raised-cosine pulses of width 0.2 s centred on `times`.
    fn pulses(rate: f64, duration: f64, times: &[f64], amp: f64) -> SampledSignal {
        let n = (duration * rate) as usize;
        let v = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                times
                    .iter()
                    .map(|&c| {
                        let d = (t - c) / 0.1;
                        if d.abs() < 1.0 {
                            amp * 0.5 * (1.0 + (std::f64::consts::PI * d).cos())
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect();
        sig(ChannelKind::Bvp, rate, v)
    }

    fn peaks() -> PeakParams {
        FeatureParams::default().bvp_peaks
    }

    #[test]
    fn zero_eeg_gives_zero_powers_and_ratios() {
        let bands = bands_of(vec![vec![0.0; 100]; 5]);
        let att = sig(ChannelKind::Attention, 1.0, vec![50.0; 30]);
        let med = sig(ChannelKind::Meditation, 1.0, vec![50.0; 30]);
        let f = eeg_features(&bands, &att, &med, &eeg_stats(50.0, 50.0), 1e-12).unwrap();
        assert_eq!(f.len(), 31);
        assert!(f[..25].iter().all(|v| *v == 0.0));
        assert_eq!(&f[25..], &[50.0, 50.0, 0.0, 50.0, 50.0, 0.0]);
    }

    #[test]
    fn alpha_sine_power() {
        let amp = 3.0;
        let x: Vec<f64> = (0..512 * 20)
            .map(|i| amp * (2.0 * std::f64::consts::PI * 10.0 * i as f64 / 512.0).sin())
            .collect();
        let eeg = sig(ChannelKind::EegRaw, 512.0, x);
        let bands = eeg_band_split(&eeg).unwrap();
        let att = sig(ChannelKind::Attention, 1.0, vec![40.0, 60.0]);
        let med = sig(ChannelKind::Meditation, 1.0, vec![30.0]);
        let f = eeg_features(&bands.bands, &att, &med, &eeg_stats(45.0, 20.0), 1e-12).unwrap();
        let expected = amp * amp / 2.0;
        assert!((f[EegBand::Alpha.index()] - expected).abs() < 0.05 * expected);
        assert_eq!(&f[25..], &[40.0, 60.0, 5.0, 30.0, 30.0, 10.0]);
    }

    #[test]
    fn empty_slices_are_rejected() {
        let mut bands = bands_of(vec![vec![1.0; 10]; 5]);
        bands[2].values.clear();
        let att = sig(ChannelKind::Attention, 1.0, vec![1.0]);
        let r = eeg_features(&bands, &att, &att.clone(), &eeg_stats(0.0, 0.0), 1e-12);
        assert!(matches!(r, Err(Error::Feature(_))));
    }

    #[test]
    fn constant_tonic_and_zero_phasic() {
        let tonic = sig(ChannelKind::Eda, 4.0, vec![2.0; 40]);
        let phasic = sig(ChannelKind::Eda, 4.0, vec![0.0; 40]);
        let f = eda_features(&tonic, &phasic, &FeatureParams::default().scr_peaks).unwrap();
        assert_eq!(f, vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn triangular_scr() {
        let rate = 4.0;
        // unit triangle with a 4 s base centred at 5 s
        let x: Vec<f64> = (0..41)
            .map(|i| (1.0 - (i as f64 / rate - 5.0).abs() / 2.0).max(0.0))
            .collect();
        let area: f64 = x.windows(2).map(|w| 0.5 * (w[0] + w[1]) / rate).sum();
        let tonic = sig(ChannelKind::Eda, rate, vec![0.0; 41]);
        let phasic = sig(ChannelKind::Eda, rate, x);
        let f = eda_features(&tonic, &phasic, &FeatureParams::default().scr_peaks).unwrap();
        assert!((f[1] - area).abs() < 1e-12);
        assert!((f[1] - 2.0).abs() < 1e-12);
        assert_eq!(&f[2..], &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn regular_pulse_train() {
        let times: Vec<f64> = (1..10).map(|k| k as f64).collect();
        let bvp = pulses(64.0, 10.0, &times, 1.0);
        let f = heart_features(&bvp, &bvp, &peaks()).unwrap();
        assert_eq!(&f[..4], &[Some(1.0), Some(1.0), Some(1.0), Some(9.0)]);
        assert_eq!(f[4], Some(0.0));
        assert_eq!(f[5], Some(0.0));
        assert_eq!(f[6], Some(0.0));
        assert_eq!(f[7], Some(0.0));
        assert_eq!(f[8], Some(0.0));
    }

    #[test]
    fn rmssd_from_definition() {
        let r = rmssd(&[0.8, 1.0, 0.8]).unwrap();
        assert!((r - 0.2).abs() < 1e-12);
        assert_eq!(rmssd(&[1.0]), None);
        assert_eq!(sdnn(&[1.0, 1.0, 1.0]), Some(0.0));
    }

    #[test]
    fn rate_step_raises_heart_rate() {
        let rate = 64.0;
        let mut times: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let mut t = 10.0;
        while t + 0.8 < 19.5 {
            t += 0.8;
            times.push(t);
        }
        let task = pulses(rate, 20.0, &times, 1.0);
        let base = pulses(rate, 20.0, &(1..20).map(|k| k as f64).collect::<Vec<_>>(), 1.0);
        // enumerate intervals by construction, at sample resolution
        let idx: Vec<f64> = times.iter().map(|t| (t * rate).round()).collect();
        let hr: Vec<f64> = idx.windows(2).map(|w| 60.0 * rate / (w[1] - w[0])).collect();
        let expected = hr.iter().sum::<f64>() / hr.len() as f64 - 60.0;
        let f = heart_features(&task, &base, &peaks()).unwrap();
        let got = f[5].unwrap();
        assert!(got > 0.0);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn too_few_beats_are_missing() {
        let two = pulses(64.0, 5.0, &[1.0, 2.0], 1.0);
        let base = pulses(64.0, 5.0, &[1.0, 2.0, 3.0], 1.0);
        let f = heart_features(&two, &base, &peaks()).unwrap();
        assert!(f[5].is_some() && f[6].is_some());
        assert_eq!((f[7], f[8]), (None, None));
        let one = pulses(64.0, 5.0, &[2.0], 1.0);
        let f = heart_features(&one, &base, &peaks()).unwrap();
        assert_eq!((f[5], f[6], f[7], f[8]), (None, None, None, None));
        let flat = sig(ChannelKind::Bvp, 64.0, vec![0.0; 64]);
        let f = heart_features(&flat, &base, &peaks()).unwrap();
        assert_eq!(&f[..4], &[Some(0.0); 4]);
    }
}
