//! Synthetic sessions with planted class-dependent physiology, written in
//! the same on-disk format as real recordings.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::error::{Error, Result};
use crate::ingest::{write_session, Answer, Participant, Session, TaskEvent, TaskKind, TimeSpan};
use crate::preprocess::{bandpass, EegBand};
use crate::rng::{rng_for, Rng};
use crate::segment::FIXATION_SECONDS;
use crate::signal::{ChannelKind, SampledSignal};

/// Physiology while a task of one kind (or rest) is on screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassProfile {
    pub hr_bpm: f64,
    /// Standard deviation of the per-task mean heart rate.
    pub hr_jitter_bpm: f64,
    /// Beat-to-beat interval standard deviation.
    pub ibi_sd_s: f64,
    pub pulse_amp: f64,
    pub scr_rate_per_min: f64,
    pub scr_amp: f64,
    /// Relative delta, theta, alpha, beta, gamma energies.
    pub band_weights: [f64; 5],
    pub attention_mean: f64,
    pub meditation_mean: f64,
}

impl Default for ClassProfile {
    fn default() -> Self {
        ClassProfile::prose()
    }
}

impl ClassProfile {
    pub fn rest() -> ClassProfile {
        ClassProfile {
            hr_bpm: 70.0,
            hr_jitter_bpm: 1.0,
            ibi_sd_s: 0.04,
            pulse_amp: 1.0,
            scr_rate_per_min: 2.0,
            scr_amp: 0.2,
            band_weights: [0.3, 0.2, 0.3, 0.15, 0.05],
            attention_mean: 45.0,
            meditation_mean: 60.0,
        }
    }

    pub fn prose() -> ClassProfile {
        ClassProfile {
            hr_bpm: 75.0,
            hr_jitter_bpm: 2.0,
            ibi_sd_s: 0.04,
            pulse_amp: 1.0,
            scr_rate_per_min: 3.0,
            scr_amp: 0.25,
            band_weights: [0.3, 0.2, 0.25, 0.2, 0.05],
            attention_mean: 55.0,
            meditation_mean: 50.0,
        }
    }

    /// Prose physiology with a faster, steadier heart.
    pub fn code() -> ClassProfile {
        ClassProfile {
            hr_bpm: 85.0,
            ibi_sd_s: 0.02,
            ..ClassProfile::prose()
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let nonneg = [
            self.hr_jitter_bpm,
            self.ibi_sd_s,
            self.pulse_amp,
            self.scr_rate_per_min,
            self.scr_amp,
        ];
        let weights_ok = self.band_weights.iter().all(|w| *w >= 0.0) && self.band_weights.iter().sum::<f64>() > 0.0;
        if !(self.hr_bpm > 0.0) || nonneg.iter().any(|v| !(*v >= 0.0)) || !weights_ok {
            return Err(Error::Synth(format!("{what} profile has negative or zero rates")));
        }
        if !(0.0..=100.0).contains(&self.attention_mean) || !(0.0..=100.0).contains(&self.meditation_mean) {
            return Err(Error::Synth(format!(
                "{what} profile attention/meditation outside 0-100"
            )));
        }
        Ok(())
    }

    fn normalized_weights(&self) -> [f64; 5] {
        let s: f64 = self.band_weights.iter().sum();
        self.band_weights.map(|w| w / s)
    }

    /// `self` moved a fraction `t` of the way towards `other`.
    pub fn lerp(&self, other: &ClassProfile, t: f64) -> ClassProfile {
        let l = |a: f64, b: f64| a + t * (b - a);
        let mut band_weights = [0.0; 5];
        for (k, w) in band_weights.iter_mut().enumerate() {
            *w = l(self.band_weights[k], other.band_weights[k]);
        }
        ClassProfile {
            hr_bpm: l(self.hr_bpm, other.hr_bpm),
            hr_jitter_bpm: l(self.hr_jitter_bpm, other.hr_jitter_bpm),
            ibi_sd_s: l(self.ibi_sd_s, other.ibi_sd_s),
            pulse_amp: l(self.pulse_amp, other.pulse_amp),
            scr_rate_per_min: l(self.scr_rate_per_min, other.scr_rate_per_min),
            scr_amp: l(self.scr_amp, other.scr_amp),
            band_weights,
            attention_mean: l(self.attention_mean, other.attention_mean),
            meditation_mean: l(self.meditation_mean, other.meditation_mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpaModel {
    pub mean: f64,
    pub sd: f64,
    /// Scale each participant's CODE effect by the normal CDF of their
    /// standardized GPA.
    pub linked_effect: bool,
}

impl Default for GpaModel {
    fn default() -> Self {
        GpaModel {
            mean: 3.0,
            sd: 0.25,
            linked_effect: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub seed: u64,
    pub code: ClassProfile,
    pub prose: ClassProfile,
    pub rest: ClassProfile,
    pub gpa: GpaModel,
    pub unanswered_prob: f64,
    /// Answer delay range after task start, shared by both kinds so window
    /// length carries no label information.
    pub answer_delay_s: [f64; 2],
    pub runs: u32,
    pub code_per_run: u32,
    pub prose_per_run: u32,
    pub baseline_s: f64,
    pub channels: Vec<ChannelKind>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_participants: 28,
            seed: 0,
            code: ClassProfile::code(),
            prose: ClassProfile::prose(),
            rest: ClassProfile::rest(),
            gpa: GpaModel::default(),
            unanswered_prob: 0.0,
            answer_delay_s: [12.0, 28.0],
            runs: 3,
            code_per_run: 3,
            prose_per_run: 6,
            baseline_s: 120.0,
            channels: ChannelKind::ALL.to_vec(),
        }
    }
}

const EPOCH: f64 = 1_600_000_000.0;
const LEAD_IN_S: f64 = 10.0;
const TAIL_S: f64 = 10.0;
const EDA_NOISE: f64 = 0.005;
const BVP_NOISE: f64 = 0.01;
const EEG_SCALE: f64 = 20.0;
const ATTENTION_AR: f64 = 0.8;

/// SCR kernel time constants; the same biexponential the decomposition
/// models.
const SCR_TAU0: f64 = 2.0;
const SCR_TAU1: f64 = 0.7;

impl SynthConfig {
    /// Both kinds share the PROSE profile.
    pub fn null() -> SynthConfig {
        SynthConfig {
            code: ClassProfile::prose(),
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_participants < 2 {
            return Err(Error::Synth(format!(
                "need at least 2 participants, got {}",
                self.n_participants
            )));
        }
        self.code.validate("CODE")?;
        self.prose.validate("PROSE")?;
        self.rest.validate("rest")?;
        let [lo, hi] = self.answer_delay_s;
        let shortest = TaskKind::Prose
            .nominal_duration()
            .min(TaskKind::Code.nominal_duration());
        if !(lo > 0.0 && lo <= hi && hi < shortest) {
            return Err(Error::Synth(format!(
                "answer delay range [{lo}, {hi}] must lie inside (0, {shortest}) s"
            )));
        }
        if !(0.0..=1.0).contains(&self.unanswered_prob) {
            return Err(Error::Synth("unanswered probability outside [0, 1]".into()));
        }
        if self.runs == 0 || self.code_per_run + self.prose_per_run == 0 {
            return Err(Error::Synth("empty task schedule".into()));
        }
        if self.baseline_s < 30.0 {
            return Err(Error::Synth("baseline video shorter than 30 s".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Synth("no channels requested".into()));
        }
        if !(self.gpa.sd >= 0.0) {
            return Err(Error::Synth("GPA standard deviation must be non-negative".into()));
        }
        Ok(())
    }

    pub fn events_per_participant(&self) -> usize {
        (self.runs * (self.code_per_run + self.prose_per_run)) as usize
    }

    pub fn participant_id(&self, index: usize) -> String {
        let width = self.n_participants.to_string().len().max(2);
        format!("P{:0width$}", index + 1)
    }
}

/// A stretch of the recording following one profile.
struct Segment {
    start: f64,
    end: f64,
    profile: ClassProfile,
}

struct Timeline {
    t0: f64,
    t_end: f64,
    rest: ClassProfile,
    segments: Vec<Segment>,
}

impl Timeline {
    fn at(&self, t: f64) -> &ClassProfile {
        let i = self.segments.partition_point(|s| s.start <= t);
        match i.checked_sub(1).map(|k| &self.segments[k]) {
            Some(s) if t < s.end => &s.profile,
            _ => &self.rest,
        }
    }
}

fn quantize(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s
}

fn sample_times(t0: f64, t_end: f64, rate: f64) -> usize {
    ((t_end - t0) * rate).floor() as usize + 1
}

fn bvp(tl: &Timeline, rng: &mut Rng, beats: &mut Vec<f64>) -> Vec<f64> {
    let rate = ChannelKind::Bvp.nominal_rate();
    let n = sample_times(tl.t0, tl.t_end, rate);
    let mut out = vec![0.0; n];
    let unit = Normal::<f64>::new(0.0, 1.0).unwrap();
    let mut t = tl.t0;
    while t < tl.t_end {
        let p = tl.at(t);
        let mean = 60.0 / p.hr_bpm;
        let ibi = loop {
            let v = mean + p.ibi_sd_s * unit.sample(rng);
            if v > 0.3 {
                break v;
            }
        };
        let amp = p.pulse_amp * (1.0 + 0.05 * unit.sample(rng));
        if t + ibi <= tl.t_end {
            beats.push(t + ibi / 2.0);
        }
        // one raised-cosine period spanning the beat, peaking mid-beat
        let first = ((t - tl.t0) * rate).ceil() as usize;
        let last = (((t + ibi - tl.t0) * rate).floor() as usize).min(n - 1);
        for (i, v) in out.iter_mut().enumerate().take(last + 1).skip(first) {
            let phase = (tl.t0 + i as f64 / rate - t) / ibi;
            *v += amp * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * phase).cos());
        }
        t += ibi;
    }
    out.iter()
        .map(|v| quantize(v + BVP_NOISE * unit.sample(rng), 4))
        .collect()
}

/// Delay from SCR onset to the kernel's peak.
pub fn scr_peak_delay() -> f64 {
    SCR_TAU0 * SCR_TAU1 / (SCR_TAU0 - SCR_TAU1) * (SCR_TAU0 / SCR_TAU1).ln()
}

fn scr_kernel(t: f64) -> f64 {
    let h = |t: f64| (-t / SCR_TAU0).exp() - (-t / SCR_TAU1).exp();
    h(t) / h(scr_peak_delay())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scr {
    pub onset: f64,
    /// Peak height above the tonic level, before noise.
    pub amplitude: f64,
}

/// Events planted in a generated session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    /// Time of each complete pulse's maximum, in BVP order.
    pub beats: Vec<f64>,
    pub scrs: Vec<Scr>,
}

fn eda(tl: &Timeline, rng: &mut Rng, scrs: &mut Vec<Scr>) -> Vec<f64> {
    let rate = ChannelKind::Eda.nominal_rate();
    let n = sample_times(tl.t0, tl.t_end, rate);
    let unit = Normal::<f64>::new(0.0, 1.0).unwrap();
    let mut level = 2.0 + 0.5 * unit.sample(rng).abs();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        level = (level + 0.002 * unit.sample(rng)).max(0.5);
        out.push(level);
    }
    let kernel_len = (20.0 * rate) as usize;
    for i in 0..n {
        let p = tl.at(tl.t0 + i as f64 / rate);
        if rng.random::<f64>() < p.scr_rate_per_min / 60.0 / rate {
            let amp = p.scr_amp * rng.random_range(0.5..1.5);
            scrs.push(Scr {
                onset: tl.t0 + i as f64 / rate,
                amplitude: amp,
            });
            for k in 0..kernel_len.min(n - i) {
                out[i + k] += amp * scr_kernel(k as f64 / rate);
            }
        }
    }
    out.iter()
        .map(|v| quantize(v + EDA_NOISE * unit.sample(rng), 4))
        .collect()
}

fn eeg(tl: &Timeline, rng: &mut Rng) -> Result<Vec<f64>> {
    let rate = ChannelKind::EegRaw.nominal_rate();
    let n = sample_times(tl.t0, tl.t_end, rate);
    let unit = Normal::<f64>::new(0.0, 1.0).unwrap();
    let mut out = vec![0.0; n];
    let weights: Vec<[f64; 5]> = (0..n)
        .map(|i| tl.at(tl.t0 + i as f64 / rate).normalized_weights())
        .collect();
    for band in EegBand::ALL {
        let white: Vec<f64> = (0..n).map(|_| unit.sample(rng)).collect();
        let noise = SampledSignal::new(ChannelKind::EegRaw, rate, tl.t0, white)?;
        let b = band.band();
        let limited = bandpass(&noise, b.low_hz, b.high_hz)?.values;
        let rms = (limited.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .sqrt()
            .max(1e-12);
        for ((o, v), w) in out.iter_mut().zip(&limited).zip(&weights) {
            *o += v / rms * w[band.index()].sqrt();
        }
    }
    Ok(out.iter().map(|v| quantize(EEG_SCALE * v, 2)).collect())
}

fn esense(tl: &Timeline, rng: &mut Rng, mean_of: fn(&ClassProfile) -> f64) -> Vec<f64> {
    let n = sample_times(tl.t0, tl.t_end, 1.0);
    let unit = Normal::<f64>::new(0.0, 1.0).unwrap();
    let mut dev = 0.0;
    (0..n)
        .map(|i| {
            dev = ATTENTION_AR * dev + 6.0 * unit.sample(rng);
            (mean_of(tl.at(tl.t0 + i as f64)) + dev).round().clamp(0.0, 100.0)
        })
        .collect()
}

/// One participant's session, fully in memory.
pub fn generate_session(config: &SynthConfig, index: usize) -> Result<Session> {
    generate_session_with_truth(config, index).map(|(s, _)| s)
}

/// [`generate_session`] plus the beats and SCRs it planted; both are empty
/// when the channel is not generated.
pub fn generate_session_with_truth(config: &SynthConfig, index: usize) -> Result<(Session, GroundTruth)> {
    config.validate()?;
    let mut rng = rng_for(config.seed, &[index as u64]);
    let unit = Normal::<f64>::new(0.0, 1.0).unwrap();

    let gpa = (config.gpa.mean + config.gpa.sd * unit.sample(&mut rng)).clamp(0.0, 4.0);
    let gpa = quantize(gpa, 2);
    let code = if config.gpa.linked_effect && config.gpa.sd > 0.0 {
        let strength = NormalDist::standard().cdf((gpa - config.gpa.mean) / config.gpa.sd);
        config.prose.lerp(&config.code, strength)
    } else {
        config.code.clone()
    };
    // participant-level offsets shared by every segment, baseline included
    let hr_offset = 4.0 * unit.sample(&mut rng);
    let attention_offset = 5.0 * unit.sample(&mut rng);
    let personal = |p: &ClassProfile| ClassProfile {
        hr_bpm: (p.hr_bpm + hr_offset).max(40.0),
        attention_mean: (p.attention_mean + attention_offset).clamp(0.0, 100.0),
        ..p.clone()
    };
    let (code, prose, rest) = (personal(&code), personal(&config.prose), personal(&config.rest));

    let t0 = EPOCH + 10_000.0 * index as f64;
    let baseline = TimeSpan {
        start: t0 + LEAD_IN_S,
        end: t0 + LEAD_IN_S + config.baseline_s,
    };
    let t_start_experiment = baseline.end + 5.0;

    let mut events = Vec::with_capacity(config.events_per_participant());
    let mut segments = Vec::new();
    let (mut n_code, mut n_prose) = (0, 0);
    let mut t = t_start_experiment;
    for run in 1..=config.runs {
        if run > 1 {
            t += FIXATION_SECONDS;
        }
        let mut kinds: Vec<TaskKind> = std::iter::repeat_n(TaskKind::Code, config.code_per_run as usize)
            .chain(std::iter::repeat_n(TaskKind::Prose, config.prose_per_run as usize))
            .collect();
        kinds.shuffle(&mut rng);
        for (pos, kind) in kinds.into_iter().enumerate() {
            let task_id = match kind {
                TaskKind::Code => {
                    n_code += 1;
                    format!("code{n_code:02}")
                }
                TaskKind::Prose => {
                    n_prose += 1;
                    format!("prose{n_prose:02}")
                }
            };
            let [lo, hi] = config.answer_delay_s;
            let delay = if lo < hi { rng.random_range(lo..hi) } else { lo };
            let answered = rng.random::<f64>() >= config.unanswered_prob;
            let accept = rng.random::<bool>();
            let base = if kind == TaskKind::Code { &code } else { &prose };
            let task_hr = base.hr_bpm + base.hr_jitter_bpm * unit.sample(&mut rng);
            let t_answer = quantize(t + delay, 3);
            segments.push(Segment {
                start: t,
                end: if answered {
                    t_answer
                } else {
                    t + kind.nominal_duration()
                },
                profile: ClassProfile {
                    hr_bpm: task_hr.max(40.0),
                    ..base.clone()
                },
            });
            events.push(TaskEvent {
                task_id,
                kind,
                session_index: run,
                position_in_session: pos as u32 + 1,
                t_answer: answered.then_some(t_answer),
                answer: match (answered, accept) {
                    (false, _) => Answer::None,
                    (true, true) => Answer::Accept,
                    (true, false) => Answer::Reject,
                },
            });
            t += kind.nominal_duration();
        }
    }
    let timeline = Timeline {
        t0,
        t_end: t + TAIL_S,
        rest,
        segments,
    };

    let mut truth = GroundTruth::default();
    let mut channels = BTreeMap::new();
    for &kind in &config.channels {
        // each channel draws from its own stream so channel subsets agree
        let mut crng = rng_for(config.seed, &[index as u64, kind as u64 + 1]);
        let values = match kind {
            ChannelKind::Bvp => bvp(&timeline, &mut crng, &mut truth.beats),
            ChannelKind::Eda => eda(&timeline, &mut crng, &mut truth.scrs),
            ChannelKind::EegRaw => eeg(&timeline, &mut crng)?,
            ChannelKind::Attention => esense(&timeline, &mut crng, |p| p.attention_mean),
            ChannelKind::Meditation => esense(&timeline, &mut crng, |p| p.meditation_mean),
        };
        channels.insert(kind, SampledSignal::new(kind, kind.nominal_rate(), t0, values)?);
    }

    let session = Session {
        participant: Participant {
            id: config.participant_id(index),
            gpa: Some(gpa),
            sex: None,
        },
        t_start_experiment,
        baseline,
        channels,
        events,
    };
    Ok((session, truth))
}

/// All participants, generated in parallel on the current rayon pool.
pub fn generate_corpus(config: &SynthConfig) -> Result<Vec<Session>> {
    config.validate()?;
    (0..config.n_participants)
        .into_par_iter()
        .map(|i| generate_session(config, i))
        .collect()
}

/// Writes one directory per session, named after the participant.
pub fn write_corpus(root: &Path, sessions: &[Session]) -> Result<()> {
    sessions
        .par_iter()
        .try_for_each(|s| write_session(&root.join(&s.participant.id), s))
}

/// Generates and writes a corpus; returns the sessions written.
pub fn synth_corpus(config: &SynthConfig, root: &Path) -> Result<Vec<Session>> {
    let sessions = generate_corpus(config)?;
    write_corpus(root, &sessions)?;
    Ok(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::compute_task_windows;

    fn small() -> SynthConfig {
        SynthConfig {
            n_participants: 3,
            channels: vec![ChannelKind::Bvp, ChannelKind::Eda, ChannelKind::Attention],
            ..SynthConfig::default()
        }
    }

    #[test]
    fn scr_kernel_peaks_at_one() {
        let peak_t = scr_peak_delay();
        assert!((scr_kernel(peak_t) - 1.0).abs() < 1e-12);
        assert!(scr_kernel(peak_t - 0.1) < 1.0 && scr_kernel(peak_t + 0.1) < 1.0);
        assert_eq!(scr_kernel(0.0), 0.0);
    }

    #[test]
    fn schedule_shape() {
        let s = generate_session(&small(), 0).unwrap();
        assert_eq!(s.events.len(), 27);
        let code = s.events.iter().filter(|e| e.kind == TaskKind::Code).count();
        assert_eq!(code, 9);
        let sch = compute_task_windows(&s).unwrap();
        assert_eq!(sch.windows.len(), 27);
        assert!(sch.warnings.is_empty());
        let gpa = s.participant.gpa.unwrap();
        assert!((0.0..=4.0).contains(&gpa));
    }

    #[test]
    fn deterministic_and_subset_consistent() {
        let a = generate_session(&small(), 1).unwrap();
        let b = generate_session(&small(), 1).unwrap();
        assert_eq!(a, b);
        let only_bvp = SynthConfig {
            channels: vec![ChannelKind::Bvp],
            ..small()
        };
        let c = generate_session(&only_bvp, 1).unwrap();
        assert_eq!(c.channels[&ChannelKind::Bvp], a.channels[&ChannelKind::Bvp]);
        assert_eq!(c.events, a.events);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = SynthConfig {
            n_participants: 1,
            ..small()
        };
        assert!(matches!(generate_corpus(&bad), Err(Error::Synth(_))));
        let bad = SynthConfig {
            answer_delay_s: [12.0, 45.0],
            ..small()
        };
        assert!(bad.validate().is_err());
        let mut bad = small();
        bad.code.hr_bpm = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn unanswered_rate_passes_through() {
        let cfg = SynthConfig {
            n_participants: 40,
            unanswered_prob: 0.08,
            channels: vec![ChannelKind::Attention],
            ..SynthConfig::default()
        };
        let sessions = generate_corpus(&cfg).unwrap();
        let total: usize = sessions.iter().map(|s| s.events.len()).sum();
        let none = sessions
            .iter()
            .flat_map(|s| &s.events)
            .filter(|e| e.answer == Answer::None)
            .count();
        let p = none as f64 / total as f64;
        // binomial sd at n = 1080 is about 0.008
        assert!((p - 0.08).abs() < 0.03, "{p}");
    }
}
