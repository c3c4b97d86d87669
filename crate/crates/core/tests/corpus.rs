use biocomp::features::{detect_with, FeatureParams};
use biocomp::ingest::{load_channel, load_corpus, load_session, validate_corpus, write_channel, write_session};
use biocomp::preprocess::{bandpass, decompose_eda, CvxEdaParams, BVP_BAND};
use biocomp::segment::{compute_task_windows, slice};
use biocomp::synth::{generate_session, generate_session_with_truth, scr_peak_delay, synth_corpus, SynthConfig};
use biocomp::{ChannelKind, SampledSignal};

fn config(n: usize, channels: &[ChannelKind]) -> SynthConfig {
    SynthConfig {
        n_participants: n,
        seed: 11,
        channels: channels.to_vec(),
        ..SynthConfig::default()
    }
}

#[test]
fn channel_round_trip_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let values = vec![0.1, -1.0 / 3.0, 1e-300, 6.02e23, f64::MIN_POSITIVE, 0.0];
    let s = SampledSignal::new(ChannelKind::Eda, 4.0, 1_600_000_000.123, values).unwrap();
    let path = tmp.path().join("EDA.csv");
    write_channel(&path, &s).unwrap();
    let back = load_channel(&path, ChannelKind::Eda).unwrap();
    assert_eq!(back, s);
    for i in 1..back.len() {
        assert!(back.timestamp(i) > back.timestamp(i - 1));
    }
}

#[test]
fn session_and_corpus_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(3, &[ChannelKind::Bvp, ChannelKind::Eda, ChannelKind::Attention]);
    let session = generate_session(&cfg, 1).unwrap();
    write_session(&tmp.path().join("one"), &session).unwrap();
    assert_eq!(load_session(&tmp.path().join("one")).unwrap(), session);

    let root = tmp.path().join("corpus");
    let written = synth_corpus(&cfg, &root).unwrap();
    assert_eq!(load_corpus(&root).unwrap(), written);
    assert_eq!(written[1], session);
}

#[test]
fn synthetic_corpus_validates_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        unanswered_prob: 0.08,
        ..config(28, &[ChannelKind::Eda])
    };
    synth_corpus(&cfg, tmp.path()).unwrap();
    let report = validate_corpus(tmp.path());
    assert_eq!(report.error_count(), 0, "{report:?}");
    assert!(report.analyzable());
    assert_eq!(report.sessions.len(), 28);

    let sessions = load_corpus(tmp.path()).unwrap();
    let events: usize = sessions.iter().map(|s| s.events.len()).sum();
    assert_eq!(events, 756);
    let unanswered = sessions
        .iter()
        .flat_map(|s| &s.events)
        .filter(|e| !e.is_answered())
        .count() as f64;
    // Binomial(756, 0.08): mean 60.5, sd 7.5; allow four sd.
    let (mean, sd) = (756.0 * 0.08, (756.0f64 * 0.08 * 0.92).sqrt());
    assert!((unanswered - mean).abs() < 4.0 * sd, "{unanswered} unanswered");
}

#[test]
fn bvp_peaks_match_injected_beats() {
    let params = FeatureParams::default();
    let cfg = config(4, &[ChannelKind::Bvp]);
    for index in 0..4 {
        let (session, truth) = generate_session_with_truth(&cfg, index).unwrap();
        let bvp = session.channel(ChannelKind::Bvp).unwrap();
        let filtered = bandpass(bvp, BVP_BAND.low_hz, BVP_BAND.high_hz).unwrap();
        let schedule = compute_task_windows(&session).unwrap();
        for w in &schedule.windows {
            let cut = slice(&filtered, w.t_start, w.t_end).unwrap();
            let peaks = detect_with(&cut.values, cut.sample_rate, &params.bvp_peaks);
            let detected: Vec<f64> = peaks.iter().map(|p| cut.timestamp(p.index)).collect();
            let injected: Vec<f64> = truth
                .beats
                .iter()
                .copied()
                .filter(|t| (w.t_start..w.t_end).contains(t))
                .collect();
            // Beats too close to the window edges cannot form a local maximum.
            let (lo, hi) = (w.t_start + 0.5, w.t_end - 0.5);
            let near = |t: f64, set: &[f64]| set.iter().any(|u| (u - t).abs() < 0.05);
            for &t in injected.iter().filter(|t| (lo..hi).contains(*t)) {
                assert!(
                    near(t, &detected),
                    "participant {index} task {}: beat at {t} missed",
                    w.task_id
                );
            }
            for &t in detected.iter().filter(|t| (lo..hi).contains(*t)) {
                assert!(
                    near(t, &injected),
                    "participant {index} task {}: spurious peak at {t}",
                    w.task_id
                );
            }
            assert!(detected.len().abs_diff(injected.len()) <= 2);
        }
    }
}

#[test]
fn scr_onsets_are_recoverable_from_phasic_maxima() {
    let cfg = config(2, &[ChannelKind::Eda]);
    let mut checked = 0;
    for index in 0..2 {
        let (session, truth) = generate_session_with_truth(&cfg, index).unwrap();
        let eda = session.channel(ChannelKind::Eda).unwrap();
        let d = decompose_eda(eda, &CvxEdaParams::default()).unwrap();
        let phasic = &d.phasic;
        for (k, scr) in truth.scrs.iter().enumerate() {
            // Isolated responses only, so the maximum belongs to this one.
            let isolated = truth
                .scrs
                .iter()
                .enumerate()
                .all(|(j, o)| j == k || (o.onset - scr.onset).abs() > 12.0);
            if !isolated || scr.onset - 5.0 < phasic.start_time || scr.onset + 10.0 > phasic.end_time() {
                continue;
            }
            let (a, b) = phasic.index_range(scr.onset - 5.0, scr.onset + 10.0).unwrap();
            let argmax = (a..=b)
                .max_by(|&i, &j| phasic.values[i].total_cmp(&phasic.values[j]))
                .unwrap();
            let peak = scr.onset + scr_peak_delay();
            let found = phasic.timestamp(argmax);
            assert!(
                (found - peak).abs() <= 2.0,
                "participant {index}: SCR peak {peak}, phasic max {found}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} isolated responses");
}
