use biocomp::features::{extract_corpus, heart_features, FeatureParams, SignalGroup};
use biocomp::learn::{balanced_accuracy, kendall_tau, Confusion, Mlp, Samples};
use biocomp::preprocess::{decompose_eda, zscore, Band, BaselineStats, ChannelBaseline, CvxEdaParams, SosFilter};
use biocomp::rng::rng_for;
use biocomp::segment::compute_task_windows;
use biocomp::synth::{generate_session, SynthConfig};
use biocomp::{ChannelKind, SampledSignal, SignalConfig};
use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

fn bandpass_filter() -> SosFilter {
    SosFilter::butterworth(4, Band::new(1.0, Some(8.0)), 64.0).unwrap()
}

fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let (mut s, mut tx, mut ty, mut n0) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
            let dy = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
            s += dx * dy;
            tx += f64::from(dx == 0.0);
            ty += f64::from(dy == 0.0);
            n0 += 1.0;
        }
    }
    s / ((n0 - tx) * (n0 - ty)).sqrt()
}

/// Pulse train with one raised-cosine beat per interval.
fn pulses(ibis: &[f64], amps: &[f64], rate: f64) -> SampledSignal {
    let total: f64 = ibis.iter().sum();
    let mut v = vec![0.0; (total * rate) as usize + 1];
    let mut t = 0.0;
    for (&ibi, &a) in ibis.iter().zip(amps) {
        for (i, x) in v.iter_mut().enumerate() {
            let phase = (i as f64 / rate - t) / ibi;
            if (0.0..1.0).contains(&phase) {
                *x += a * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * phase).cos());
            }
        }
        t += ibi;
    }
    SampledSignal::new(ChannelKind::Bvp, rate, 0.0, v).unwrap()
}

proptest! {
    #[test]
    fn bandpass_is_linear(
        seed in any::<u64>(),
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
        n in 8usize..600,
    ) {
        let mut rng = rng_for(seed, &[]);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = bandpass_filter();
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(x, y)| a * x + b * y).collect();
        let lhs = f.filtfilt(&mixed);
        let (fx, fy) = (f.filtfilt(&x), f.filtfilt(&y));
        for i in 0..n {
            prop_assert!((lhs[i] - (a * fx[i] + b * fy[i])).abs() <= 1e-9 * (1.0 + a.abs() + b.abs()));
        }
    }

    #[test]
    fn zero_phase_keeps_symmetric_pulse_centred(center in 300usize..700, width in 1.0f64..6.0) {
        let x: Vec<f64> = (0..1000)
            .map(|i| (-((i as f64 - center as f64) / width).powi(2) / 2.0).exp())
            .collect();
        let y = bandpass_filter().filtfilt(&x);
        let energy: f64 = y.iter().map(|v| v * v).sum();
        let com: f64 = y.iter().enumerate().map(|(i, v)| i as f64 * v * v).sum::<f64>() / energy;
        prop_assert!((com - center as f64).abs() < 1.0, "centre {center}, mass at {com}");
    }

    #[test]
    fn unit_baseline_zscore_is_identity(values in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let s = SampledSignal::new(ChannelKind::Eda, 4.0, 10.0, values).unwrap();
        let stats = BaselineStats {
            channels: [(ChannelKind::Eda, ChannelBaseline { mean: 0.0, std: 1.0, n_samples: 2, window: [0.0, 1.0] })].into(),
        };
        prop_assert_eq!(zscore(&s, &stats).unwrap(), s);
    }

    #[test]
    fn kendall_matches_pairwise_definition(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 2..40),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let expected = brute_tau_b(&x, &y);
        match kendall_tau(&x, &y) {
            Ok(c) => {
                prop_assert!((c.tau - expected).abs() < 1e-12, "{} vs {expected}", c.tau);
                prop_assert!((0.0..=1.0).contains(&c.p_value));
                let swapped = kendall_tau(&y, &x).unwrap();
                prop_assert!((swapped.tau - c.tau).abs() < 1e-12);
                prop_assert!((swapped.p_value - c.p_value).abs() < 1e-12);
                // Strictly increasing maps keep every pair's ordering.
                let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + (0.5 * v).exp()).collect();
                let monotone = kendall_tau(&fx, &y).unwrap();
                prop_assert!((monotone.tau - c.tau).abs() < 1e-12);
            }
            Err(_) => prop_assert!(expected.is_nan()),
        }
    }

    #[test]
    fn bac_ignores_which_class_is_positive(tp in 0u32..50, fn_ in 0u32..50, fp in 0u32..50, tn in 0u32..50) {
        let c = Confusion::new(tp, fn_, fp, tn);
        prop_assert_eq!(balanced_accuracy(&c), balanced_accuracy(&c.swapped()));
    }

    #[test]
    fn bvp_features_scale_with_amplitude(
        seed in any::<u64>(),
        c in 0.1f64..10.0,
    ) {
        let mut rng = rng_for(seed, &[]);
        let ibis: Vec<f64> = (0..40).map(|_| rng.random_range(0.6..1.1)).collect();
        let amps: Vec<f64> = (0..40).map(|_| rng.random_range(0.8..1.2)).collect();
        let task = pulses(&ibis, &amps, 64.0);
        let base = pulses(&ibis[..20], &amps[..20], 64.0);
        let scaled = |s: &SampledSignal| s.with_values(s.values.iter().map(|v| c * v).collect());
        let peaks = FeatureParams::default().bvp_peaks;
        let f = heart_features(&task, &base, &peaks).unwrap();
        let g = heart_features(&scaled(&task), &scaled(&base), &peaks).unwrap();
        for k in 0..5 {
            let (a, b) = (f[k].unwrap(), g[k].unwrap());
            prop_assert!((b - c * a).abs() <= 1e-9 * (1.0 + (c * a).abs()), "amplitude feature {k}: {b} vs {}", c * a);
        }
        for k in 5..9 {
            let (a, b) = (f[k].unwrap(), g[k].unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "interval feature {k}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mlp_training_loss_never_increases(seed in any::<u64>(), hidden in 1usize..9, sep in 0.0f64..3.0) {
        let mut rng = rng_for(seed, &[]);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let label = i % 2 == 0;
            let shift = if label { sep } else { 0.0 };
            rows.push((0..4).map(|_| unit.sample(&mut rng) + shift).collect::<Vec<f64>>());
            labels.push(label);
        }
        let data = Samples::from_rows(&rows, labels).unwrap();
        let mut net = Mlp::init(4, hidden, &mut rng);
        let history = net.train(&data, 60);
        prop_assert!(history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn cvxeda_driver_is_nonnegative_and_objective_decreases(seed in any::<u64>(), n_scr in 0usize..6) {
        let mut rng = rng_for(seed, &[]);
        let n = 4 * 90;
        let tonic = rng.random_range(1.0..5.0);
        let mut x: Vec<f64> = (0..n).map(|i| tonic + 0.002 * i as f64).collect();
        for _ in 0..n_scr {
            let onset = rng.random_range(0..n - 40);
            let amp = rng.random_range(0.05..0.5);
            for (k, v) in x[onset..].iter_mut().enumerate() {
                let t = k as f64 / 4.0;
                *v += amp * 2.5 * ((-t / 2.0).exp() - (-t / 0.7).exp());
            }
        }
        let unit = Normal::new(0.0, 0.005).unwrap();
        x.iter_mut().for_each(|v| *v += unit.sample(&mut rng));
        let s = SampledSignal::new(ChannelKind::Eda, 4.0, 0.0, x).unwrap();
        let d = decompose_eda(&s, &CvxEdaParams::default()).unwrap();
        prop_assert!(d.driver.iter().all(|&v| v >= 0.0));
        let h = &d.diagnostics.objective_history;
        for w in h.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "objective rose: {:?}", h);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn task_windows_are_ordered_and_disjoint(seed in any::<u64>(), unanswered in 0.0f64..0.5) {
        let cfg = SynthConfig {
            n_participants: 2,
            seed,
            unanswered_prob: unanswered,
            channels: vec![ChannelKind::Attention],
            ..SynthConfig::default()
        };
        let session = generate_session(&cfg, 0).unwrap();
        let schedule = compute_task_windows(&session).unwrap();
        let answered = session.events.iter().filter(|e| e.is_answered()).count();
        prop_assert_eq!(schedule.windows.len(), answered);
        for w in &schedule.windows {
            prop_assert!(w.t_start < w.t_end);
        }
        for pair in schedule.windows.windows(2) {
            prop_assert!(pair[0].t_end <= pair[1].t_start);
        }
    }
}

#[test]
fn features_do_not_depend_on_session_order() {
    let cfg = SynthConfig {
        n_participants: 3,
        seed: 5,
        unanswered_prob: 0.1,
        channels: vec![ChannelKind::Bvp],
        ..SynthConfig::default()
    };
    let sessions: Vec<_> = (0..3).map(|i| generate_session(&cfg, i).unwrap()).collect();
    let params = FeatureParams::default();
    let forward = extract_corpus(&sessions, &[SignalGroup::Heart], &params).unwrap();
    let reversed: Vec<_> = sessions.iter().rev().cloned().collect();
    let backward = extract_corpus(&reversed, &[SignalGroup::Heart], &params).unwrap();

    let key = |r: &biocomp::features::TaskFeatures| (r.participant_id.clone(), r.task_id.clone());
    let mut a = forward.rows.clone();
    let mut b = backward.rows.clone();
    a.sort_by_key(key);
    b.sort_by_key(key);
    assert_eq!(a, b);

    let m = forward.matrix(SignalConfig::Heart).unwrap();
    assert!(!m.has_missing());
    assert_eq!(m.n_rows(), forward.rows.len());
}
