use std::hint::black_box;

use biocomp::features::{extract_session, FeatureParams, SignalGroup};
use biocomp::learn::{train, Family};
use biocomp::preprocess::{bandpass, decompose_eda, eeg_band_split, CvxEdaParams};
use biocomp::ChannelKind;
use biocomp_bench::{blobs, channel, session};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn filters(c: &mut Criterion) {
    let s = session(1);
    let eeg = channel(&s, ChannelKind::EegRaw, 60.0);
    let bvp = channel(&s, ChannelKind::Bvp, 600.0);
    c.bench_function("eeg_band_split_60s", |b| {
        b.iter(|| eeg_band_split(black_box(&eeg)).unwrap())
    });
    c.bench_function("bvp_bandpass_600s", |b| {
        b.iter(|| bandpass(black_box(&bvp), 1.0, Some(8.0)).unwrap())
    });
}

fn cvxeda(c: &mut Criterion) {
    let s = session(2);
    let mut group = c.benchmark_group("cvxeda");
    group.sample_size(10);
    for seconds in [120.0, 600.0] {
        let eda = channel(&s, ChannelKind::Eda, seconds);
        group.bench_with_input(BenchmarkId::from_parameter(seconds), &eda, |b, eda| {
            b.iter(|| decompose_eda(black_box(eda), &CvxEdaParams::default()).unwrap())
        });
    }
    group.finish();
}

fn features(c: &mut Criterion) {
    let s = session(3);
    let params = FeatureParams::default();
    let mut group = c.benchmark_group("extract_session");
    group.sample_size(10);
    group.bench_function("heart", |b| {
        b.iter(|| extract_session(black_box(&s), &[SignalGroup::Heart], &params).unwrap())
    });
    group.bench_function("all", |b| {
        b.iter(|| extract_session(black_box(&s), &SignalGroup::ALL, &params).unwrap())
    });
    group.finish();
}

fn classifiers(c: &mut Criterion) {
    let data = blobs(540, 46, 0.5, 4);
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for family in Family::ALL {
        let param = family.default_grid(data.d)[0];
        group.bench_function(family.key(), |b| {
            b.iter(|| train(family, param, black_box(&data), 7).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, filters, cvxeda, features, classifiers);
criterion_main!(benches);
