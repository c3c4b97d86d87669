//! Input generators shared by the benchmarks.

use biocomp::learn::Samples;
use biocomp::rng::rng_for;
use biocomp::synth::{generate_session, SynthConfig};
use biocomp::{ChannelKind, SampledSignal, Session};
use rand::Rng as _;

/// One synthetic participant with every channel.
pub fn session(seed: u64) -> Session {
    let config = SynthConfig {
        n_participants: 1,
        seed,
        ..SynthConfig::default()
    };
    generate_session(&config, 0).expect("default synth config is valid")
}

/// The first `seconds` of one channel of [`session`].
pub fn channel(session: &Session, kind: ChannelKind, seconds: f64) -> SampledSignal {
    let full = session.channel(kind).expect("synth records every channel");
    let n = ((seconds * full.sample_rate) as usize).min(full.len());
    full.with_values(full.values[..n].to_vec())
}

/// Two Gaussian classes in `d` dimensions, shifted by `sep` along every axis.
pub fn blobs(n: usize, d: usize, sep: f64, seed: u64) -> Samples {
    let mut rng = rng_for(seed, &[0xbe7c]);
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i % 2 == 0;
        for _ in 0..d {
            let noise: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() * 0.87;
            x.push(noise + if positive { sep } else { 0.0 });
        }
        y.push(positive);
    }
    Samples::new(x, d, y).expect("consistent shape")
}
