//! Butterworth IIR design (bilinear transform with pre-warping) and
//! forward-backward zero-phase filtering over second-order sections.

use nalgebra::Complex;

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Filter order applied to every band edge.
pub const BUTTERWORTH_ORDER: usize = 4;

/// Pass band. `low_hz == 0` degrades to a low-pass, `high_hz == None` to a
/// high-pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: Option<f64>,
}

impl Band {
    pub const fn new(low_hz: f64, high_hz: Option<f64>) -> Self {
        Band { low_hz, high_hz }
    }
}

/// One biquad in transposed direct form II, `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: C64) -> C64 {
        let z2 = z_inv * z_inv;
        let num = C64::new(self.b[0], 0.0) + z_inv * self.b[1] + z2 * self.b[2];
        let den = C64::new(1.0, 0.0) + z_inv * self.a[0] + z2 * self.a[1];
        num / den
    }

    /// State reached after an infinitely long unit step.
    fn step_state(&self) -> [f64; 2] {
        let y = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        let z2 = self.b[2] - self.a[1] * y;
        let z1 = self.b[1] - self.a[0] * y + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

fn bilinear(s: C64, fs: f64) -> C64 {
    let k = C64::new(2.0 * fs, 0.0);
    (k + s) / (k - s)
}

fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (std::f64::consts::PI * f / fs).tan()
}

impl SosFilter {
    /// Designs a Butterworth filter of even `order` for `band` at rate `fs`.
    pub fn butterworth(order: usize, band: Band, fs: f64) -> Result<SosFilter> {
        if order == 0 || order % 2 != 0 {
            return Err(Error::FilterDesign(format!(
                "order must be even and positive, got {order}"
            )));
        }
        let nyquist = fs / 2.0;
        let Band { low_hz, high_hz } = band;
        if !(low_hz >= 0.0 && low_hz.is_finite()) {
            return Err(Error::FilterDesign(format!("low edge {low_hz} Hz is invalid")));
        }
        if let Some(h) = high_hz {
            if !(h > 0.0 && h < nyquist) {
                return Err(Error::FilterDesign(format!(
                    "high edge {h} Hz outside (0, {nyquist}) Hz"
                )));
            }
            if low_hz >= h {
                return Err(Error::FilterDesign(format!("low edge {low_hz} Hz >= high edge {h} Hz")));
            }
        } else if low_hz == 0.0 {
            return Err(Error::FilterDesign("band has neither edge".into()));
        } else if low_hz >= nyquist {
            return Err(Error::FilterDesign(format!(
                "low edge {low_hz} Hz >= Nyquist {nyquist} Hz"
            )));
        }

        let prototype: Vec<C64> = (0..order)
            .map(|k| {
                let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
                C64::from_polar(1.0, theta)
            })
            .collect();

        // (analog poles, per-section numerator, reference point z^-1 for unit gain)
        let (poles, numerator, z_ref): (Vec<C64>, [f64; 3], C64) = match (low_hz > 0.0, high_hz) {
            (false, Some(h)) => {
                let wc = prewarp(h, fs);
                (
                    prototype.iter().map(|p| p * wc).collect(),
                    [1.0, 2.0, 1.0],
                    C64::new(1.0, 0.0),
                )
            }
            (true, None) => {
                let wc = prewarp(low_hz, fs);
                (
                    prototype.iter().map(|p| C64::new(wc, 0.0) / p).collect(),
                    [1.0, -2.0, 1.0],
                    C64::new(-1.0, 0.0),
                )
            }
            (true, Some(h)) => {
                let w1 = prewarp(low_hz, fs);
                let w2 = prewarp(h, fs);
                let w0 = (w1 * w2).sqrt();
                let bw = w2 - w1;
                let mut poles = Vec::with_capacity(2 * order);
                for p in &prototype {
                    let pb = p * bw;
                    let disc = (pb * pb - C64::new(4.0 * w0 * w0, 0.0)).sqrt();
                    poles.push((pb + disc) / 2.0);
                    poles.push((pb - disc) / 2.0);
                }
                let omega0 = 2.0 * (w0 / (2.0 * fs)).atan();
                (poles, [1.0, 0.0, -1.0], C64::from_polar(1.0, -omega0))
            }
            (false, None) => unreachable!("rejected above"),
        };

        let mut upper: Vec<C64> = poles.iter().map(|&p| bilinear(p, fs)).filter(|z| z.im > 0.0).collect();
        if upper.len() * 2 != poles.len() {
            return Err(Error::FilterDesign("poles do not pair into conjugates".into()));
        }
        upper.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let sections = upper
            .into_iter()
            .map(|z| {
                let mut bq = Biquad {
                    b: numerator,
                    a: [-2.0 * z.re, z.norm_sqr()],
                };
                let g = bq.response(z_ref).norm();
                for c in &mut bq.b {
                    *c /= g;
                }
                bq
            })
            .collect();
        Ok(SosFilter { sections })
    }

    /// Complex response at `freq_hz` for sampling rate `fs`.
    pub fn response(&self, freq_hz: f64, fs: f64) -> C64 {
        let z_inv = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq_hz / fs);
        self.sections
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    fn initial_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [z1, z2] = s.step_state();
                let zi = [z1 * scale, z2 * scale];
                scale *= s.dc_gain();
                zi
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], state: &mut [[f64; 2]]) {
        for (s, z) in self.sections.iter().zip(state.iter_mut()) {
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            let (mut z1, mut z2) = (z[0], z[1]);
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z1;
                z1 = b1 * input - a1 * y + z2;
                z2 = b2 * input - a2 * y;
                *v = y;
            }
            *z = [z1, z2];
        }
    }

    /// Causal filtering from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        let mut state = vec![[0.0; 2]; self.sections.len()];
        self.run(&mut out, &mut state);
        out
    }

    /// Zero-phase filtering: odd-extension padding, steady-state initial
    /// conditions, then a forward and a backward pass.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.initial_state();
        let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

        let mut state = scaled(ext[0]);
        self.run(&mut ext, &mut state);
        ext.reverse();
        let mut state = scaled(ext[0]);
        self.run(&mut ext, &mut state);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}
