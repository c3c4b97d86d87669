use rand::Rng as _;

use super::data::{Samples, Standardizer};
use super::Predictor;
use crate::error::Result;
use crate::rng::Rng;

pub const EPOCHS: usize = 150;
const INITIAL_STEP: f64 = 1.0;
const MAX_HALVINGS: usize = 40;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// One hidden layer of logistic units and a logistic output.
///
/// Parameters are stored flat: hidden weights row by row (`hidden × d`),
/// hidden biases, output weights, output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub d: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    scaler: Standardizer,
    net: Mlp,
    /// Training loss after each accepted epoch, starting at initialization.
    pub loss_history: Vec<f64>,
}

impl Mlp {
    pub fn init(d: usize, hidden: usize, rng: &mut Rng) -> Mlp {
        let hidden = hidden.max(1);
        let mut params = vec![0.0; hidden * d + 2 * hidden + 1];
        let r1 = 1.0 / (d as f64).sqrt();
        let r2 = 1.0 / (hidden as f64).sqrt();
        for w in &mut params[..hidden * d] {
            *w = rng.random_range(-r1..r1);
        }
        let out = hidden * d + hidden;
        for w in &mut params[out..out + hidden] {
            *w = rng.random_range(-r2..r2);
        }
        Mlp { d, hidden, params }
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (h, d) = (self.hidden, self.d);
        let p = &self.params;
        (
            &p[..h * d],
            &p[h * d..h * d + h],
            &p[h * d + h..h * d + 2 * h],
            p[h * d + 2 * h],
        )
    }

    fn forward(&self, x: &[f64], act: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split();
        let mut z = b2;
        for (j, a) in act.iter_mut().enumerate() {
            let row = &w1[j * self.d..(j + 1) * self.d];
            *a = sigmoid(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b1[j]);
            z += w2[j] * *a;
        }
        z
    }

    /// Output logit for one row.
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward(x, &mut vec![0.0; self.hidden])
    }

    /// Mean cross-entropy over the rows of `data`.
    pub fn loss(&self, data: &Samples) -> f64 {
        let mut act = vec![0.0; self.hidden];
        let total: f64 = data
            .rows()
            .zip(&data.y)
            .map(|(x, &y)| {
                let z = self.forward(x, &mut act);
                softplus(z) - if y { z } else { 0.0 }
            })
            .sum();
        total / data.len() as f64
    }

    /// Mean cross-entropy and its gradient with respect to `params`.
    pub fn loss_and_gradient(&self, data: &Samples) -> (f64, Vec<f64>) {
        let (h, d) = (self.hidden, self.d);
        let (_, _, w2, _) = self.split();
        let mut grad = vec![0.0; self.params.len()];
        let mut act = vec![0.0; h];
        let mut total = 0.0;
        for (x, &y) in data.rows().zip(&data.y) {
            let z = self.forward(x, &mut act);
            let t = if y { 1.0 } else { 0.0 };
            total += softplus(z) - t * z;
            let dz = sigmoid(z) - t;
            for j in 0..h {
                let a = act[j];
                grad[h * d + h + j] += dz * a;
                let dh = dz * w2[j] * a * (1.0 - a);
                grad[h * d + j] += dh;
                for (g, v) in grad[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *g += dh * v;
                }
            }
            grad[h * d + 2 * h] += dz;
        }
        let n = data.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (total / n, grad)
    }

    /// Full-batch gradient descent. A step is accepted only if it does not
    /// raise the loss; the step size grows by 10% after an accepted step and
    /// halves after a rejected one.
    pub fn train(&mut self, data: &Samples, epochs: usize) -> Vec<f64> {
        let mut step = INITIAL_STEP;
        let (mut loss, mut grad) = self.loss_and_gradient(data);
        let mut history = vec![loss];
        for _ in 0..epochs {
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let candidate = Mlp {
                    params: self.params.iter().zip(&grad).map(|(p, g)| p - step * g).collect(),
                    ..self.clone()
                };
                let (l, g) = candidate.loss_and_gradient(data);
                if l <= loss {
                    *self = candidate;
                    loss = l;
                    grad = g;
                    step *= 1.1;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            history.push(loss);
        }
        history
    }
}

impl MlpModel {
    pub fn fit(data: &Samples, hidden: usize, epochs: usize, rng: &mut Rng) -> Result<MlpModel> {
        data.require_both_classes()?;
        let scaler = Standardizer::fit(data);
        let z = scaler.transform(data);
        let mut net = Mlp::init(data.d, hidden, rng);
        let loss_history = net.train(&z, epochs);
        Ok(MlpModel {
            scaler,
            net,
            loss_history,
        })
    }
}

impl Predictor for MlpModel {
    fn predict_row(&self, x: &[f64]) -> bool {
        let mut z = vec![0.0; x.len()];
        self.scaler.apply_row(x, &mut z);
        self.net.logit(&z) > 0.0
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = Rng::seed_from_u64(3);
        let d = 6;
        let x: Vec<f64> = (0..40 * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = (0..40).map(|i| i % 3 == 0).collect();
        let data = Samples::new(x, d, y).unwrap();
        let net = Mlp::init(d, 4, &mut rng);
        let (_, grad) = net.loss_and_gradient(&data);
        let h = 1e-6;
        for k in 0..net.params.len() {
            let mut plus = net.clone();
            plus.params[k] += h;
            let mut minus = net.clone();
            minus.params[k] -= h;
            let numeric = (plus.loss(&data) - minus.loss(&data)) / (2.0 * h);
            assert!((numeric - grad[k]).abs() <= 1e-6 * numeric.abs().max(grad[k].abs()).max(1e-3));
        }
    }

    #[test]
    fn stable_logistic_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }
}
