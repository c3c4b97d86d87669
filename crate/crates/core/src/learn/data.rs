use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ingest::TaskKind;

/// Dense row-major design matrix with boolean labels (`true` = CODE).
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub x: Vec<f64>,
    pub d: usize,
    pub y: Vec<bool>,
}

impl Samples {
    pub fn new(x: Vec<f64>, d: usize, y: Vec<bool>) -> Result<Samples> {
        if d == 0 || x.len() != d * y.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form {} rows of {d} features",
                x.len(),
                y.len()
            )));
        }
        Ok(Samples { x, d, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<bool>) -> Result<Samples> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Samples::new(rows.concat(), d, y)
    }

    pub fn from_matrix(m: &FeatureMatrix) -> Result<Samples> {
        let rows = m.dense()?;
        let y = m.rows.iter().map(|r| r.label == TaskKind::Code).collect();
        if rows.is_empty() {
            return Samples::new(Vec::new(), m.n_features().max(1), y);
        }
        Samples::from_rows(&rows, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }

    pub fn subset(&self, idx: &[usize]) -> Samples {
        let mut x = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Samples {
            x,
            d: self.d,
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v).count();
        (self.len() - pos, pos)
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        let (neg, pos) = self.class_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::Train(format!(
                "training set needs both classes, got {pos} CODE and {neg} PROSE"
            )));
        }
        Ok(())
    }
}

/// Per-feature centring and scaling fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population statistics; constant features keep unit scale.
    pub fn fit(data: &Samples) -> Standardizer {
        let n = data.len().max(1) as f64;
        let mut mean = vec![0.0; data.d];
        for r in data.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; data.d];
        for r in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, data: &Samples) -> Samples {
        let mut x = vec![0.0; data.x.len()];
        for (r, out) in data.rows().zip(x.chunks_exact_mut(data.d)) {
            self.apply_row(r, out);
        }
        Samples {
            x,
            d: data.d,
            y: data.y.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_uses_given_rows() {
        let s = Samples::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]], vec![true, false]).unwrap();
        let st = Standardizer::fit(&s);
        assert_eq!(st.mean, vec![2.0, 5.0]);
        assert_eq!(st.scale, vec![1.0, 1.0]);
        let t = st.transform(&s);
        assert_eq!(t.x, vec![-1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn subset_and_counts() {
        let s = Samples::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![true, false, false]).unwrap();
        let sub = s.subset(&[2, 0]);
        assert_eq!(sub.x, vec![3.0, 1.0]);
        assert_eq!(sub.class_counts(), (1, 1));
        assert!(s.subset(&[1, 2]).require_both_classes().is_err());
    }
}
