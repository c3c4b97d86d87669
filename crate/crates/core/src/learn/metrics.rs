//! Confusion counts, balanced accuracy and macro-averaged metrics.
//! CODE is the positive class.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub fp: u32,
    pub tn: u32,
}

impl Confusion {
    pub fn new(tp: u32, fn_: u32, fp: u32, tn: u32) -> Self {
        Confusion { tp, fn_, fp, tn }
    }

    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u32 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The same counts with the other class taken as positive.
    pub fn swapped(&self) -> Confusion {
        Confusion::new(self.tn, self.fp, self.fn_, self.tp)
    }

    fn both_classes(&self) -> bool {
        self.tp + self.fn_ > 0 && self.fp + self.tn > 0
    }
}

/// Mean of sensitivity and specificity; `None` when a class is absent.
pub fn balanced_accuracy(c: &Confusion) -> Option<f64> {
    if !c.both_classes() {
        return None;
    }
    let sens = c.tp as f64 / (c.tp + c.fn_) as f64;
    let spec = c.tn as f64 / (c.fp + c.tn) as f64;
    Some((sens + spec) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 of one class given its hits, misses and false
/// alarms. A class never predicted scores 0 on precision and F1.
fn class_metrics(hit: u32, miss: u32, false_alarm: u32) -> [f64; 3] {
    let p = ratio(hit, hit + false_alarm);
    let r = ratio(hit, hit + miss);
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    [p, r, f1]
}

/// Per-class precision/recall/F1 averaged with equal class weight.
pub fn macro_metrics(c: &Confusion) -> Option<MacroMetrics> {
    if !c.both_classes() {
        return None;
    }
    let code = class_metrics(c.tp, c.fn_, c.fp);
    let prose = class_metrics(c.tn, c.fp, c.fn_);
    Some(MacroMetrics {
        precision: (code[0] + prose[0]) / 2.0,
        recall: (code[1] + prose[1]) / 2.0,
        f1: (code[2] + prose[2]) / 2.0,
    })
}

/// Median of the values; mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
