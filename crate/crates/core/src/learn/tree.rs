//! CART classification trees over quantile-binned features.

use rand::seq::index::sample;

use super::data::Samples;
use super::Predictor;
use crate::error::Result;
use crate::rng::Rng;

pub const MAX_BINS: usize = 64;
const MAX_DEPTH: usize = 32;

/// Candidate split thresholds per feature. A value `v` falls in bin
/// `#{t : t < v}`, so `v <= thresholds[k]` exactly when its bin is `<= k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Binner {
    pub thresholds: Vec<Vec<f64>>,
}

impl Binner {
    pub fn fit(data: &Samples, max_bins: usize) -> Binner {
        let n = data.len();
        let thresholds = (0..data.d)
            .map(|j| {
                let mut v: Vec<f64> = data.rows().map(|r| r[j]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                if v.len() <= max_bins {
                    return v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                }
                let mut all: Vec<f64> = data.rows().map(|r| r[j]).collect();
                all.sort_by(f64::total_cmp);
                let mut cuts: Vec<f64> = (1..max_bins)
                    .filter_map(|k| {
                        let q = all[k * n / max_bins];
                        let next = v.partition_point(|u| *u <= q);
                        v.get(next).map(|u| 0.5 * (q + u))
                    })
                    .collect();
                cuts.dedup();
                cuts
            })
            .collect();
        Binner { thresholds }
    }

    /// Bin codes, column-major (`codes[j * n + i]`).
    pub fn codes(&self, data: &Samples) -> Vec<u8> {
        let n = data.len();
        let mut out = vec![0u8; n * data.d];
        for (j, t) in self.thresholds.iter().enumerate() {
            for (i, r) in data.rows().enumerate() {
                out[j * n + i] = t.partition_point(|c| *c < r[j]) as u8;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Leaf,
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    kind: Kind,
    /// Weighted class totals of the training rows reaching the node.
    weight: [f64; 2],
}

impl Node {
    fn p_code(&self) -> f64 {
        let w = self.weight[0] + self.weight[1];
        if w > 0.0 {
            self.weight[1] / w
        } else {
            0.0
        }
    }

    fn gini(&self) -> f64 {
        let w = self.weight[0] + self.weight[1];
        if w > 0.0 {
            1.0 - (self.weight[0] / w).powi(2) - (self.weight[1] / w).powi(2)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features tried per split; all when `None`.
    pub mtry: Option<usize>,
    pub min_split_weight: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            mtry: None,
            min_split_weight: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

struct Builder<'a> {
    codes: &'a [u8],
    n: usize,
    d: usize,
    y: &'a [bool],
    w: &'a [f64],
    binner: &'a Binner,
    params: &'a TreeParams,
    rng: Option<&'a mut Rng>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let mut weight = [0.0; 2];
        for &i in idx.iter() {
            weight[self.y[i] as usize] += self.w[i];
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            kind: Kind::Leaf,
            weight,
        });
        let max_depth = self.params.max_depth.unwrap_or(MAX_DEPTH).min(MAX_DEPTH);
        if depth >= max_depth
            || weight[0] <= 0.0
            || weight[1] <= 0.0
            || weight[0] + weight[1] < self.params.min_split_weight
        {
            return id;
        }
        let Some((feature, bin)) = self.best_split(idx, weight) else {
            return id;
        };
        let col = &self.codes[feature * self.n..(feature + 1) * self.n];
        let mut split = 0;
        for k in 0..idx.len() {
            if col[idx[k]] as usize <= bin {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id].kind = Kind::Split {
            feature,
            threshold: self.binner.thresholds[feature][bin],
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, idx: &[usize], total: [f64; 2]) -> Option<(usize, usize)> {
        let features: Vec<usize> = match (self.params.mtry, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < self.d => {
                let mut f = sample(rng, self.d, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.d).collect(),
        };
        // minimize sum over children of -(w0^2 + w1^2) / w, the weighted Gini
        let score = |w: [f64; 2]| {
            let s = w[0] + w[1];
            if s > 0.0 {
                -(w[0] * w[0] + w[1] * w[1]) / s
            } else {
                0.0
            }
        };
        let parent = score(total);
        let mut best: Option<(f64, usize, usize)> = None;
        let mut hist = [[0.0f64; 2]; MAX_BINS];
        for f in features {
            let n_thr = self.binner.thresholds[f].len();
            if n_thr == 0 {
                continue;
            }
            let col = &self.codes[f * self.n..(f + 1) * self.n];
            hist[..=n_thr].iter_mut().for_each(|h| *h = [0.0; 2]);
            for &i in idx {
                hist[col[i] as usize][self.y[i] as usize] += self.w[i];
            }
            let mut left = [0.0; 2];
            for (b, h) in hist[..n_thr].iter().enumerate() {
                left[0] += h[0];
                left[1] += h[1];
                let right = [total[0] - left[0], total[1] - left[1]];
                if left[0] + left[1] <= 0.0 || right[0] + right[1] <= 1e-12 {
                    continue;
                }
                let s = score(left) + score(right);
                if s < parent - 1e-12 && best.is_none_or(|(bs, _, _)| s < bs) {
                    best = Some((s, f, b));
                }
            }
        }
        best.map(|(_, f, b)| (f, b))
    }
}

impl Tree {
    /// Grows a tree on pre-binned data. Rows with zero weight are ignored.
    pub fn grow(
        data: &Samples,
        codes: &[u8],
        binner: &Binner,
        weights: &[f64],
        params: &TreeParams,
        rng: Option<&mut Rng>,
    ) -> Tree {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut b = Builder {
            codes,
            n: data.len(),
            d: data.d,
            y: &data.y,
            w: weights,
            binner,
            params,
            rng,
            nodes: Vec::new(),
        };
        b.grow(&mut idx, 0);
        Tree { nodes: b.nodes }
    }

    pub fn fit(data: &Samples, params: &TreeParams) -> Result<Tree> {
        data.require_both_classes()?;
        let binner = Binner::fit(data, MAX_BINS);
        let codes = binner.codes(data);
        Ok(Tree::grow(data, &codes, &binner, &vec![1.0; data.len()], params, None))
    }

    fn leaf(&self, x: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        while let Kind::Split {
            feature,
            threshold,
            left,
            right,
        } = node.kind
        {
            node = &self.nodes[if x[feature] <= threshold { left } else { right }];
        }
        node
    }

    /// Fraction of CODE training weight in the leaf reached by `x`.
    pub fn p_code(&self, x: &[f64]) -> f64 {
        self.leaf(x).p_code()
    }

    pub fn n_leaves(&self) -> usize {
        self.reachable().filter(|&i| self.nodes[i].kind == Kind::Leaf).count()
    }

    fn reachable(&self) -> impl Iterator<Item = usize> + '_ {
        let mut stack = vec![0];
        std::iter::from_fn(move || {
            let i = stack.pop()?;
            if let Kind::Split { left, right, .. } = self.nodes[i].kind {
                stack.push(right);
                stack.push(left);
            }
            Some(i)
        })
    }

    /// Subtree cost (weighted Gini of its leaves) and leaf count.
    fn subtree(&self, i: usize, total: f64) -> (f64, usize) {
        match self.nodes[i].kind {
            Kind::Leaf => (self.node_cost(i, total), 1),
            Kind::Split { left, right, .. } => {
                let (cl, nl) = self.subtree(left, total);
                let (cr, nr) = self.subtree(right, total);
                (cl + cr, nl + nr)
            }
        }
    }

    fn node_cost(&self, i: usize, total: f64) -> f64 {
        let n = &self.nodes[i];
        n.gini() * (n.weight[0] + n.weight[1]) / total
    }

    /// Minimal cost-complexity pruning: repeatedly collapses the weakest
    /// link while its effective alpha does not exceed `alpha`.
    pub fn prune(&mut self, alpha: f64) {
        let root = &self.nodes[0];
        let total = root.weight[0] + root.weight[1];
        loop {
            let weakest = self
                .reachable()
                .filter(|&i| self.nodes[i].kind != Kind::Leaf)
                .map(|i| {
                    let (cost, leaves) = self.subtree(i, total);
                    ((self.node_cost(i, total) - cost) / (leaves - 1) as f64, i)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            match weakest {
                Some((g, i)) if g <= alpha => self.nodes[i].kind = Kind::Leaf,
                _ => break,
            }
        }
    }
}

impl Predictor for Tree {
    fn predict_row(&self, x: &[f64]) -> bool {
        self.p_code(x) > 0.5
    }
}
