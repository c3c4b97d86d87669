//! Convex tonic/phasic decomposition of skin conductance.
//!
//! The observed signal `y` is modelled as
//!
//! ```text
//! y = M q + C d + B l + e,      driver p = A q >= 0
//! ```
//!
//! where `A`/`M` are the banded AR/MA matrices of the bilinear-discretized
//! biexponential impulse response (so the phasic part `M q` is the driver
//! filtered by that response), `B` holds cubic B-spline regressors on a
//! regular knot grid, and `C = [1, t/n]` is an offset plus linear drift. The
//! program minimized is
//!
//! ```text
//! 1/2 |e|^2 + alpha * sum(p) + 1/2 gamma |l|^2   s.t.  p >= 0
//! ```
//!
//! It is solved with a Mehrotra predictor-corrector interior-point method.
//! The Newton system is split into a banded block in `q` (bandwidth 2,
//! factored by LDL^T) and a small dense Schur complement over `[d, l]`.
//! Convergence is declared when the dual and primal residuals and the
//! complementarity min-map `max_i min(s_i, z_i)`, all divided by
//! `1 + max|y|`, fall below `kkt_tol`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelKind, SampledSignal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvxEdaParams {
    /// Slow time constant of the SCR impulse response, seconds.
    pub tau0: f64,
    /// Fast time constant, seconds.
    pub tau1: f64,
    /// Tonic spline knot spacing, seconds.
    pub knot_s: f64,
    /// Sparsity weight on the driver.
    pub alpha: f64,
    /// Ridge weight on the spline coefficients.
    pub gamma: f64,
    pub max_iter: usize,
    pub kkt_tol: f64,
}

impl Default for CvxEdaParams {
    fn default() -> Self {
        CvxEdaParams {
            tau0: 2.0,
            tau1: 0.7,
            knot_s: 10.0,
            alpha: 8e-4,
            gamma: 1e-2,
            max_iter: 200,
            kkt_tol: 1e-6,
        }
    }
}

impl CvxEdaParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau1 > 0.0
            && self.tau0 > self.tau1
            && self.knot_s > 0.0
            && self.alpha >= 0.0
            && self.gamma >= 0.0
            && self.kkt_tol > 0.0
            && self.max_iter > 0
            && [self.tau0, self.tau1, self.knot_s, self.alpha, self.gamma]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid cvxEDA parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Primal objective at the start and after every iteration.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaDecomposition {
    pub tonic: SampledSignal,
    pub phasic: SampledSignal,
    pub residual: SampledSignal,
    /// Sudomotor nerve activity estimate, elementwise nonnegative.
    pub driver: Vec<f64>,
    pub diagnostics: SolverDiagnostics,
}

/// AR coefficients of the discretized biexponential response, MA = [1, 2, 1].
pub fn arma_coefficients(tau0: f64, tau1: f64, dt: f64) -> [f64; 3] {
    let a1 = 1.0 / tau0.min(tau1);
    let a0 = 1.0 / tau0.max(tau1);
    let scale = (a1 - a0) * dt * dt;
    [
        (a1 * dt + 2.0) * (a0 * dt + 2.0) / scale,
        (2.0 * a1 * a0 * dt * dt - 8.0) / scale,
        (a1 * dt - 2.0) * (a0 * dt - 2.0) / scale,
    ]
}

const MA: [f64; 3] = [1.0, 2.0, 1.0];

/// `y = L x` for lower-triangular banded Toeplitz `L` with taps `c`.
fn band_mul(c: &[f64; 3], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut v = c[0] * x[i];
            if i >= 1 {
                v += c[1] * x[i - 1];
            }
            if i >= 2 {
                v += c[2] * x[i - 2];
            }
            v
        })
        .collect()
}

/// `y = L^T x`.
fn band_mul_t(c: &[f64; 3], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut v = c[0] * x[i];
            if i + 1 < n {
                v += c[1] * x[i + 1];
            }
            if i + 2 < n {
                v += c[2] * x[i + 2];
            }
            v
        })
        .collect()
}

/// Solves `L x = b` by forward substitution.
fn band_solve_lower(c: &[f64; 3], b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    for i in 0..b.len() {
        let mut v = b[i];
        if i >= 1 {
            v -= c[1] * x[i - 1];
        }
        if i >= 2 {
            v -= c[2] * x[i - 2];
        }
        x[i] = v / c[0];
    }
    x
}

/// Filters a driver through the impulse response: `A^-1 M p`.
pub fn phasic_response(ar: &[f64; 3], driver: &[f64]) -> Vec<f64> {
    band_solve_lower(ar, &band_mul(&MA, driver))
}

/// Symmetric bandwidth-2 matrix stored by diagonals: `diag[k][i] = K[i+k][i]`.
struct SymBand {
    diag: [Vec<f64>; 3],
}

impl SymBand {
    /// `L^T W L` for banded lower-triangular `L`; `w = None` means identity.
    fn gram(c: &[f64; 3], w: Option<&[f64]>, n: usize) -> SymBand {
        let mut diag = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (d, out) in diag.iter_mut().enumerate() {
            for (i, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in (i + d)..=(i + 2).min(n.saturating_sub(1)) {
                    let wk = w.map_or(1.0, |w| w[k]);
                    acc += wk * c[k - i] * c[k - i - d];
                }
                *slot = acc;
            }
        }
        SymBand { diag }
    }

    fn add(&mut self, other: &SymBand) {
        for (a, b) in self.diag.iter_mut().zip(&other.diag) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn factor(&self) -> Result<BandLdl> {
        let n = self.diag[0].len();
        let mut d = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for i in 0..n {
            let mut di = self.diag[0][i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            if !di.is_finite() {
                return Err(Error::Decomposition {
                    iterations: 0,
                    residual: f64::NAN,
                });
            }
            // Pivots lost to cancellation are floored; the caller refines
            // against the exact matrix.
            d[i] = di.max(PIVOT_FLOOR * self.diag[0][i].abs()).max(f64::MIN_POSITIVE);
            let di = d[i];
            let mut k1 = self.diag[1][i];
            if i >= 1 {
                k1 -= l2[i - 1] * d[i - 1] * l1[i - 1];
            }
            l1[i] = k1 / di;
            l2[i] = self.diag[2][i] / di;
        }
        Ok(BandLdl { d, l1, l2 })
    }
}

struct BandLdl {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandLdl {
    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            if i >= 1 {
                x[i] -= self.l1[i - 1] * x[i - 1];
            }
            if i >= 2 {
                x[i] -= self.l2[i - 2] * x[i - 2];
            }
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                x[i] -= self.l1[i] * x[i + 1];
            }
            if i + 2 < n {
                x[i] -= self.l2[i] * x[i + 2];
            }
        }
    }
}

/// A column with contiguous support `[lo, lo + vals.len())`.
#[derive(Clone)]
struct SparseCol {
    lo: usize,
    vals: Vec<f64>,
}

impl SparseCol {
    fn dot(&self, x: &[f64]) -> f64 {
        self.vals.iter().zip(&x[self.lo..]).map(|(a, b)| a * b).sum()
    }

    fn axpy(&self, a: f64, y: &mut [f64]) {
        for (v, t) in self.vals.iter().zip(&mut y[self.lo..]) {
            *t += a * v;
        }
    }

    fn dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[self.lo..self.lo + self.vals.len()].copy_from_slice(&self.vals);
        v
    }

    /// `M^T` applied to this column; support grows by two rows upward.
    fn ma_transpose(&self, n: usize) -> SparseCol {
        let lo = self.lo.saturating_sub(2);
        let hi = self.lo + self.vals.len();
        let dense = self.dense(n);
        let vals = (lo..hi)
            .map(|i| {
                let mut v = dense[i];
                if i + 1 < n {
                    v += 2.0 * dense[i + 1];
                }
                if i + 2 < n {
                    v += dense[i + 2];
                }
                v
            })
            .collect();
        SparseCol { lo, vals }
    }

    fn overlap(&self, other: &SparseCol) -> f64 {
        let lo = self.lo.max(other.lo);
        let hi = (self.lo + self.vals.len()).min(other.lo + other.vals.len());
        (lo..hi)
            .map(|i| self.vals[i - self.lo] * other.vals[i - other.lo])
            .sum()
    }
}

/// Tonic regressors: offset, linear drift, then cubic B-splines centred on
/// every `knot` samples.
fn tonic_basis(n: usize, knot: usize) -> Vec<SparseCol> {
    let mut cols = vec![
        SparseCol {
            lo: 0,
            vals: vec![1.0; n],
        },
        SparseCol {
            lo: 0,
            vals: (1..=n).map(|i| i as f64 / n as f64).collect(),
        },
    ];
    let tri: Vec<f64> = (1..knot).chain((1..=knot).rev()).map(|v| v as f64).collect();
    let mut spline = vec![0.0; 2 * tri.len() - 1];
    for (i, a) in tri.iter().enumerate() {
        for (j, b) in tri.iter().enumerate() {
            spline[i + j] += a * b;
        }
    }
    let peak = spline.iter().cloned().fold(0.0, f64::max);
    spline.iter_mut().for_each(|v| *v /= peak);
    let half = (spline.len() / 2) as isize;
    for centre in (0..n).step_by(knot) {
        let first = centre as isize - half;
        let lo = first.max(0) as usize;
        let hi = ((centre as isize + half) as usize).min(n - 1);
        let vals = (lo..=hi).map(|i| spline[(i as isize - first) as usize]).collect();
        cols.push(SparseCol { lo, vals });
    }
    cols
}

struct Problem<'a> {
    y: &'a [f64],
    ar: [f64; 3],
    alpha: f64,
    gamma: f64,
    basis: Vec<SparseCol>,
    /// `M^T` applied to each basis column.
    mt_basis: Vec<SparseCol>,
    /// `T^T T + Gamma`.
    f_block: DMatrix<f64>,
    mtm: SymBand,
}

impl<'a> Problem<'a> {
    fn new(y: &'a [f64], params: &CvxEdaParams, dt: f64) -> Result<Self> {
        let n = y.len();
        let knot = (params.knot_s / dt).round() as usize;
        if knot < 2 {
            return Err(Error::InvalidArgument(format!(
                "knot spacing {} s is shorter than two samples",
                params.knot_s
            )));
        }
        let basis = tonic_basis(n, knot);
        let mt_basis = basis.iter().map(|c| c.ma_transpose(n)).collect();
        let m = basis.len();
        let mut f_block = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = basis[i].overlap(&basis[j]);
                f_block[(i, j)] = v;
                f_block[(j, i)] = v;
            }
        }
        for i in 2..m {
            f_block[(i, i)] += params.gamma;
        }
        Ok(Problem {
            y,
            ar: arma_coefficients(params.tau0, params.tau1, dt),
            alpha: params.alpha,
            gamma: params.gamma,
            basis,
            mt_basis,
            f_block,
            mtm: SymBand::gram(&MA, None, n),
        })
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    fn tonic(&self, w: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.n()];
        for (c, &wi) in self.basis.iter().zip(w) {
            c.axpy(wi, &mut t);
        }
        t
    }

    /// `M q + T w - y`.
    fn fit_error(&self, q: &[f64], w: &[f64]) -> Vec<f64> {
        let mut e = band_mul(&MA, q);
        let t = self.tonic(w);
        for ((ei, ti), yi) in e.iter_mut().zip(&t).zip(self.y) {
            *ei += ti - yi;
        }
        e
    }

    fn objective(&self, q: &[f64], w: &[f64]) -> f64 {
        let e = self.fit_error(q, w);
        let p_sum: f64 = band_mul(&self.ar, q).iter().sum();
        let ridge: f64 = w[2..].iter().map(|v| v * v).sum();
        0.5 * e.iter().map(|v| v * v).sum::<f64>() + self.alpha * p_sum + 0.5 * self.gamma * ridge
    }

    /// Gradient of the objective minus `[A^T z; 0]`.
    fn dual_residual(&self, q: &[f64], w: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let e = self.fit_error(q, w);
        let mut rq = band_mul_t(&MA, &e);
        let shifted: Vec<f64> = z.iter().map(|zi| self.alpha - zi).collect();
        for (r, v) in rq.iter_mut().zip(band_mul_t(&self.ar, &shifted)) {
            *r += v;
        }
        let rw = self
            .basis
            .iter()
            .enumerate()
            .map(|(j, c)| c.dot(&e) + if j >= 2 { self.gamma * w[j] } else { 0.0 })
            .collect();
        (rq, rw)
    }
}

/// Factored Newton matrix for one interior-point iteration.
struct NewtonSystem<'p, 'a> {
    problem: &'p Problem<'a>,
    k: BandLdl,
    /// `K^-1 E`, one dense column per tonic regressor.
    k_inv_e: Vec<Vec<f64>>,
    d: &'p [f64],
    /// Cholesky factor of the symmetrized Schur complement plus the
    /// smallest diagonal shift that made it factorable.
    schur: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'p, 'a> NewtonSystem<'p, 'a> {
    fn new(problem: &'p Problem<'a>, d: &'p [f64]) -> Result<Self> {
        let n = problem.n();
        let m = problem.m();
        let mut k = SymBand::gram(&problem.ar, Some(d), n);
        k.add(&problem.mtm);
        let k = k.factor()?;
        let k_inv_e: Vec<Vec<f64>> = problem
            .mt_basis
            .iter()
            .map(|c| {
                let mut v = c.dense(n);
                k.solve_in_place(&mut v);
                v
            })
            .collect();
        let mut s = problem.f_block.clone();
        for i in 0..m {
            for j in i..m {
                let v = problem.mt_basis[i].dot(&k_inv_e[j]);
                s[(i, j)] -= v;
                if i != j {
                    s[(j, i)] -= v;
                }
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        let scale = (0..m)
            .map(|i| s[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        let schur = loop {
            let mut trial = s.clone();
            for i in 0..m {
                trial[(i, i)] += shift;
            }
            if let Some(ch) = trial.cholesky() {
                break ch;
            }
            shift = if shift == 0.0 { 1e-14 * scale } else { shift * 10.0 };
            if !(shift <= scale) {
                return Err(Error::Decomposition {
                    iterations: 0,
                    residual: f64::NAN,
                });
            }
        };
        Ok(NewtonSystem {
            problem,
            k,
            k_inv_e,
            d,
            schur,
        })
    }

    /// `[K E; E^T F] [dq; dw]`.
    fn apply(&self, dq: &[f64], dw: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.problem;
        let a_dq: Vec<f64> = band_mul(&p.ar, dq).iter().zip(self.d).map(|(a, d)| a * d).collect();
        let mut t = band_mul(&MA, dq);
        let tonic = p.tonic(dw);
        for (ti, v) in t.iter_mut().zip(&tonic) {
            *ti += v;
        }
        // M^T (M dq + T dw) + A^T D A dq
        let mut top = band_mul_t(&MA, &t);
        for (x, v) in top.iter_mut().zip(band_mul_t(&p.ar, &a_dq)) {
            *x += v;
        }
        let m_dq = band_mul(&MA, dq);
        let f_dw = &p.f_block * nalgebra::DVector::from_column_slice(dw);
        let bottom = p.basis.iter().zip(f_dw.iter()).map(|(c, f)| c.dot(&m_dq) + f).collect();
        (top, bottom)
    }

    /// Solves `[K E; E^T F] [dq; dw] = [r1; r2]`.
    fn solve(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let residual = |dq: &[f64], dw: &[f64]| {
            let (a1, a2) = self.apply(dq, dw);
            let e1: Vec<f64> = r1.iter().zip(&a1).map(|(r, a)| r - a).collect();
            let e2: Vec<f64> = r2.iter().zip(&a2).map(|(r, a)| r - a).collect();
            let size = inf_norm(&e1).max(inf_norm(&e2));
            (e1, e2, size)
        };
        let (mut dq, mut dw) = self.solve_once(r1, r2);
        let (mut e1, mut e2, mut size) = residual(&dq, &dw);
        let target = 1e-13 * inf_norm(r1).max(inf_norm(r2));
        // Iterative refinement against the exact matrix undoes the shifts
        // and the cancellation in the Schur complement. It can diverge on
        // very badly scaled systems, so only improvements are kept.
        for _ in 0..REFINEMENT_STEPS {
            if size <= target {
                break;
            }
            let (cq, cw) = self.solve_once(&e1, &e2);
            let nq: Vec<f64> = dq.iter().zip(&cq).map(|(x, c)| x + c).collect();
            let nw: Vec<f64> = dw.iter().zip(&cw).map(|(x, c)| x + c).collect();
            let (n1, n2, nsize) = residual(&nq, &nw);
            if !(nsize < size) {
                break;
            }
            (dq, dw, e1, e2, size) = (nq, nw, n1, n2, nsize);
        }
        (dq, dw)
    }

    fn solve_once(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut k_inv_r1 = r1.to_vec();
        self.k.solve_in_place(&mut k_inv_r1);
        let rhs = nalgebra::DVector::from_iterator(
            r2.len(),
            r2.iter().zip(&self.problem.mt_basis).map(|(r, c)| r - c.dot(&k_inv_r1)),
        );
        let dw = self.schur.solve(&rhs);
        let mut dq = k_inv_r1;
        for (col, &a) in self.k_inv_e.iter().zip(dw.iter()) {
            for (x, c) in dq.iter_mut().zip(col) {
                *x -= a * c;
            }
        }
        (dq, dw.iter().copied().collect())
    }
}

const REFINEMENT_STEPS: usize = 8;
const PIVOT_FLOOR: f64 = 1e-14;

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0, f64::min)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Decomposes an EDA channel into tonic, phasic and residual components.
pub fn decompose_eda(eda: &SampledSignal, params: &CvxEdaParams) -> Result<EdaDecomposition> {
    if eda.kind != ChannelKind::Eda {
        return Err(Error::InvalidArgument(format!(
            "expected an EDA channel, got {}",
            eda.kind
        )));
    }
    if eda.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "EDA decomposition needs at least 8 samples, got {}",
            eda.len()
        )));
    }
    params.validate()?;
    let dt = 1.0 / eda.sample_rate;
    let y = &eda.values;
    let n = y.len();
    let problem = Problem::new(y, params, dt)?;
    let m = problem.m();
    let ar = problem.ar;
    let y_scale = 1.0 + inf_norm(y);

    // Strictly feasible start: unit driver, flat tonic.
    let mut s = vec![1.0; n];
    let mut z = vec![1.0; n];
    let mut q = band_solve_lower(&ar, &s);
    let mut w = vec![0.0; m];

    let mut history = vec![problem.objective(&q, &w)];
    let mut kkt = f64::INFINITY;
    for iter in 0..params.max_iter {
        let (rq, rw) = problem.dual_residual(&q, &w, &z);
        let aq = band_mul(&ar, &q);
        let rp: Vec<f64> = aq.iter().zip(&s).map(|(a, si)| a - si).collect();
        let comp = s.iter().zip(&z).fold(0.0, |acc: f64, (a, b)| acc.max(a.min(*b)));
        // Driver slack and multiplier both carry the units of `y`, so every
        // term is measured relative to the input scale.
        kkt = inf_norm(&rq).max(inf_norm(&rw)).max(inf_norm(&rp)).max(comp) / y_scale;
        if kkt <= params.kkt_tol {
            return Ok(finish(eda, &problem, &s, &w, iter, kkt, history));
        }

        let mu = s.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        let d: Vec<f64> = z.iter().zip(&s).map(|(zi, si)| zi / si).collect();
        let system = NewtonSystem::new(&problem, &d).map_err(|_| Error::Decomposition {
            iterations: iter,
            residual: kkt,
        })?;

        // Direction for complementarity target `rc`:
        //   (Q + G^T D G) dx = -r_d + G^T (rc / s - D r_p)
        //   ds = G dx + r_p,  dz = (rc - z ds) / s
        let direction = |rc: &[f64]| {
            let g: Vec<f64> = (0..n).map(|i| rc[i] / s[i] - d[i] * rp[i]).collect();
            let at_g = band_mul_t(&ar, &g);
            let r1: Vec<f64> = rq.iter().zip(&at_g).map(|(r, a)| -r + a).collect();
            let r2: Vec<f64> = rw.iter().map(|r| -r).collect();
            let (dq, dw) = system.solve(&r1, &r2);
            let a_dq = band_mul(&ar, &dq);
            let ds: Vec<f64> = a_dq.iter().zip(&rp).map(|(a, r)| a + r).collect();
            let dz: Vec<f64> = (0..n).map(|i| (rc[i] - z[i] * ds[i]) / s[i]).collect();
            (dq, dw, ds, dz)
        };

        let rc_aff: Vec<f64> = s.iter().zip(&z).map(|(a, b)| -a * b).collect();
        let (_, _, ds_a, dz_a) = direction(&rc_aff);
        let step_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = (0..n)
            .map(|i| (s[i] + step_aff * ds_a[i]) * (z[i] + step_aff * dz_a[i]))
            .sum::<f64>()
            / n as f64;
        let sigma = (mu_aff / mu).powi(3).min(1.0);
        let rc: Vec<f64> = (0..n).map(|i| -s[i] * z[i] - ds_a[i] * dz_a[i] + sigma * mu).collect();
        let (dq, dw, ds, dz) = direction(&rc);
        let step = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);

        for i in 0..n {
            q[i] += step * dq[i];
            s[i] += step * ds[i];
            z[i] += step * dz[i];
        }
        for (wi, dwi) in w.iter_mut().zip(&dw) {
            *wi += step * dwi;
        }
        history.push(problem.objective(&q, &w));
    }
    Err(Error::Decomposition {
        iterations: params.max_iter,
        residual: kkt,
    })
}

fn finish(
    eda: &SampledSignal,
    problem: &Problem<'_>,
    s: &[f64],
    w: &[f64],
    iterations: usize,
    kkt_residual: f64,
    objective_history: Vec<f64>,
) -> EdaDecomposition {
    let driver: Vec<f64> = s.iter().map(|v| v.max(0.0)).collect();
    let phasic = phasic_response(&problem.ar, &driver);
    let tonic = problem.tonic(w);
    let residual: Vec<f64> = eda
        .values
        .iter()
        .zip(&tonic)
        .zip(&phasic)
        .map(|((y, t), r)| y - t - r)
        .collect();
    EdaDecomposition {
        tonic: eda.with_values(tonic),
        phasic: eda.with_values(phasic),
        residual: eda.with_values(residual),
        driver,
        diagnostics: SolverDiagnostics {
            iterations,
            kkt_residual,
            objective_history,
        },
    }
}
