//! Scoring candidates on three objectives and picking the next observation.
//!
//! * F1: posterior mean of the primary model (to maximize).
//! * F2: average absolute estimated model error over the candidate set after
//!   a hypothetical observation at the candidate (to minimize).
//! * F3: information of an observation at the candidate, either the exact
//!   log-determinant objective (negated) or the predictive variance.
//!
//! The error model is a second GP fitted to the absolute residuals of the
//! primary fit. Observing at `x_cand` is modelled as adding a zero-residual
//! point there, which is a rank-one update of the error posterior.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{Dataset, GpConfig, GpModel, KernelConfig, JITTER_LADDER};
use crate::information::{argmax, Posterior};
use crate::sampling::CandidateSet;

/// Below this, `exp` returns exactly zero.
const EXP_UNDERFLOW: f64 = -745.2;

/// Ranges below this are treated as degenerate during normalization.
pub const DEGENERATE_RANGE: f64 = 1e-12;

/// Rows of the pairwise covariance block held in memory at once.
const F2_BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl ObjectiveWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let ws = [w1, w2, w3];
        if ws.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid(format!("weights must be finite and >= 0, got {ws:?}")));
        }
        if w1 + w2 + w3 <= 0.0 {
            return Err(Error::invalid("weights must not all be zero"));
        }
        Ok(ObjectiveWeights { w1, w2, w3 })
    }

    /// The same weights scaled to sum to one.
    pub fn normalized(&self) -> Self {
        let s = self.w1 + self.w2 + self.w3;
        ObjectiveWeights {
            w1: self.w1 / s,
            w2: self.w2 / s,
            w3: self.w3 / s,
        }
    }
}

/// Caps on F2 (`b1`) and F3 (`b2`) for the bounded-objective rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub b1: f64,
    pub b2: f64,
}

impl ObjectiveBounds {
    pub fn new(b1: f64, b2: f64) -> Result<Self> {
        if !(b1 > 0.0 && b2 > 0.0) {
            return Err(Error::invalid(format!("bounds must be positive, got b1={b1}, b2={b2}")));
        }
        Ok(ObjectiveBounds { b1, b2 })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F3Mode {
    /// Negated sum of `ln |C_q|` over the candidate set.
    Exact,
    /// Predictive variance.
    #[default]
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub f1_lo: f64,
    pub f1_hi: f64,
    pub f2_lo: f64,
    pub f2_hi: f64,
    pub f3_lo: f64,
    pub f3_hi: f64,
}

impl NormalizationBounds {
    /// `hi - lo` per objective, with degenerate ranges replaced by 1.
    pub fn deltas(&self) -> [f64; 3] {
        let guard = |d: f64| if d < DEGENERATE_RANGE { 1.0 } else { d };
        [
            guard(self.f1_hi - self.f1_lo),
            guard(self.f2_hi - self.f2_lo),
            guard(self.f3_hi - self.f3_lo),
        ]
    }
}

/// Raw and normalized objective values of one candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValues {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f1n: f64,
    pub f2n: f64,
    pub f3n: f64,
}

/// Outcome of a selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub values: ObjectiveValues,
    /// Set when the bounded rule found no feasible candidate.
    pub fallback_used: bool,
}

/// Estimated objective value at a candidate.
pub fn f1_value(model: &GpModel, x_cand: &[f64]) -> Result<f64> {
    Ok(model.predict(x_cand)?.mean)
}

/// GP over the absolute residuals `|y_i - f(x_i)|` of the primary fit.
pub fn fit_error_model(model: &GpModel, kernel_e: KernelConfig) -> Result<GpModel> {
    if model.is_empty() {
        return Err(Error::invalid("error model needs at least one observation"));
    }
    let data = model.data();
    let residuals = model
        .predict_many(data.points())?
        .iter()
        .zip(data.values())
        .map(|(p, y)| (y - p.mean).abs())
        .collect();
    let errs = Dataset::from_parts(
        data.points().to_vec(),
        residuals,
        vec![0.0; data.len()],
        data.timestamps().to_vec(),
    )?;
    GpModel::fit(errs, GpConfig::new(kernel_e, false, 0.0)?)
}

/// Variance of the fantasy observation, nudged up the jitter ladder when the
/// error posterior is already (numerically) pinned at the candidate.
fn fantasy_variance(latent_var: f64, base_jitter: f64) -> f64 {
    JITTER_LADDER
        .iter()
        .map(|j| latent_var + base_jitter.max(*j))
        .find(|v| *v > 1e-300)
        .unwrap_or(JITTER_LADDER[JITTER_LADDER.len() - 1])
}

/// Average `|e(tau)|` over the candidate set after adding a zero-residual
/// observation at `x_cand` to the error model.
pub fn f2_value(error_model: &GpModel, x_cand: &[f64], candidates: &CandidateSet) -> Result<f64> {
    let kern = *error_model.kernel();
    let c_pred = error_model.predict(x_cand)?;
    let wc = error_model.whiten(&error_model.kernel_vector(x_cand));
    let var = fantasy_variance(1.0 - wc.norm_squared(), error_model.jitter());
    let gain = c_pred.mean / var;
    let mut acc = 0.0;
    for tau in candidates.points() {
        let k = error_model.kernel_vector(tau);
        let mean = k.dot(error_model.alpha()) + error_model.y_offset();
        let cov = kern.eval(tau, x_cand)? - error_model.whiten(&k).dot(&wc);
        acc += (mean - cov * gain).abs();
    }
    Ok(acc / candidates.len() as f64)
}

/// F3 at a single candidate.
pub fn f3_value(model: &GpModel, x_cand: &[f64], candidates: &CandidateSet, mode: F3Mode) -> Result<f64> {
    match mode {
        F3Mode::Exact => Ok(-crate::information::exact_info_objective(model, x_cand, candidates)?),
        F3Mode::Variance => Ok(model.predict(x_cand)?.variance),
    }
}

/// Every objective evaluated over a candidate set, plus what normalization
/// and the fallback rule need.
#[derive(Debug, Clone)]
pub struct ObjectiveTable {
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    /// Predictive variance of the primary model.
    pub variance: Vec<f64>,
    /// `|e(tau)|` of the error model before any fantasy update.
    pub error_abs: Vec<f64>,
    /// `ln |C|` of the primary model, for information summaries.
    pub log_det: f64,
    pub mode: F3Mode,
}

impl ObjectiveTable {
    pub fn compute(
        model: &GpModel,
        error_model: &GpModel,
        candidates: &CandidateSet,
        mode: F3Mode,
    ) -> Result<Self> {
        let pts = candidates.points();
        let f1: Vec<f64> = model.predict_many(pts)?.iter().map(|p| p.mean).collect();
        let post = Posterior::new(model, pts);
        let variance: Vec<f64> = post.variances().iter().map(|v| v.max(0.0)).collect();
        let f3 = match mode {
            F3Mode::Variance => variance.clone(),
            F3Mode::Exact => post.exact_objectives()?.into_iter().map(|o| -o).collect(),
        };
        let (f2, error_abs) = f2_batch(error_model, candidates)?;
        Ok(ObjectiveTable {
            f1,
            f2,
            f3,
            variance,
            error_abs,
            log_det: model.log_det_cov(),
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.f1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f1.is_empty()
    }

    pub fn normalization_bounds(&self) -> NormalizationBounds {
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let (f3_lo, f3_hi) = match self.mode {
            F3Mode::Variance => (0.0, max(&self.variance)),
            F3Mode::Exact => (min(&self.f3), max(&self.f3)),
        };
        NormalizationBounds {
            f1_lo: min(&self.f1),
            f1_hi: max(&self.f1),
            f2_lo: 0.0,
            // The fantasy update can push the averaged error above max |e|.
            f2_hi: max(&self.error_abs).max(max(&self.f2)),
            f3_lo,
            f3_hi,
        }
    }

    /// Objective values of candidate `i` under the given normalization.
    pub fn values(&self, i: usize, nb: &NormalizationBounds) -> ObjectiveValues {
        let [d1, d2, d3] = nb.deltas();
        ObjectiveValues {
            f1: self.f1[i],
            f2: self.f2[i],
            f3: self.f3[i],
            f1n: (self.f1[i] - nb.f1_lo) / d1,
            f2n: (self.f2[i] - nb.f2_lo) / d2,
            f3n: (self.f3[i] - nb.f3_lo) / d3,
        }
    }

    /// Normalized weighted-sum rule; ties go to the lowest index.
    pub fn weighted_sum(&self, weights: &ObjectiveWeights) -> Selection {
        let w = weights.normalized();
        let nb = self.normalization_bounds();
        let [d1, d2, d3] = nb.deltas();
        let score = |i: usize| {
            let mut s = 0.0;
            if w.w1 > 0.0 {
                s += w.w1 / d1 * (self.f1[i] - nb.f1_lo);
            }
            if w.w2 > 0.0 {
                s -= w.w2 / d2 * self.f2[i];
            }
            if w.w3 > 0.0 {
                s += w.w3 / d3 * (self.f3[i] - nb.f3_lo);
            }
            s
        };
        let mut best = 0;
        let mut best_score = score(0);
        for i in 1..self.len() {
            let s = score(i);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        Selection {
            index: best,
            values: self.values(best, &nb),
            fallback_used: false,
        }
    }

    /// Largest F1 subject to `F2 <= b1` and `F3 <= b2`. Falls back to the
    /// largest predictive variance when nothing is feasible.
    pub fn bounded(&self, bounds: &ObjectiveBounds) -> Selection {
        let nb = self.normalization_bounds();
        let mut best: Option<usize> = None;
        for i in 0..self.len() {
            if self.f2[i] <= bounds.b1 && self.f3[i] <= bounds.b2 && best.is_none_or(|b| self.f1[i] > self.f1[b]) {
                best = Some(i);
            }
        }
        match best {
            Some(index) => Selection {
                index,
                values: self.values(index, &nb),
                fallback_used: false,
            },
            None => {
                let index = argmax(&self.variance);
                Selection {
                    index,
                    values: self.values(index, &nb),
                    fallback_used: true,
                }
            }
        }
    }
}

/// F2 for every candidate, and the un-augmented `|e|` over the set.
///
/// For a candidate `c` with error-posterior mean `mu_c` and latent variance
/// `s_c`, the fantasy update shifts the mean at `tau` by
/// `-cov(tau, c) * mu_c / s_c`, where
/// `cov(tau, c) = Q(tau, c) - w_tau . w_c` and `w = L^{-1} k`.
///
/// `cov` is symmetric, so each unordered pair is visited once and feeds
/// both candidates' sums.
fn f2_batch(error_model: &GpModel, candidates: &CandidateSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let pts = candidates.points();
    let n = pts.len();
    let d = candidates.dim();
    let scale = -0.5 / error_model.kernel().length_scale_sq();
    let flat: Vec<f64> = pts.iter().flatten().copied().collect();
    let mean: Vec<f64> = error_model.predict_many(pts)?.iter().map(|p| p.mean).collect();
    let error_abs: Vec<f64> = mean.iter().map(|m| m.abs()).collect();
    let w = error_model.whiten_many(pts);
    let gain: Vec<f64> = (0..n)
        .map(|j| {
            let var = fantasy_variance(1.0 - w.column(j).norm_squared(), error_model.jitter());
            mean[j] / var
        })
        .collect();

    let mut f2 = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let rows = F2_BLOCK_ROWS.min(n - start);
        // Column r holds w_tau . w_{start + r} for tau >= start.
        let gram: DMatrix<f64> = if w.nrows() > 0 {
            w.columns(start, n - start).transpose() * w.columns(start, rows)
        } else {
            DMatrix::zeros(n - start, rows)
        };
        for r in 0..rows {
            let j = start + r;
            let (gj, mj) = (gain[j], mean[j]);
            let pj = &flat[j * d..(j + 1) * d];
            let col = gram.column(r);
            let mut acc = (mj - (1.0 - col[r]) * gj).abs();
            for tau in (j + 1)..n {
                let pt = &flat[tau * d..(tau + 1) * d];
                let d2: f64 = pj.iter().zip(pt).map(|(a, b)| (a - b) * (a - b)).sum();
                let arg = scale * d2;
                let q = if arg < EXP_UNDERFLOW { 0.0 } else { arg.exp() };
                let cov = q - col[tau - start];
                acc += (mean[tau] - cov * gj).abs();
                f2[tau] += (mj - cov * gain[tau]).abs();
            }
            f2[j] += acc;
        }
        start += rows;
    }
    for v in &mut f2 {
        *v /= n as f64;
    }
    Ok((f2, error_abs))
}

pub fn normalization_bounds(
    model: &GpModel,
    error_model: &GpModel,
    candidates: &CandidateSet,
    mode: F3Mode,
) -> Result<NormalizationBounds> {
    Ok(ObjectiveTable::compute(model, error_model, candidates, mode)?.normalization_bounds())
}

pub fn weighted_sum_select(
    model: &GpModel,
    error_model: &GpModel,
    candidates: &CandidateSet,
    weights: &ObjectiveWeights,
    mode: F3Mode,
) -> Result<Selection> {
    Ok(ObjectiveTable::compute(model, error_model, candidates, mode)?.weighted_sum(weights))
}

pub fn bounded_objective_select(
    model: &GpModel,
    error_model: &GpModel,
    candidates: &CandidateSet,
    bounds: &ObjectiveBounds,
    mode: F3Mode,
) -> Result<Selection> {
    Ok(ObjectiveTable::compute(model, error_model, candidates, mode)?.bounded(bounds))
}
