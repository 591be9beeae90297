//! Gaussian-process regression with a squared-exponential kernel.
//!
//! The prior mean is zero (optionally after subtracting the mean of the
//! observed values) and observations carry additive Gaussian noise with a
//! per-point variance. The covariance of the training set is
//! `C = Q + diag(noise)` and is factorized once at fit time; every
//! prediction afterwards is a pair of triangular solves.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum separation between two observed points.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-9;

/// Diagonal jitter tried, in order, before a factorization is declared failed.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// Axis-aligned box the search runs over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::invalid("domain must have at least one dimension"));
        }
        if lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "domain bounds have different lengths ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "domain axis {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Domain { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// True when `other` lies entirely inside this box.
    pub fn encloses(&self, other: &Domain) -> bool {
        other.dim() == self.dim() && self.contains(other.lower()) && self.contains(other.upper())
    }
}

/// Squared-exponential kernel `exp(-|x - x'|^2 / (2 l^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    length_scale_sq: f64,
}

impl KernelConfig {
    pub fn new(length_scale_sq: f64) -> Result<Self> {
        if !(length_scale_sq.is_finite() && length_scale_sq > 0.0) {
            return Err(Error::invalid(format!(
                "kernel length_scale_sq must be positive, got {length_scale_sq}"
            )));
        }
        Ok(KernelConfig { length_scale_sq })
    }

    pub fn length_scale_sq(&self) -> f64 {
        self.length_scale_sq
    }

    /// Kernel value for two points of equal dimension.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() {
            return Err(Error::invalid(format!(
                "kernel arguments differ in dimension ({} vs {})",
                x.len(),
                x2.len()
            )));
        }
        Ok(self.eval_unchecked(x, x2))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        (-sq_dist(x, x2) / (2.0 * self.length_scale_sq)).exp()
    }
}

/// Free-function form of [`KernelConfig::eval`].
pub fn kernel_eval(x: &[f64], x2: &[f64], kernel: &KernelConfig) -> Result<f64> {
    kernel.eval(x, x2)
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Observed points with their values, noise variances and observation times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    noise_vars: Vec<f64>,
    timestamps: Vec<f64>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
        noise_vars: Vec<f64>,
        timestamps: Vec<f64>,
    ) -> Result<Self> {
        let m = points.len();
        if values.len() != m || noise_vars.len() != m || timestamps.len() != m {
            return Err(Error::invalid(format!(
                "dataset columns differ in length: {} points, {} values, {} noise variances, {} timestamps",
                m,
                values.len(),
                noise_vars.len(),
                timestamps.len()
            )));
        }
        let mut data = Dataset::new();
        for (((p, y), s), t) in points.into_iter().zip(values).zip(noise_vars).zip(timestamps) {
            data.push(p, y, s, t)?;
        }
        Ok(data)
    }

    /// Appends an observation. Duplicates are not rejected here; a
    /// noiseless duplicate surfaces as [`Error::IllConditioned`] at fit time.
    pub fn push(&mut self, point: Vec<f64>, value: f64, noise_var: f64, timestamp: f64) -> Result<()> {
        if let Some(first) = self.points.first() {
            if first.len() != point.len() {
                return Err(Error::invalid(format!(
                    "point has dimension {}, dataset has {}",
                    point.len(),
                    first.len()
                )));
            }
        }
        if point.is_empty() {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        if !value.is_finite() {
            return Err(Error::invalid(format!("observed value {value} is not finite")));
        }
        if !(noise_var.is_finite() && noise_var >= 0.0) {
            return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
        }
        if !(timestamp.is_finite() && timestamp >= 0.0) {
            return Err(Error::invalid(format!("timestamp must be >= 0, got {timestamp}")));
        }
        self.points.push(point);
        self.values.push(value);
        self.noise_vars.push(noise_var);
        self.timestamps.push(timestamp);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub(crate) fn noise_vars_mut(&mut self) -> &mut [f64] {
        &mut self.noise_vars
    }

    /// Index pair of the two closest points, with their distance.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let d = sq_dist(&self.points[i], &self.points[j]).sqrt();
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    /// First pair of noise-free observations closer than `tol`.
    pub fn noiseless_duplicate(&self, tol: f64) -> Option<(usize, usize, f64)> {
        let tol_sq = tol * tol;
        for i in 0..self.len() {
            if self.noise_vars[i] > 0.0 {
                continue;
            }
            for j in (i + 1)..self.len() {
                let d2 = sq_dist(&self.points[i], &self.points[j]);
                if self.noise_vars[j] <= 0.0 && d2 <= tol_sq {
                    return Some((i, j, d2.sqrt()));
                }
            }
        }
        None
    }

    /// True if `x` lies within `tol` of an observed point.
    pub fn is_near(&self, x: &[f64], tol: f64) -> bool {
        let tol_sq = tol * tol;
        self.points.iter().any(|p| sq_dist(p, x) <= tol_sq)
    }

    /// Index and value of the largest observation; ties go to the earliest.
    pub fn best_observed(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &y) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| y > b) {
                best = Some((i, y));
            }
        }
        best
    }
}

/// Settings for fitting a [`GpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub kernel: KernelConfig,
    /// Subtract the mean of the observed values before fitting.
    pub center_values: bool,
    /// Noise variance assumed for a prospective observation.
    pub query_noise: f64,
}

impl GpConfig {
    pub fn new(kernel: KernelConfig, center_values: bool, query_noise: f64) -> Result<Self> {
        if !(query_noise.is_finite() && query_noise >= 0.0) {
            return Err(Error::invalid(format!("query noise must be >= 0, got {query_noise}")));
        }
        Ok(GpConfig {
            kernel,
            center_values,
            query_noise,
        })
    }
}

/// Posterior mean and variance at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// A fitted Gaussian process. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    data: Dataset,
    config: GpConfig,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    y_offset: f64,
    jitter: f64,
    log_det: f64,
}

/// Covariance of the training set: kernel matrix plus per-point noise.
pub fn build_covariance(data: &Dataset, kernel: &KernelConfig) -> DMatrix<f64> {
    let m = data.len();
    let pts = data.points();
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        c[(i, i)] = 1.0 + data.noise_vars()[i];
        for j in 0..i {
            let q = kernel.eval_unchecked(&pts[i], &pts[j]);
            c[(i, j)] = q;
            c[(j, i)] = q;
        }
    }
    c
}

/// Cholesky factor of `c + jitter * I`, walking the jitter ladder.
pub(crate) fn factorize(c: &DMatrix<f64>, ladder: &[f64]) -> Option<(Cholesky<f64, nalgebra::Dyn>, f64)> {
    ladder.iter().find_map(|&j| {
        let mut cj = c.clone();
        if j > 0.0 {
            for i in 0..cj.nrows() {
                cj[(i, i)] += j;
            }
        }
        Cholesky::new(cj).and_then(|ch| {
            // nalgebra accepts tiny positive pivots; reject ones that are numerically zero.
            let l = ch.l_dirty();
            let ok = (0..l.nrows()).all(|i| l[(i, i)].is_finite() && l[(i, i)] > 1e-150);
            ok.then_some((ch, j))
        })
    })
}

impl GpModel {
    pub fn fit(data: Dataset, config: GpConfig) -> Result<Self> {
        let m = data.len();
        // Jitter would mask an exact noiseless duplicate; reject it up front.
        if let Some((first, second, distance)) = data.noiseless_duplicate(DEFAULT_DEDUP_TOL) {
            return Err(Error::IllConditioned {
                first,
                second,
                distance,
            });
        }
        let c = build_covariance(&data, &config.kernel);
        let (chol, jitter) = match factorize(&c, &JITTER_LADDER) {
            Some(f) => f,
            None => {
                let (first, second, distance) = data.closest_pair().unwrap_or((0, 0, 0.0));
                return Err(Error::IllConditioned {
                    first,
                    second,
                    distance,
                });
            }
        };
        let y_offset = if config.center_values && m > 0 {
            data.values().iter().sum::<f64>() / m as f64
        } else {
            0.0
        };
        let y = DVector::from_iterator(m, data.values().iter().map(|v| v - y_offset));
        let alpha = chol.solve(&y);
        let l = chol.unpack();
        let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(GpModel {
            data,
            config,
            chol: l,
            alpha,
            y_offset,
            jitter,
            log_det,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn config(&self) -> &GpConfig {
        &self.config
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.config.kernel
    }

    pub fn query_noise(&self) -> f64 {
        self.config.query_noise
    }

    /// Lower-triangular factor `L` with `L L^T = C` (plus any jitter used).
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn y_offset(&self) -> f64 {
        self.y_offset
    }

    /// Diagonal jitter the factorization needed (0 for a clean fit).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `ln |C|` from the Cholesky diagonal.
    pub fn log_det_cov(&self) -> f64 {
        self.log_det
    }

    fn check_dim(&self, q: &[f64]) -> Result<()> {
        match self.data.dim() {
            Some(d) if d != q.len() => Err(Error::invalid(format!(
                "query has dimension {}, model has {}",
                q.len(),
                d
            ))),
            _ if q.is_empty() => Err(Error::invalid("query must have at least one coordinate")),
            _ => Ok(()),
        }
    }

    /// Kernel vector `k(q)` against the training points.
    pub fn kernel_vector(&self, q: &[f64]) -> DVector<f64> {
        let kern = self.config.kernel;
        DVector::from_iterator(self.len(), self.data.points().iter().map(|p| kern.eval_unchecked(p, q)))
    }

    /// `L^{-1} k(q)`; its squared norm is `k^T C^{-1} k`.
    pub(crate) fn whiten(&self, k: &DVector<f64>) -> DVector<f64> {
        if k.is_empty() {
            return k.clone();
        }
        self.chol
            .solve_lower_triangular(k)
            .expect("cholesky factor has a nonzero diagonal")
    }

    /// Whitened kernel vectors for many points, one column per point.
    pub(crate) fn whiten_many(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let m = self.len();
        let kern = self.config.kernel;
        let pts = self.data.points();
        let mut k = DMatrix::zeros(m, points.len());
        for (j, q) in points.iter().enumerate() {
            for i in 0..m {
                k[(i, j)] = kern.eval_unchecked(&pts[i], q);
            }
        }
        if m > 0 {
            self.chol.solve_lower_triangular_mut(&mut k);
        }
        k
    }

    /// Predictive variance before clamping at zero.
    pub fn variance_unclamped(&self, q: &[f64]) -> Result<f64> {
        self.check_dim(q)?;
        let w = self.whiten(&self.kernel_vector(q));
        Ok(1.0 + self.config.query_noise - w.norm_squared())
    }

    pub fn predict(&self, q: &[f64]) -> Result<Prediction> {
        self.check_dim(q)?;
        let k = self.kernel_vector(q);
        let mean = k.dot(&self.alpha) + self.y_offset;
        let w = self.whiten(&k);
        let variance = clamp_variance(1.0 + self.config.query_noise - w.norm_squared());
        Ok(Prediction { mean, variance })
    }

    /// Posterior covariance of the latent function at two points.
    pub fn latent_covariance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        let wa = self.whiten(&self.kernel_vector(a));
        let wb = self.whiten(&self.kernel_vector(b));
        Ok(self.config.kernel.eval_unchecked(a, b) - wa.dot(&wb))
    }

    /// Means and variances for a batch of points, in order.
    pub fn predict_many(&self, points: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        if let Some(q) = points.first() {
            self.check_dim(q)?;
        }
        let w = self.whiten_many(points);
        let kern = self.config.kernel;
        let mut out = Vec::with_capacity(points.len());
        for (j, q) in points.iter().enumerate() {
            if q.len() != points[0].len() {
                return Err(Error::invalid("batch points differ in dimension"));
            }
            let mean = self
                .data
                .points()
                .iter()
                .zip(self.alpha.iter())
                .map(|(p, a)| kern.eval_unchecked(p, q) * a)
                .sum::<f64>()
                + self.y_offset;
            let variance = clamp_variance(1.0 + self.config.query_noise - w.column(j).norm_squared());
            out.push(Prediction { mean, variance });
        }
        Ok(out)
    }
}

fn clamp_variance(v: f64) -> f64 {
    v.max(0.0)
}
