//! Information content of prospective observations under a fitted GP.
//!
//! Extending the training covariance `C` by one prospective point gives
//! `C_p`; extending it by a prospective observation `x_cand` and an
//! evaluation point `x` gives `C_q`. Both determinants factor through the
//! Schur complement of `C`, so `|C_p| = |C| v(x)` and `|C_q| = |C| |S|` with
//! `S` the 2x2 posterior covariance block. All aggregate objectives are
//! accumulated in log space.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::sampling::CandidateSet;

/// Floor applied to predictive variances before taking logarithms.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Jitter tried on the diagonal of a singular 2x2 Schur block.
const SCHUR_JITTER: [f64; 3] = [1e-10, 1e-8, 1e-6];

/// Differential entropy of a zero-mean Gaussian with covariance `cov`.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<f64> {
    if !cov.is_square() || cov.nrows() == 0 {
        return Err(Error::invalid(format!(
            "entropy needs a nonempty square covariance, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let d = cov.nrows() as f64;
    let chol = Cholesky::new(cov.clone())
        .ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(0.5 * d + 0.5 * d * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det)
}

/// Covariance of the training set extended by one prospective observation.
#[derive(Debug, Clone)]
pub struct ExtendedCovP {
    pub matrix: DMatrix<f64>,
    log_det_base: f64,
    schur: f64,
}

impl ExtendedCovP {
    /// `kappa - k^T C^{-1} k`, the predictive variance at the new point.
    pub fn schur(&self) -> f64 {
        self.schur
    }

    /// `|C_p|` through the Schur complement.
    pub fn det(&self) -> f64 {
        self.log_det_base.exp() * self.schur
    }

    pub fn log_det(&self) -> f64 {
        self.log_det_base + self.schur.ln()
    }
}

pub fn extended_cov_p(model: &GpModel, x: &[f64]) -> Result<ExtendedCovP> {
    let m = model.len();
    let k = model.kernel_vector(x);
    let kappa = model.kernel().eval(x, x)? + model.query_noise();
    let mut matrix = DMatrix::zeros(m + 1, m + 1);
    matrix
        .view_mut((0, 0), (m, m))
        .copy_from(&crate::gp::build_covariance(model.data(), model.kernel()));
    for i in 0..m {
        matrix[(m, i)] = k[i];
        matrix[(i, m)] = k[i];
    }
    matrix[(m, m)] = kappa;
    Ok(ExtendedCovP {
        matrix,
        log_det_base: model.log_det_cov(),
        schur: model.variance_unclamped(x)?,
    })
}

/// Covariance extended by a prospective observation `x_cand` and an
/// evaluation point `x`, in that order.
#[derive(Debug, Clone)]
pub struct ExtendedCovQ {
    pub matrix: DMatrix<f64>,
    log_det_base: f64,
    schur: [[f64; 2]; 2],
}

impl ExtendedCovQ {
    /// Posterior covariance block of `(x_cand, x)` given the data.
    pub fn schur(&self) -> [[f64; 2]; 2] {
        self.schur
    }

    pub fn schur_det(&self) -> f64 {
        let s = self.schur;
        s[0][0] * s[1][1] - s[0][1] * s[1][0]
    }

    /// `|C_q| = |C| |S|`.
    pub fn det(&self) -> f64 {
        self.log_det_base.exp() * self.schur_det()
    }
}

pub fn extended_cov_q(model: &GpModel, x: &[f64], x_cand: &[f64]) -> Result<ExtendedCovQ> {
    let m = model.len();
    let kern = model.kernel();
    let sigma = model.query_noise();
    let k = model.kernel_vector(x);
    let kc = model.kernel_vector(x_cand);
    let cross = kern.eval(x, x_cand)?;
    let kappa = kern.eval(x, x)? + sigma;
    let kappa_c = kern.eval(x_cand, x_cand)? + sigma;

    let mut matrix = DMatrix::zeros(m + 2, m + 2);
    matrix
        .view_mut((0, 0), (m, m))
        .copy_from(&crate::gp::build_covariance(model.data(), kern));
    for i in 0..m {
        matrix[(m, i)] = kc[i];
        matrix[(i, m)] = kc[i];
        matrix[(m + 1, i)] = k[i];
        matrix[(i, m + 1)] = k[i];
    }
    matrix[(m, m)] = kappa_c;
    matrix[(m + 1, m + 1)] = kappa;
    matrix[(m, m + 1)] = cross;
    matrix[(m + 1, m)] = cross;

    let w = model.whiten(&k);
    let wc = model.whiten(&kc);
    let off = cross - wc.dot(&w);
    let schur = [[kappa_c - wc.norm_squared(), off], [off, kappa - w.norm_squared()]];
    Ok(ExtendedCovQ {
        matrix,
        log_det_base: model.log_det_cov(),
        schur,
    })
}

/// Posterior geometry of a point set: whitened kernel columns and
/// predictive variances, shared by the batch objectives.
pub(crate) struct Posterior<'a> {
    model: &'a GpModel,
    points: &'a [Vec<f64>],
    whitened: DMatrix<f64>,
    variances: Vec<f64>,
}

impl<'a> Posterior<'a> {
    pub(crate) fn new(model: &'a GpModel, points: &'a [Vec<f64>]) -> Self {
        let whitened = model.whiten_many(points);
        let base = 1.0 + model.query_noise();
        let variances = (0..points.len())
            .map(|j| base - whitened.column(j).norm_squared())
            .collect();
        Posterior {
            model,
            points,
            whitened,
            variances,
        }
    }

    /// Unclamped predictive variances, in point order.
    pub(crate) fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// `ln |S|` for the pair (candidate `j`, evaluation point `i`).
    fn log_schur_det(&self, j: usize, i: usize, cross_latent: f64) -> Result<f64> {
        let (vj, vi) = (self.variances[j], self.variances[i]);
        let c2 = cross_latent * cross_latent;
        let det = vj * vi - c2;
        if det > 0.0 {
            return Ok(det.ln());
        }
        for jit in SCHUR_JITTER {
            let det = (vj + jit) * (vi + jit) - c2;
            if det > 0.0 {
                return Ok(det.ln());
            }
        }
        Err(Error::Numeric(format!(
            "|C_q| is not positive for candidate {:?} at evaluation point {:?}",
            self.points[j], self.points[i]
        )))
    }

    /// `sum_x ln |C_q(x, x_cand)|` for every candidate, with the point set
    /// itself as the evaluation grid.
    pub(crate) fn exact_objectives(&self) -> Result<Vec<f64>> {
        let n = self.points.len();
        let base = self.model.log_det_cov();
        let kern = *self.model.kernel();
        let gram = if self.whitened.nrows() > 0 {
            self.whitened.tr_mul(&self.whitened)
        } else {
            DMatrix::zeros(n, n)
        };
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    let cross = kern.eval_unchecked(&self.points[i], &self.points[j]) - gram[(i, j)];
                    acc += base + self.log_schur_det(j, i, cross)?;
                }
                Ok(acc)
            })
            .collect()
    }
}

/// `sum_{x in grid} ln |C_q(x, x_cand)|`; smaller means more informative.
pub fn exact_info_objective(model: &GpModel, x_cand: &[f64], grid: &CandidateSet) -> Result<f64> {
    let kern = model.kernel();
    let sigma = model.query_noise();
    let wc = model.whiten(&model.kernel_vector(x_cand));
    let vc = kern.eval(x_cand, x_cand)? + sigma - wc.norm_squared();
    let base = model.log_det_cov();
    let mut acc = 0.0;
    for x in grid.points() {
        let w = model.whiten(&model.kernel_vector(x));
        let v = kern.eval(x, x)? + sigma - w.norm_squared();
        let cross = kern.eval(x, x_cand)? - wc.dot(&w);
        let c2 = cross * cross;
        let det = std::iter::once(0.0)
            .chain(SCHUR_JITTER)
            .map(|j| (vc + j) * (v + j) - c2)
            .find(|d| *d > 0.0)
            .ok_or_else(|| {
                Error::Numeric(format!(
                    "|C_q| is not positive for candidate {x_cand:?} at evaluation point {x:?}"
                ))
            })?;
        acc += base + det.ln();
    }
    Ok(acc)
}

/// Index of the candidate minimizing the exact information objective over
/// the candidate set itself. Ties go to the lowest index.
pub fn select_max_info_exact(model: &GpModel, candidates: &CandidateSet) -> Result<usize> {
    let objectives = Posterior::new(model, candidates.points()).exact_objectives()?;
    Ok(argmin(&objectives))
}

/// Index of the candidate with the largest predictive variance.
pub fn select_max_variance(model: &GpModel, candidates: &CandidateSet) -> usize {
    let post = Posterior::new(model, candidates.points());
    argmax(post.variances())
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Uncertainty summaries of the model over a candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    /// Average predictive variance.
    pub mean_variance: f64,
    /// Average per-candidate predictive entropy `0.5 ln(2 pi e v)`.
    pub mean_entropy: f64,
    /// Average `0.5 ln |C_p(x)|`.
    pub aggregate_entropy: f64,
}

pub fn info_report(model: &GpModel, candidates: &CandidateSet) -> InfoReport {
    let post = Posterior::new(model, candidates.points());
    report_from_variances(model.log_det_cov(), post.variances())
}

pub(crate) fn report_from_variances(log_det: f64, variances: &[f64]) -> InfoReport {
    let n = variances.len() as f64;
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    let (mut sv, mut se, mut sa) = (0.0, 0.0, 0.0);
    for &v in variances {
        let v = v.max(0.0);
        let vf = v.max(VARIANCE_FLOOR);
        sv += v;
        se += 0.5 * (two_pi_e * vf).ln();
        sa += 0.5 * (log_det + vf.ln());
    }
    InfoReport {
        mean_variance: sv / n,
        mean_entropy: se / n,
        aggregate_entropy: sa / n,
    }
}

/// Outcome of the number-guessing bisection example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub initial_entropy_bits: f64,
    pub optimal_split: f64,
}

/// Entropy of a uniform prior over `n_outcomes` and the split probability
/// minimizing the posterior entropy `p ln p + (1 - p) ln (1 - p)`.
pub fn bisection_demo(n_outcomes: u64) -> Result<Bisection> {
    if n_outcomes < 2 {
        return Err(Error::invalid(format!("need at least 2 outcomes, got {n_outcomes}")));
    }
    let p = 1.0 / n_outcomes as f64;
    let initial_entropy_bits = -(0..n_outcomes).map(|_| p * p.log2()).sum::<f64>();

    // Root of the derivative ln p - ln(1 - p) by bisection.
    let slope = |p: f64| p.ln() - (1.0 - p).ln();
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(Bisection {
        initial_entropy_bits,
        optimal_split: 0.5 * (lo + hi),
    })
}
