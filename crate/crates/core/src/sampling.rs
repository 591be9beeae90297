//! Candidate sets drawn from the search box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{Dataset, Domain};

/// Default cap on the number of grid points.
pub const DEFAULT_GRID_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SampleOrigin {
    Grid { step: f64 },
    MonteCarlo { count: usize, seed: u64 },
    Explicit,
}

/// A finite, nonempty sample of the search box.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    points: Vec<Vec<f64>>,
    origin: SampleOrigin,
}

impl CandidateSet {
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_origin(points, SampleOrigin::Explicit)
    }

    fn with_origin(points: Vec<Vec<f64>>, origin: SampleOrigin) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::ExhaustedCandidates);
        };
        let d = first.len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("candidate points must share a nonzero dimension"));
        }
        Ok(CandidateSet { points, origin })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn origin(&self) -> SampleOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

fn axis_steps(lo: f64, hi: f64, step: f64) -> f64 {
    ((hi - lo) / step - 1e-9).ceil().max(0.0)
}

/// Points `lower, lower + step, ...` along one axis, closed at `upper`.
fn axis_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n_steps = axis_steps(lo, hi, step) as usize;
    (0..=n_steps)
        .map(|k| if k == n_steps { hi } else { (lo + k as f64 * step).min(hi) })
        .collect()
}

pub fn grid_sample(domain: &Domain, step: f64) -> Result<CandidateSet> {
    grid_sample_capped(domain, step, DEFAULT_GRID_CAP)
}

/// Regular grid with spacing `step` on every axis, both ends included.
/// Row-major order, last axis fastest.
pub fn grid_sample_capped(domain: &Domain, step: f64, cap: usize) -> Result<CandidateSet> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(format!("grid step must be positive, got {step}")));
    }
    for (i, (lo, hi)) in domain.lower().iter().zip(domain.upper()).enumerate() {
        if step > (hi - lo) * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "grid step {step} exceeds the width {} of axis {i}",
                hi - lo
            )));
        }
    }
    let bounds = || domain.lower().iter().zip(domain.upper());
    let requested: f64 = bounds().map(|(lo, hi)| axis_steps(*lo, *hi, step) + 1.0).product();
    if requested > cap as f64 {
        return Err(Error::ResourceLimit { requested, cap });
    }
    let axes: Vec<Vec<f64>> = bounds().map(|(lo, hi)| axis_points(*lo, *hi, step)).collect();

    let total = requested as usize;
    let d = axes.len();
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        points.push(idx.iter().zip(&axes).map(|(i, a)| a[*i]).collect());
        for ax in (0..d).rev() {
            idx[ax] += 1;
            if idx[ax] < axes[ax].len() {
                break;
            }
            idx[ax] = 0;
        }
    }
    CandidateSet::with_origin(points, SampleOrigin::Grid { step })
}

/// `count` independent uniform draws from the box, reproducible per seed.
pub fn monte_carlo_sample(domain: &Domain, count: usize, seed: u64) -> Result<CandidateSet> {
    if count == 0 {
        return Err(Error::invalid("Monte Carlo sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|_| {
            domain
                .lower()
                .iter()
                .zip(domain.upper())
                .map(|(lo, hi)| (lo + (hi - lo) * rng.random::<f64>()).min(*hi))
                .collect()
        })
        .collect();
    CandidateSet::with_origin(points, SampleOrigin::MonteCarlo { count, seed })
}

/// Smallest `N` with `(1 - eps)^N <= delta`: with that many random samples,
/// the best sample falls outside the top-`eps` probability mass with
/// probability at most `delta`, whatever the sampling distribution.
pub fn min_sample_count(eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let miss = 1.0 - eps;
    let mut n = ((1.0 / delta).ln() / (1.0 / miss).ln()).ceil().max(1.0) as u64;
    // Settle rounding at the boundary against the defining inequality.
    while miss.powf(n as f64) > delta {
        n += 1;
    }
    while n > 1 && miss.powf((n - 1) as f64) <= delta {
        n -= 1;
    }
    Ok(n)
}

/// Drops every candidate within `tol` of an observed point; order is kept.
pub fn exclude_observed(candidates: &CandidateSet, data: &Dataset, tol: f64) -> Result<CandidateSet> {
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be >= 0, got {tol}")));
    }
    if let Some(d) = data.dim() {
        if d != candidates.dim() {
            return Err(Error::invalid(format!(
                "candidates have dimension {}, data has {d}",
                candidates.dim()
            )));
        }
    }
    let kept: Vec<Vec<f64>> = candidates
        .points()
        .iter()
        .filter(|p| !data.is_near(p, tol))
        .cloned()
        .collect();
    CandidateSet::with_origin(kept, candidates.origin())
}
