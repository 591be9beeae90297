#![allow(dead_code)]

use std::collections::HashMap;

use lio_core::{Dataset, GpConfig, GpModel, KernelConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Determinant by Laplace expansion along successive rows, memoized on the
/// set of columns still in play. Shares no code with the Cholesky path.
pub fn det_cofactor(a: &[Vec<f64>]) -> f64 {
    fn go(a: &[Vec<f64>], mask: u32, memo: &mut HashMap<u32, f64>) -> f64 {
        let n = a.len();
        let row = n - mask.count_ones() as usize;
        if row == n {
            return 1.0;
        }
        if let Some(v) = memo.get(&mask) {
            return *v;
        }
        let mut sum = 0.0;
        let mut sign = 1.0;
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            if a[row][j] != 0.0 {
                sum += sign * a[row][j] * go(a, mask & !(1 << j), memo);
            }
            sign = -sign;
        }
        memo.insert(mask, sum);
        sum
    }
    let n = a.len();
    assert!(n < 24);
    go(a, (1u32 << n) - 1, &mut HashMap::new())
}

pub fn se(a: &[f64], b: &[f64], l2: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * l2)).exp()
}

/// Covariance of `points` with `noise[i]` on the diagonal, built directly
/// from the kernel formula.
pub fn brute_cov(points: &[Vec<f64>], noise: &[f64], l2: f64) -> Vec<Vec<f64>> {
    let n = points.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| se(&points[i], &points[j], l2) + if i == j { noise[i] } else { 0.0 })
                .collect()
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// A random GP instance with points kept at least `0.6 * l` apart so that
/// noiseless fits stay well conditioned.
pub struct Instance {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub noise: f64,
    pub l2: f64,
    pub dim: usize,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, max_m: usize, max_d: usize, noiseless: bool) -> Self {
        let dim = rng.random_range(1..=max_d);
        let l2: f64 = rng.random_range(0.05..0.5);
        let noise = if noiseless || rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(1e-3..0.5)
        };
        let m = rng.random_range(0..=max_m);
        let min_sep = 0.6 * l2.sqrt();
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut tries = 0;
        while points.len() < m && tries < 10_000 {
            tries += 1;
            let p: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..3.0)).collect();
            if points.iter().all(|q| se(&p, q, 1.0) < (-min_sep * min_sep / 2.0).exp()) {
                points.push(p);
            }
        }
        let values = points.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
        Instance {
            points,
            values,
            noise,
            l2,
            dim,
        }
    }

    pub fn query(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim).map(|_| rng.random_range(-0.5..3.5)).collect()
    }

    /// A query point at least the generator's minimum separation away from
    /// the data and from `others`.
    pub fn separated_query(&self, rng: &mut ChaCha8Rng, others: &[Vec<f64>]) -> Vec<f64> {
        let min_sep = 0.6 * self.l2.sqrt();
        let far = |p: &Vec<f64>, q: &Vec<f64>| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() >= min_sep * min_sep;
        loop {
            let p = self.query(rng);
            if self.points.iter().chain(others).all(|q| far(&p, q)) {
                return p;
            }
        }
    }

    pub fn dataset(&self) -> Dataset {
        let m = self.points.len();
        Dataset::from_parts(self.points.clone(), self.values.clone(), vec![self.noise; m], vec![0.0; m]).unwrap()
    }

    pub fn model(&self, center: bool) -> GpModel {
        let cfg = GpConfig::new(KernelConfig::new(self.l2).unwrap(), center, self.noise).unwrap();
        GpModel::fit(self.dataset(), cfg).unwrap()
    }
}
