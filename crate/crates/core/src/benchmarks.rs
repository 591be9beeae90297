//! Test objectives, oriented for maximization.
//!
//! Goldstein-Price, Branin and the six-hump camel are minimization problems
//! in their usual form; the registered versions return the negated value.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::Domain;
use crate::sampling::grid_sample;
use crate::search::Oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    /// `sin(5x) / x` on `[0.1, 3.9]`.
    Sinc5,
    GoldsteinPriceInv,
    BraninInv,
    Camel6Inv,
}

pub const ALL: [Benchmark; 4] = [
    Benchmark::Sinc5,
    Benchmark::GoldsteinPriceInv,
    Benchmark::BraninInv,
    Benchmark::Camel6Inv,
];

/// A known maximizer and its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub point: Vec<f64>,
    pub value: f64,
}

pub fn goldstein_price(x: f64, y: f64) -> f64 {
    let a = 1.0 + (x + y + 1.0).powi(2) * (19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y + 3.0 * y * y);
    let b = 30.0
        + (2.0 * x - 3.0 * y).powi(2) * (18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y - 36.0 * x * y + 27.0 * y * y);
    a * b
}

pub fn branin(x: f64, y: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (y - b * x * x + c * x - 6.0).powi(2) + 10.0 * (1.0 - t) * x.cos() + 10.0
}

pub fn six_hump_camel(x: f64, y: f64) -> f64 {
    (4.0 - 2.1 * x * x + x.powi(4) / 3.0) * x * x + x * y + (-4.0 + 4.0 * y * y) * y * y
}

const BRANIN_MIN: f64 = 0.397_887_357_729_738_2;
const CAMEL_MIN: f64 = -1.031_628_453_489_877;
const CAMEL_ARGMIN: [f64; 2] = [0.089_842_013_683_013_3, -0.712_656_403_270_413_5];

impl Benchmark {
    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Sinc5 => "sinc5",
            Benchmark::GoldsteinPriceInv => "goldstein_price_inv",
            Benchmark::BraninInv => "branin_inv",
            Benchmark::Camel6Inv => "camel6_inv",
        }
    }

    pub fn domain(&self) -> Domain {
        let (lo, hi) = match self {
            Benchmark::Sinc5 => (vec![0.1], vec![3.9]),
            Benchmark::GoldsteinPriceInv | Benchmark::Camel6Inv => (vec![-2.0, -2.0], vec![2.0, 2.0]),
            Benchmark::BraninInv => (vec![-5.0, 0.0], vec![10.0, 15.0]),
        };
        Domain::new(lo, hi).expect("benchmark domains are valid")
    }

    /// Grid spacing used for this objective in the reference experiments.
    pub fn grid_step(&self) -> f64 {
        match self {
            Benchmark::Sinc5 => 0.01,
            Benchmark::GoldsteinPriceInv | Benchmark::Camel6Inv => 0.05,
            Benchmark::BraninInv => 0.2,
        }
    }

    /// Value at `x` without domain checks.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Sinc5 => (5.0 * x[0]).sin() / x[0],
            Benchmark::GoldsteinPriceInv => -goldstein_price(x[0], x[1]),
            Benchmark::BraninInv => -branin(x[0], x[1]),
            Benchmark::Camel6Inv => -six_hump_camel(x[0], x[1]),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let dom = self.domain();
        if !dom.contains(x) {
            return Err(Error::invalid(format!(
                "{x:?} is outside the {} domain {:?}..{:?}",
                self.name(),
                dom.lower(),
                dom.upper()
            )));
        }
        Ok(self.value(x))
    }

    pub fn true_optima(&self) -> Vec<Optimum> {
        match self {
            Benchmark::Sinc5 => {
                // The supremum sits on the domain boundary; report the grid argmax.
                let grid = grid_sample(&self.domain(), self.grid_step()).expect("valid grid");
                let best = grid
                    .points()
                    .iter()
                    .map(|p| (p, self.value(p)))
                    .fold(None::<(&Vec<f64>, f64)>, |acc, (p, v)| match acc {
                        Some((_, bv)) if bv >= v => acc,
                        _ => Some((p, v)),
                    })
                    .expect("nonempty grid");
                vec![Optimum {
                    point: best.0.clone(),
                    value: best.1,
                }]
            }
            Benchmark::GoldsteinPriceInv => vec![Optimum {
                point: vec![0.0, -1.0],
                value: -3.0,
            }],
            Benchmark::BraninInv => [[-PI, 12.275], [PI, 2.275], [3.0 * PI, 2.475]]
                .iter()
                .map(|p| Optimum {
                    point: p.to_vec(),
                    value: -BRANIN_MIN,
                })
                .collect(),
            Benchmark::Camel6Inv => vec![
                Optimum {
                    point: vec![-CAMEL_ARGMIN[0], -CAMEL_ARGMIN[1]],
                    value: -CAMEL_MIN,
                },
                Optimum {
                    point: CAMEL_ARGMIN.to_vec(),
                    value: -CAMEL_MIN,
                },
            ],
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL.iter()
            .copied()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown benchmark '{s}'")))
    }
}

pub fn eval_benchmark(name: &str, x: &[f64]) -> Result<f64> {
    name.parse::<Benchmark>()?.evaluate(x)
}

pub fn true_optima(name: &str) -> Result<Vec<Optimum>> {
    Ok(name.parse::<Benchmark>()?.true_optima())
}

/// Benchmark oracle with additive seeded Gaussian noise.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    benchmark: Benchmark,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl NoisyOracle {
    pub fn benchmark(&self) -> Benchmark {
        self.benchmark
    }
}

impl Oracle for NoisyOracle {
    fn observe(&mut self, x: &[f64]) -> Result<f64> {
        let y = self.benchmark.evaluate(x)?;
        Ok(match &self.noise {
            Some(n) => y + n.sample(&mut self.rng),
            None => y,
        })
    }
}

pub fn noisy_oracle(benchmark: Benchmark, noise_var: f64, seed: u64) -> Result<NoisyOracle> {
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let noise = if noise_var > 0.0 {
        Some(Normal::new(0.0, noise_var.sqrt()).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    Ok(NoisyOracle {
        benchmark,
        noise,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((eval_benchmark("goldstein_price_inv", &[0.0, -1.0]).unwrap() - -3.0).abs() < 1e-12);
        assert!((eval_benchmark("branin_inv", &[PI, 2.275]).unwrap() - -0.3979).abs() < 1e-4);
        assert!((eval_benchmark("camel6_inv", &[0.0898, -0.7126]).unwrap() - 1.0316).abs() < 1e-4);
        assert!((eval_benchmark("sinc5", &[0.1]).unwrap() - 0.5f64.sin() / 0.1).abs() < 1e-15);
        assert!((eval_benchmark("sinc5", &[0.1]).unwrap() - 4.7943).abs() < 1e-4);
    }

    #[test]
    fn errors() {
        assert!(matches!(eval_benchmark("rosenbrock", &[0.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(eval_benchmark("sinc5", &[4.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(eval_benchmark("branin_inv", &[0.0]), Err(Error::InvalidArgument(_))));
        assert!(true_optima("nope").is_err());
    }

    #[test]
    fn registry() {
        let gp = true_optima("goldstein_price_inv").unwrap();
        assert_eq!(gp.len(), 1);
        assert_eq!(gp[0].point, vec![0.0, -1.0]);

        let camel = true_optima("camel6_inv").unwrap();
        assert_eq!(camel.len(), 2);
        assert!((camel[0].point[0] + 0.09).abs() < 0.01 && (camel[0].point[1] - 0.71).abs() < 0.01);
        assert!((camel[1].point[0] - 0.09).abs() < 0.01 && (camel[1].point[1] + 0.71).abs() < 0.01);

        // Rounded reference locations.
        let branin = true_optima("branin_inv").unwrap();
        for (p, r) in branin.iter().zip([[-PI, 12.28], [PI, 2.28], [9.4, 2.47]]) {
            assert!((p.point[0] - r[0]).abs() < 0.05 && (p.point[1] - r[1]).abs() < 0.01);
        }
    }

    #[test]
    fn sinc_registry_is_the_grid_argmax() {
        let opt = Benchmark::Sinc5.true_optima();
        let grid = grid_sample(&Benchmark::Sinc5.domain(), 0.01).unwrap();
        let scan = grid
            .points()
            .iter()
            .map(|p| Benchmark::Sinc5.value(p))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(opt[0].value, scan);
        assert_eq!(opt[0].point, vec![0.1]);
    }

    #[test]
    fn optima_are_local_maxima() {
        for b in ALL {
            for opt in b.true_optima() {
                assert!(b.domain().contains(&opt.point), "{b} optimum outside domain");
                let r = 1e-3;
                for i in -2..=2 {
                    for j in -2..=2 {
                        let mut p = opt.point.clone();
                        p[0] += r * i as f64 / 2.0;
                        if p.len() > 1 {
                            p[1] += r * j as f64 / 2.0;
                        }
                        if !b.domain().contains(&p) {
                            continue;
                        }
                        assert!(b.value(&p) <= opt.value + 1e-6, "{b} at {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn inversion_is_exact() {
        for &(x, y) in &[(0.3, -1.2), (-1.9, 1.9), (1.0, 0.0)] {
            assert_eq!(Benchmark::GoldsteinPriceInv.value(&[x, y]), -goldstein_price(x, y));
            assert_eq!(Benchmark::Camel6Inv.value(&[x, y]), -six_hump_camel(x, y));
            assert_eq!(Benchmark::BraninInv.value(&[x + 2.0, y + 5.0]), -branin(x + 2.0, y + 5.0));
        }
    }

    #[test]
    fn domains() {
        assert_eq!(Benchmark::Sinc5.domain().lower(), &[0.1]);
        assert_eq!(Benchmark::BraninInv.domain().upper(), &[10.0, 15.0]);
        assert_eq!(Benchmark::Camel6Inv.domain().lower(), &[-2.0, -2.0]);
        assert_eq!(Benchmark::GoldsteinPriceInv.domain().upper(), &[2.0, 2.0]);
    }

    #[test]
    fn noise() {
        let mut exact = noisy_oracle(Benchmark::BraninInv, 0.0, 1).unwrap();
        assert_eq!(exact.observe(&[1.0, 1.0]).unwrap(), Benchmark::BraninInv.value(&[1.0, 1.0]));

        let mut a = noisy_oracle(Benchmark::Sinc5, 0.2, 9).unwrap();
        let mut b = noisy_oracle(Benchmark::Sinc5, 0.2, 9).unwrap();
        for _ in 0..20 {
            assert_eq!(a.observe(&[1.0]).unwrap(), b.observe(&[1.0]).unwrap());
        }

        let var = 0.25;
        let mut o = noisy_oracle(Benchmark::Sinc5, var, 3).unwrap();
        let truth = Benchmark::Sinc5.value(&[2.0]);
        let xs: Vec<f64> = (0..10_000).map(|_| o.observe(&[2.0]).unwrap() - truth).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sv = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((sv - var).abs() < 0.1 * var, "sample variance {sv}");
        assert!(noisy_oracle(Benchmark::Sinc5, -1.0, 0).is_err());
    }
}
