//! JSON run configuration: parsing, defaults and validation.

use std::path::{Path, PathBuf};

use lio_core::search::{LoopConfig, Sampler, SelectionMethod};
use lio_core::{Benchmark, Domain, F3Mode, KernelConfig, ObjectiveBounds, ObjectiveWeights};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable that replaces the sampler seed.
pub const SEED_ENV: &str = "LIO_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    Grid { step: f64 },
    MonteCarlo { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub b1: f64,
    pub b2: f64,
}

/// The on-disk configuration, as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    /// Shell command speaking the line protocol on stdin/stdout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_cmd: Option<String>,
    /// Defaults to the benchmark's own domain; required with `oracle_cmd`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    pub sampler: SamplerSpec,
    /// Squared length scale of the value kernel.
    pub kernel_f_var: f64,
    /// Squared length scale of the error kernel.
    pub kernel_e_var: f64,
    pub noise_var: f64,
    pub method: SelectionMethod,
    /// Required for the weighted method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 3]>,
    /// Required for the bounded method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSpec>,
    #[serde(default)]
    pub f3_mode: F3Mode,
    pub budget: i64,
    #[serde(default = "default_true")]
    pub center_values: bool,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_dedup_tol")]
    pub dedup_tol: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_points: Vec<Vec<f64>>,
    /// Relative paths resolve against the config file's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_true() -> bool {
    true
}

fn default_dedup_tol() -> f64 {
    lio_core::gp::DEFAULT_DEDUP_TOL
}

fn default_output_dir() -> String {
    ".".into()
}

/// Where observations come from.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleBinding {
    Benchmark(Benchmark),
    Command(String),
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub loop_config: LoopConfig,
    pub oracle: OracleBinding,
    pub initial_points: Vec<Vec<f64>>,
    pub output_dir: PathBuf,
    /// The file contents after defaults and the seed override.
    pub echo: RunConfigFile,
}

impl RunConfigFile {
    /// Parses JSON text; errors name the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                CliError::key(&path, inner)
            }
        })
    }

    /// The file form of an in-memory configuration.
    pub fn from_loop_config(cfg: &LoopConfig, oracle: &OracleBinding, output_dir: &str) -> Self {
        let (benchmark, oracle_cmd) = match oracle {
            OracleBinding::Benchmark(b) => (Some(b.name().to_string()), None),
            OracleBinding::Command(c) => (None, Some(c.clone())),
        };
        RunConfigFile {
            benchmark,
            oracle_cmd,
            domain: Some(DomainSpec {
                lower: cfg.domain.lower().to_vec(),
                upper: cfg.domain.upper().to_vec(),
            }),
            sampler: match cfg.sampler {
                Sampler::Grid { step } => SamplerSpec::Grid { step },
                Sampler::MonteCarlo { count, seed } => SamplerSpec::MonteCarlo { count, seed },
            },
            kernel_f_var: cfg.kernel_f.length_scale_sq(),
            kernel_e_var: cfg.kernel_e.length_scale_sq(),
            noise_var: cfg.noise_var,
            method: cfg.method,
            weights: Some([cfg.weights.w1, cfg.weights.w2, cfg.weights.w3]),
            bounds: Some(BoundsSpec {
                b1: cfg.bounds.b1,
                b2: cfg.bounds.b2,
            }),
            f3_mode: cfg.f3_mode,
            budget: cfg.budget as i64,
            center_values: cfg.center_values,
            eta: cfg.eta,
            dedup_tol: cfg.dedup_tol,
            initial_points: Vec::new(),
            output_dir: output_dir.to_string(),
        }
    }

    /// Applies `seed` to a Monte Carlo sampler; grid sampling has no seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let SamplerSpec::MonteCarlo { seed: s, .. } = &mut self.sampler {
            *s = seed;
        }
        self
    }

    /// Validates every key and builds the loop configuration.
    pub fn resolve(&self, base_dir: &Path) -> Result<RunPlan> {
        let oracle = match (&self.benchmark, &self.oracle_cmd) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("set exactly one of benchmark and oracle_cmd, not both".into()))
            }
            (None, None) => return Err(CliError::Config("one of benchmark or oracle_cmd is required".into())),
            (Some(name), None) => OracleBinding::Benchmark(name.parse().map_err(|e| CliError::key("benchmark", e))?),
            (None, Some(cmd)) if cmd.trim().is_empty() => {
                return Err(CliError::key("oracle_cmd", "must not be empty"))
            }
            (None, Some(cmd)) => OracleBinding::Command(cmd.clone()),
        };

        let domain = match (&self.domain, &oracle) {
            (Some(d), _) => Domain::new(d.lower.clone(), d.upper.clone()).map_err(|e| CliError::key("domain", e))?,
            (None, OracleBinding::Benchmark(b)) => b.domain(),
            (None, OracleBinding::Command(_)) => {
                return Err(CliError::key("domain", "required when oracle_cmd is used"))
            }
        };
        if let OracleBinding::Benchmark(b) = &oracle {
            if !b.domain().encloses(&domain) {
                return Err(CliError::key(
                    "domain",
                    format!("must lie inside the {b} domain {:?}..{:?}", b.domain().lower(), b.domain().upper()),
                ));
            }
        }

        let sampler = match self.sampler {
            SamplerSpec::Grid { step } if !(step.is_finite() && step > 0.0) => {
                return Err(CliError::key("sampler.step", format!("must be positive, got {step}")))
            }
            SamplerSpec::Grid { step } => Sampler::Grid { step },
            SamplerSpec::MonteCarlo { count: 0, .. } => {
                return Err(CliError::key("sampler.count", "must be at least 1"))
            }
            SamplerSpec::MonteCarlo { count, seed } => Sampler::MonteCarlo { count, seed },
        };

        let kernel_f = KernelConfig::new(self.kernel_f_var).map_err(|e| CliError::key("kernel_f_var", e))?;
        let kernel_e = KernelConfig::new(self.kernel_e_var).map_err(|e| CliError::key("kernel_e_var", e))?;
        non_negative("noise_var", self.noise_var)?;
        non_negative("eta", self.eta)?;
        non_negative("dedup_tol", self.dedup_tol)?;
        if self.budget < 1 {
            return Err(CliError::key("budget", format!("must be at least 1, got {}", self.budget)));
        }

        let weights = match (self.weights, self.method) {
            (Some([w1, w2, w3]), _) => ObjectiveWeights::new(w1, w2, w3).map_err(|e| CliError::key("weights", e))?,
            (None, SelectionMethod::Weighted) => {
                return Err(CliError::key("weights", "required when method is weighted"))
            }
            (None, SelectionMethod::Bounded) => ObjectiveWeights::new(1.0, 1.0, 1.0).expect("valid"),
        };
        let bounds = match (self.bounds, self.method) {
            (Some(b), _) => ObjectiveBounds::new(b.b1, b.b2).map_err(|e| CliError::key("bounds", e))?,
            (None, SelectionMethod::Bounded) => {
                return Err(CliError::key("bounds", "required when method is bounded"))
            }
            (None, SelectionMethod::Weighted) => ObjectiveBounds::new(1.0, 1.0).expect("valid"),
        };

        for (i, p) in self.initial_points.iter().enumerate() {
            if !domain.contains(p) {
                return Err(CliError::key(
                    &format!("initial_points[{i}]"),
                    format!("{p:?} is not a {}-dimensional point inside the domain", domain.dim()),
                ));
            }
        }

        let loop_config = LoopConfig {
            domain,
            kernel_f,
            kernel_e,
            noise_var: self.noise_var,
            method: self.method,
            weights,
            bounds,
            f3_mode: self.f3_mode,
            budget: self.budget as usize,
            sampler,
            center_values: self.center_values,
            eta: self.eta,
            dedup_tol: self.dedup_tol,
        };
        loop_config.validate().map_err(|e| CliError::Config(e.to_string()))?;

        Ok(RunPlan {
            loop_config,
            oracle,
            initial_points: self.initial_points.clone(),
            output_dir: base_dir.join(&self.output_dir),
            echo: self.clone(),
        })
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::key(key, format!("must be a finite value >= 0, got {v}")))
    }
}

/// Reads, parses and validates a config file, honouring `LIO_SEED`.
pub fn parse_config(path: &Path) -> Result<RunPlan> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut file = RunConfigFile::from_json(&text)?;
    if let Ok(raw) = std::env::var(SEED_ENV) {
        let seed = raw
            .trim()
            .parse()
            .map_err(|_| CliError::key(SEED_ENV, format!("expected an unsigned integer, got {raw:?}")))?;
        file = file.with_seed(seed);
    }
    let base = path.parent().unwrap_or(Path::new("."));
    file.resolve(base)
}
