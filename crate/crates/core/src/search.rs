//! The observe, regress, select loop.
//!
//! Each iteration samples (or reuses) the candidate set, fits the value and
//! error models to the data gathered so far, scores every candidate and
//! observes the oracle at the winner. One observation per iteration.

use serde::{Deserialize, Serialize};

use crate::acquisition::{F3Mode, ObjectiveBounds, ObjectiveTable, ObjectiveValues, ObjectiveWeights};
use crate::error::{Error, Result};
use crate::gp::{Dataset, Domain, GpConfig, GpModel, KernelConfig};
use crate::information::{info_report, InfoReport};
use crate::sampling::{exclude_observed, grid_sample, monte_carlo_sample, CandidateSet};

/// Anything that can be queried for a function value.
pub trait Oracle {
    fn observe(&mut self, x: &[f64]) -> Result<f64>;
}

impl<F> Oracle for F
where
    F: FnMut(&[f64]) -> f64,
{
    fn observe(&mut self, x: &[f64]) -> Result<f64> {
        Ok(self(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Weighted,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sampler {
    Grid { step: f64 },
    MonteCarlo { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub domain: Domain,
    pub kernel_f: KernelConfig,
    pub kernel_e: KernelConfig,
    /// Observation noise variance.
    pub noise_var: f64,
    pub method: SelectionMethod,
    pub weights: ObjectiveWeights,
    pub bounds: ObjectiveBounds,
    pub f3_mode: F3Mode,
    /// Maximum number of oracle calls made by the loop.
    pub budget: usize,
    pub sampler: Sampler,
    pub center_values: bool,
    /// Growth rate of past observations' noise variance per iteration.
    pub eta: f64,
    pub dedup_tol: f64,
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(Error::invalid(format!("noise_var must be >= 0, got {}", self.noise_var)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(self.dedup_tol.is_finite() && self.dedup_tol >= 0.0) {
            return Err(Error::invalid(format!("dedup_tol must be >= 0, got {}", self.dedup_tol)));
        }
        match self.sampler {
            Sampler::Grid { step } if !(step > 0.0) => {
                Err(Error::invalid(format!("grid step must be positive, got {step}")))
            }
            Sampler::MonteCarlo { count: 0, .. } => Err(Error::invalid("Monte Carlo count must be at least 1")),
            _ => Ok(()),
        }
    }

    pub fn gp_config(&self) -> GpConfig {
        GpConfig {
            kernel: self.kernel_f,
            center_values: self.center_values,
            query_noise: self.noise_var,
        }
    }

    /// Raw candidate sample for iteration `iter` (before exclusion).
    pub fn sample(&self, iter: usize) -> Result<CandidateSet> {
        match self.sampler {
            Sampler::Grid { step } => grid_sample(&self.domain, step),
            Sampler::MonteCarlo { count, seed } => {
                monte_carlo_sample(&self.domain, count, seed.wrapping_add(iter as u64))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub chosen_point: Vec<f64>,
    pub observed_value: f64,
    pub fallback_used: bool,
    pub objective_values: ObjectiveValues,
    pub best_est_point: Vec<f64>,
    pub best_est_value: f64,
    pub info: InfoReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum StopReason {
    BudgetSpent,
    CandidatesExhausted,
    OracleError(String),
    NumericError(String),
}

/// Final answer of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestEstimate {
    /// Argmax of the final posterior mean over candidates and data.
    pub point: Vec<f64>,
    pub est_value: f64,
    pub observed_point: Vec<f64>,
    pub observed_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub config: LoopConfig,
    pub records: Vec<IterationRecord>,
    pub final_dataset: Dataset,
    /// Observations made by the loop, including an automatic initial one.
    pub n_observations: usize,
    pub stop: StopReason,
    pub best: Option<BestEstimate>,
}

impl RunTrace {
    pub fn fallback_count(&self) -> usize {
        self.records.iter().filter(|r| r.fallback_used).count()
    }
}

/// Loop state between iterations.
#[derive(Debug, Clone)]
pub struct SearchState {
    pub data: Dataset,
    /// Index of the next iteration, starting at 1.
    pub iter: usize,
    fixed_grid: Option<CandidateSet>,
}

impl SearchState {
    pub fn new(data: Dataset) -> Self {
        SearchState {
            data,
            iter: 1,
            fixed_grid: None,
        }
    }

    /// The raw sample for this iteration; the grid is built once and reused.
    fn sample(&mut self, config: &LoopConfig) -> Result<CandidateSet> {
        match (&self.fixed_grid, config.sampler) {
            (Some(g), _) => Ok(g.clone()),
            (None, Sampler::Grid { .. }) => {
                let g = config.sample(self.iter)?;
                self.fixed_grid = Some(g.clone());
                Ok(g)
            }
            (None, Sampler::MonteCarlo { .. }) => config.sample(self.iter),
        }
    }

    fn candidates(&mut self, config: &LoopConfig) -> Result<CandidateSet> {
        let raw = self.sample(config)?;
        exclude_observed(&raw, &self.data, config.dedup_tol)
    }
}

/// Adds `eta * dt` to every noise variance.
pub fn age_noise(data: &Dataset, eta: f64, dt: f64) -> Result<Dataset> {
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("eta must be >= 0, got {eta}")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let mut out = data.clone();
    if eta > 0.0 {
        for s in out.noise_vars_mut() {
            *s += eta * dt;
        }
    }
    Ok(out)
}

/// Argmax of the posterior mean over observed points then candidates;
/// ties go to the earliest scanned.
pub fn report_best(model: &GpModel, candidates: &CandidateSet) -> Result<(Vec<f64>, f64)> {
    let data_pts = model.data().points();
    let mut best: Option<(usize, f64)> = None;
    let all: Vec<&Vec<f64>> = data_pts.iter().chain(candidates.points()).collect();
    let preds = model.predict_many(&all.iter().map(|p| (*p).clone()).collect::<Vec<_>>())?;
    for (i, p) in preds.iter().enumerate() {
        if best.is_none_or(|(_, b)| p.mean > b) {
            best = Some((i, p.mean));
        }
    }
    let (i, v) = best.expect("candidate sets are nonempty");
    Ok((all[i].clone(), v))
}

/// Fitted value and error models plus the scored candidate set.
struct Scored {
    raw: CandidateSet,
    candidates: CandidateSet,
    model: GpModel,
    table: ObjectiveTable,
}

fn score(state: &mut SearchState, config: &LoopConfig) -> Result<Scored> {
    let raw = state.sample(config)?;
    let candidates = exclude_observed(&raw, &state.data, config.dedup_tol)?;
    let model = GpModel::fit(state.data.clone(), config.gp_config())?;
    let error_model = if model.is_empty() {
        // No residuals yet: the error estimate is identically zero.
        GpModel::fit(Dataset::new(), GpConfig::new(config.kernel_e, false, 0.0)?)?
    } else {
        crate::acquisition::fit_error_model(&model, config.kernel_e)?
    };
    let table = ObjectiveTable::compute(&model, &error_model, &candidates, config.f3_mode)?;
    Ok(Scored {
        raw,
        candidates,
        model,
        table,
    })
}

/// One iteration: sample, fit, score, observe, append, age.
pub fn step<O: Oracle + ?Sized>(
    state: &mut SearchState,
    config: &LoopConfig,
    oracle: &mut O,
) -> Result<IterationRecord> {
    let Scored {
        raw,
        candidates,
        model,
        table,
    } = score(state, config)?;
    // Summarized over the whole sample so a fixed grid gives comparable numbers.
    let info: InfoReport = info_report(&model, &raw);
    let selection = match config.method {
        SelectionMethod::Weighted => table.weighted_sum(&config.weights),
        SelectionMethod::Bounded => table.bounded(&config.bounds),
    };
    let (best_est_point, best_est_value) = report_best(&model, &candidates)?;
    let chosen = candidates.points()[selection.index].clone();

    let y = oracle.observe(&chosen)?;
    if !y.is_finite() {
        return Err(Error::Oracle(format!("non-finite value {y} at {chosen:?}")));
    }
    let iter = state.iter;
    state.data.push(chosen.clone(), y, config.noise_var, iter as f64)?;
    if config.eta > 0.0 {
        state.data = age_noise(&state.data, config.eta, 1.0)?;
    }
    state.iter += 1;
    Ok(IterationRecord {
        iter,
        chosen_point: chosen,
        observed_value: y,
        fallback_used: selection.fallback_used,
        objective_values: selection.values,
        best_est_point,
        best_est_value,
        info,
    })
}

fn stop_reason(err: Error) -> StopReason {
    match err {
        Error::ExhaustedCandidates => StopReason::CandidatesExhausted,
        Error::Oracle(msg) => StopReason::OracleError(msg),
        other => StopReason::NumericError(other.to_string()),
    }
}

/// Runs the loop for at most `config.budget` oracle calls.
///
/// An empty `initial_data` is seeded by observing the lower corner of the
/// domain, which counts against the budget. Failures after validation end
/// the run early and are reported through [`RunTrace::stop`].
pub fn run<O: Oracle + ?Sized>(config: &LoopConfig, oracle: &mut O, initial_data: Dataset) -> Result<RunTrace> {
    config.validate()?;
    if let Some(d) = initial_data.dim() {
        if d != config.domain.dim() {
            return Err(Error::invalid(format!(
                "initial data has dimension {d}, domain has {}",
                config.domain.dim()
            )));
        }
    }
    let mut state = SearchState::new(initial_data);
    let mut records = Vec::new();
    let mut calls = 0;
    let mut stop = StopReason::BudgetSpent;

    if state.data.is_empty() {
        let corner = config.domain.lower().to_vec();
        calls += 1;
        match oracle.observe(&corner) {
            Ok(y) if y.is_finite() => state.data.push(corner, y, config.noise_var, 0.0)?,
            Ok(y) => stop = StopReason::OracleError(format!("non-finite value {y} at {corner:?}")),
            Err(e) => stop = stop_reason(e),
        }
    }

    if stop == StopReason::BudgetSpent {
        while calls < config.budget {
            match step(&mut state, config, oracle) {
                Ok(rec) => {
                    calls += 1;
                    records.push(rec);
                }
                Err(e) => {
                    if matches!(e, Error::Oracle(_)) {
                        calls += 1;
                    }
                    stop = stop_reason(e);
                    break;
                }
            }
        }
    }

    let best = if state.data.is_empty() {
        None
    } else {
        final_best(&mut state, config).ok()
    };
    Ok(RunTrace {
        config: config.clone(),
        records,
        final_dataset: state.data,
        n_observations: calls,
        stop,
        best,
    })
}

fn final_best(state: &mut SearchState, config: &LoopConfig) -> Result<BestEstimate> {
    let model = GpModel::fit(state.data.clone(), config.gp_config())?;
    let (point, est_value) = match state.candidates(config) {
        Ok(c) => report_best(&model, &c)?,
        Err(Error::ExhaustedCandidates) => {
            // Everything has been observed: fall back to the data alone.
            let pts = state.data.points().to_vec();
            report_best(&model, &CandidateSet::from_points(pts)?)?
        }
        Err(e) => return Err(e),
    };
    let (i, observed_value) = state.data.best_observed().expect("data is nonempty");
    Ok(BestEstimate {
        point,
        est_value,
        observed_point: state.data.points()[i].clone(),
        observed_value,
    })
}

/// Final value model of a finished run, for reporting and surface dumps.
pub fn final_model(trace: &RunTrace) -> Result<GpModel> {
    GpModel::fit(trace.final_dataset.clone(), trace.config.gp_config())
}
