//! Run artifacts: trace.csv, summary.json and surface.csv.

use std::fmt::Write as _;

use lio_core::search::RunTrace;
use lio_core::{CandidateSet, GpModel};
use serde::Serialize;

use crate::config::RunConfigFile;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SURFACE_FILE: &str = "surface.csv";

/// `v` with 9 significant digits, fixed notation for moderate exponents.
pub fn fmt_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn axis_header(out: &mut String, prefix: &str, dim: usize) {
    for i in 0..dim {
        let _ = write!(out, "{prefix}{i},");
    }
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        out.push_str(&fmt_sig9(*v));
        out.push(',');
    }
}

/// One row per iteration, in order.
pub fn trace_csv(trace: &RunTrace) -> String {
    let dim = trace.config.domain.dim();
    let mut out = String::from("iter,");
    axis_header(&mut out, "x_", dim);
    out.push_str("observed_y,f1,f2,f3,fallback,");
    axis_header(&mut out, "best_x_", dim);
    out.push_str("best_est,mean_variance,mean_entropy,agg_entropy\n");
    for r in &trace.records {
        let _ = write!(out, "{},", r.iter);
        push_values(&mut out, &r.chosen_point);
        let o = &r.objective_values;
        push_values(&mut out, &[r.observed_value, o.f1, o.f2, o.f3]);
        out.push_str(if r.fallback_used { "1," } else { "0," });
        push_values(&mut out, &r.best_est_point);
        push_values(
            &mut out,
            &[r.best_est_value, r.info.mean_variance, r.info.mean_entropy, r.info.aggregate_entropy],
        );
        out.pop();
        out.push('\n');
    }
    out
}

/// Posterior mean and variance at every candidate, in candidate order.
pub fn surface_csv(model: &GpModel, candidates: &CandidateSet) -> lio_core::Result<String> {
    let mut out = String::new();
    axis_header(&mut out, "x_", candidates.dim());
    out.push_str("mean,variance\n");
    for (p, pred) in candidates.points().iter().zip(model.predict_many(candidates.points())?) {
        push_values(&mut out, p);
        push_values(&mut out, &[pred.mean, pred.variance]);
        out.pop();
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub best_point: Option<Vec<f64>>,
    pub best_est_value: Option<f64>,
    pub best_observed_point: Option<Vec<f64>>,
    pub best_observed_value: Option<f64>,
    /// Size of the final dataset, initial points included.
    pub n_observations: usize,
    pub fallback_count: usize,
    pub config_echo: RunConfigFile,
}

impl Summary {
    pub fn new(trace: &RunTrace, echo: &RunConfigFile) -> Self {
        let best = trace.best.as_ref();
        Summary {
            best_point: best.map(|b| b.point.clone()),
            best_est_value: best.map(|b| b.est_value),
            best_observed_point: best.map(|b| b.observed_point.clone()),
            best_observed_value: best.map(|b| b.observed_value),
            n_observations: trace.final_dataset.len(),
            fallback_count: trace.fallback_count(),
            config_echo: echo.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
