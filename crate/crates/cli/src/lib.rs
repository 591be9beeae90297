//! Command-line front end for the lio maximizer.

pub mod config;
pub mod error;
pub mod oracle;
pub mod output;

use std::fs;
use std::io::Write;
use std::path::Path;

use lio_core::information::bisection_demo;
use lio_core::search::{final_model, run, LoopConfig, Sampler, StopReason};
use lio_core::{noisy_oracle, CandidateSet, Dataset, Oracle};

use crate::config::{parse_config, OracleBinding, RunPlan};
use crate::error::{CliError, Result};
use crate::oracle::CommandOracle;
use crate::output::{surface_csv, trace_csv, Summary, SUMMARY_FILE, SURFACE_FILE, TRACE_FILE};

#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    pub dry_run: bool,
    pub surface: bool,
    /// Replaces the configured output directory.
    pub output_dir: Option<std::path::PathBuf>,
}

fn make_oracle(binding: &OracleBinding) -> Result<Box<dyn Oracle>> {
    Ok(match binding {
        OracleBinding::Benchmark(b) => Box::new(noisy_oracle(*b, 0.0, 0).expect("zero noise is valid")),
        OracleBinding::Command(cmd) => Box::new(CommandOracle::spawn(cmd)?),
    })
}

/// Observes the configured initial points; they do not count against the budget.
fn initial_data(plan: &RunPlan, oracle: &mut dyn Oracle) -> Result<Dataset> {
    let mut data = Dataset::new();
    for p in &plan.initial_points {
        let y = oracle.observe(p).map_err(|e| CliError::Oracle(e.to_string()))?;
        if !y.is_finite() {
            return Err(CliError::Oracle(format!("non-finite value {y} at initial point {p:?}")));
        }
        data.push(p.clone(), y, plan.loop_config.noise_var, 0.0)
            .map_err(|e| CliError::Config(format!("initial_points: {e}")))?;
    }
    Ok(data)
}

/// The candidate sample the loop would score next.
fn surface_candidates(cfg: &LoopConfig, next_iter: usize) -> lio_core::Result<CandidateSet> {
    match cfg.sampler {
        Sampler::Grid { .. } => cfg.sample(0),
        Sampler::MonteCarlo { .. } => cfg.sample(next_iter),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(path.display(), e))
}

/// `lio run`: executes a configuration and writes its artifacts.
pub fn cmd_run(config_path: &Path, flags: &RunFlags, out: &mut dyn Write) -> Result<()> {
    let mut plan = parse_config(config_path)?;
    if let Some(dir) = &flags.output_dir {
        plan.output_dir = dir.clone();
    }
    // Building the sample up front turns an oversized grid into a config error.
    let sample = plan.loop_config.sample(1).map_err(|e| CliError::key("sampler", e))?;

    if flags.dry_run {
        let oracle = match &plan.oracle {
            OracleBinding::Benchmark(b) => format!("benchmark {b}"),
            OracleBinding::Command(c) => format!("command `{c}`"),
        };
        let _ = writeln!(
            out,
            "config ok: {oracle}, {} candidates, budget {}, output to {}",
            sample.len(),
            plan.loop_config.budget,
            plan.output_dir.display()
        );
        return Ok(());
    }

    fs::create_dir_all(&plan.output_dir).map_err(|e| CliError::io(plan.output_dir.display(), e))?;
    // Fail on an unwritable directory before spending any oracle calls.
    write_file(&plan.output_dir, TRACE_FILE, "")?;

    let mut oracle = make_oracle(&plan.oracle)?;
    let data = initial_data(&plan, oracle.as_mut())?;
    let trace = run(&plan.loop_config, oracle.as_mut(), data).map_err(|e| CliError::Config(e.to_string()))?;
    drop(oracle);

    write_file(&plan.output_dir, TRACE_FILE, &trace_csv(&trace))?;
    write_file(&plan.output_dir, SUMMARY_FILE, &Summary::new(&trace, &plan.echo).to_json())?;
    if flags.surface && !trace.final_dataset.is_empty() {
        let model = final_model(&trace).map_err(|e| CliError::Numeric(e.to_string()))?;
        let cands = surface_candidates(&plan.loop_config, trace.records.len() + 1)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        let csv = surface_csv(&model, &cands).map_err(|e| CliError::Numeric(e.to_string()))?;
        write_file(&plan.output_dir, SURFACE_FILE, &csv)?;
    }

    if let Some(best) = &trace.best {
        let _ = writeln!(out, "best estimate: {} at {:?}", best.est_value, best.point);
        let _ = writeln!(out, "best observed: {} at {:?}", best.observed_value, best.observed_point);
    }
    let _ = writeln!(
        out,
        "{} observations, {} fallbacks, output in {}",
        trace.final_dataset.len(),
        trace.fallback_count(),
        plan.output_dir.display()
    );
    match trace.stop {
        StopReason::BudgetSpent | StopReason::CandidatesExhausted => Ok(()),
        StopReason::OracleError(msg) => Err(CliError::Oracle(msg)),
        StopReason::NumericError(msg) => Err(CliError::Numeric(msg)),
    }
}

/// `lio demo-bisection`: entropy of guessing one of `n` equally likely values.
pub fn cmd_demo_bisection(n: u64, out: &mut dyn Write) -> Result<()> {
    let b = bisection_demo(n).map_err(|e| CliError::Usage(e.to_string()))?;
    let _ = writeln!(out, "{n} outcomes: initial entropy {:.3} bits", b.initial_entropy_bits);
    let _ = writeln!(out, "optimal split probability: {}", fmt_split(b.optimal_split));
    Ok(())
}

fn fmt_split(p: f64) -> String {
    format!("{}", (p * 1e9).round() / 1e9)
}

/// `lio benchmarks list`: the built-in objectives and their known optima.
pub fn cmd_benchmarks_list(out: &mut dyn Write) -> Result<()> {
    for b in lio_core::benchmarks::ALL {
        let d = b.domain();
        let _ = writeln!(
            out,
            "{:<20} domain {:?}..{:?}  grid step {}",
            b.name(),
            d.lower(),
            d.upper(),
            b.grid_step()
        );
        for o in b.true_optima() {
            let _ = writeln!(out, "{:<20}   optimum {:.6} at {:?}", "", o.value, o.point);
        }
    }
    Ok(())
}
