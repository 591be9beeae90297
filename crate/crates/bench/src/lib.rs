//! Fixtures shared by the benchmarks.

use lio_core::{monte_carlo_sample, Benchmark, Dataset, GpConfig, GpModel, KernelConfig};

/// `m` observations of `benchmark` at seeded uniform points.
pub fn observations(benchmark: Benchmark, m: usize, noise_var: f64, seed: u64) -> Dataset {
    let pts = monte_carlo_sample(&benchmark.domain(), m, seed).expect("valid domain");
    let mut data = Dataset::new();
    for p in pts.points() {
        let y = benchmark.value(p);
        data.push(p.clone(), y, noise_var, 0.0).expect("consistent dimension");
    }
    data
}

pub fn gp_config(length_scale_sq: f64, noise_var: f64) -> GpConfig {
    GpConfig::new(KernelConfig::new(length_scale_sq).expect("positive"), true, noise_var).expect("valid")
}

/// A fitted value model on `m` camel observations, as used mid-run.
pub fn camel_model(m: usize) -> GpModel {
    GpModel::fit(observations(Benchmark::Camel6Inv, m, 0.1, 7), gp_config(0.5, 0.1)).expect("fit")
}
