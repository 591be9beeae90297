//! Gaussian-process search for the maximum of an expensive black-box
//! function under a fixed observation budget.
//!
//! Each iteration fits a GP to the observations, scores a candidate sample
//! of the box on three objectives (predicted value, expected reduction of
//! the model error, and information gained about the surface) and observes
//! the winner.

pub mod acquisition;
pub mod benchmarks;
pub mod error;
pub mod gp;
pub mod information;
pub mod sampling;
pub mod search;

pub use acquisition::{
    F3Mode, NormalizationBounds, ObjectiveBounds, ObjectiveTable, ObjectiveValues, ObjectiveWeights, Selection,
};
pub use benchmarks::{eval_benchmark, noisy_oracle, true_optima, Benchmark, NoisyOracle, Optimum};
pub use error::{Error, Result};
pub use gp::{Dataset, Domain, GpConfig, GpModel, KernelConfig, Prediction};
pub use information::{Bisection, InfoReport};
pub use sampling::{grid_sample, min_sample_count, monte_carlo_sample, CandidateSet, SampleOrigin};
pub use search::{
    run, step, BestEstimate, IterationRecord, LoopConfig, Oracle, RunTrace, Sampler, SearchState, SelectionMethod,
    StopReason,
};
