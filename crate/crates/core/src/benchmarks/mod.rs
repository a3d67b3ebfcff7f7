//! Gaussian benchmarks with known optimal estimators.

mod conjugate;
mod toy;

pub use conjugate::{
    conjugate_posterior_params, generate_conjugate, uninformative_sampler, ConjugateBenchmark,
    ConjugateConfig, ConjugatePosterior, ConjugatePrior, PriorAsPosterior,
};
pub use toy::{
    biased_mean, generate_toy, ToyBenchmark, ToyCase, ToyConfig, ToyEstimator, ToyPrior,
    ToySimulation,
};

use crate::coverage::CoverageError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

pub type Result<T, E = BenchmarkError> = std::result::Result<T, E>;
