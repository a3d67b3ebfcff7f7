//! Linear-Gaussian imaging problem with score-based posterior samplers.
//!
//! A smooth source image `θ` is warped by a known linear operator and
//! observed with white noise. Because everything is Gaussian, the noised
//! prior and likelihood scores are available in closed form and the exact
//! posterior is known, which makes the sampler bias measurable.

mod experiment;
mod model;
mod sampler;
mod schedule;
mod score;

pub use experiment::{generate_lensing, run_lensing, LensingExperiment, LensingRun, SimSummary};
pub use model::{
    build_operator, build_prior, condition_number, LensingConfig, LensingModel, OperatorKind,
};
pub use sampler::ReverseSdeSampler;
pub use schedule::VeSchedule;
pub use score::{
    likelihood_affine, likelihood_score, posterior_affine, prior_affine, prior_score,
    AffineScore, ScoreKind,
};

use crate::coverage::CoverageError;
use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LensingError {
    #[error("forward operator: {0}")]
    Operator(String),
    #[error("prior: {0}")]
    Prior(String),
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("reverse SDE diverged at step {step}")]
    Divergence { step: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

pub type Result<T, E = LensingError> = std::result::Result<T, E>;
