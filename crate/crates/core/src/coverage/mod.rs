//! Rank-based expected coverage tests.
//!
//! The interchangeable pieces of a coverage run are trait objects selected by
//! name through small registries:
//!
//! * [`CoverageMethod`]: `drp` or `hpd`, producing one [`RankStatistic`] per
//!   simulation,
//! * [`ReferencePolicy`]: where DRP reference points come from
//!   (`hypercube`, `prior`, `datashift:k,u`),
//! * [`DistanceMetric`]: `euclidean` or `weighted:w0,w1,…`.
//!
//! [`run_coverage`] drives a method over a [`JointSampleSet`] with per-sim
//! substreams, so curves are independent of scheduling and of the order of
//! the simulations.

mod curve;
mod dataset;
mod method;
mod metric;
mod normalize;
mod oracle;
mod rank;
mod reference;
mod registry;
mod sampler;

pub use curve::{credibility_grid, ecp_curve, CoverageCurve, MethodTag, DEFAULT_BAND_Z};
pub use dataset::{JointSampleSet, Simulation};
pub use method::{
    drp_test, hpd_test, posterior_stream, reference_stream, run_coverage, CoverageMethod,
    CoverageSettings, Drp, Hpd,
};
pub use metric::{DistanceMetric, Euclidean, WeightedEuclidean};
pub use normalize::{fit_normalization, NormalizationMap};
pub use oracle::{region_membership_ecp, truth_in_region, MembershipInput};
pub use rank::{drp_rank, hpd_rank, hpd_rank_log, RankStatistic};
pub use reference::{sample_reference, DataShift, ParameterPrior, PriorDraw, ReferencePolicy, UnitHypercubeUniform};
pub use registry::{
    MethodContext, MethodRegistry, MetricRegistry, PolicyContext, PolicyRegistry, Registry,
};
pub use sampler::{PosteriorSampler, SampleProvider, StoredSamples};

use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("cannot normalize dimension {dim}: {reason}")]
    Normalization { dim: usize, reason: String },
    #[error("reference policy: {0}")]
    Policy(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite distance between parameters")]
    NonFiniteDistance,
    #[error("density must be nonnegative, got {0}")]
    NegativeDensity(f64),
    #[error("non-finite density")]
    NonFiniteDensity,
    #[error("the HPD test needs an estimator that can evaluate its density ({0} cannot)")]
    MissingDensity(String),
    #[error("no rank statistics to build a curve from")]
    EmptyRanks,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error("posterior sampler: {0}")]
    Sampler(String),
    #[error("simulation {sim_id}: {source}")]
    AtSimulation {
        sim_id: usize,
        #[source]
        source: Box<CoverageError>,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl CoverageError {
    pub fn at_sim(self, sim_id: usize) -> Self {
        match self {
            already @ CoverageError::AtSimulation { .. } => already,
            other => CoverageError::AtSimulation {
                sim_id,
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T, E = CoverageError> = std::result::Result<T, E>;
