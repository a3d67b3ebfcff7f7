use std::sync::Arc;

use rayon::prelude::*;

use super::{
    credibility_grid, drp_rank, ecp_curve, fit_normalization, hpd_rank_log, sample_reference,
    CoverageCurve, CoverageError, DistanceMetric, JointSampleSet, MethodTag, NormalizationMap,
    PosteriorSampler, RankStatistic, ReferencePolicy, Result, SampleProvider, Simulation,
    DEFAULT_BAND_Z,
};
use crate::numerics::{DenseMatrix, SeededRng};

const POSTERIOR_STREAM: u64 = 0;
const REFERENCE_STREAM: u64 = 1;

/// Substream for the posterior draws of one simulation.
pub fn posterior_stream(seed: u64, sim_id: usize) -> SeededRng {
    SeededRng::derive(seed, &[POSTERIOR_STREAM, sim_id as u64])
}

/// Substream for reference draw number `repeat` of one simulation. Kept apart
/// from the posterior stream so that stored samples reproduce a live run.
pub fn reference_stream(seed: u64, sim_id: usize, repeat: usize) -> SeededRng {
    SeededRng::derive(seed, &[REFERENCE_STREAM, sim_id as u64, repeat as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSettings {
    pub n_post: usize,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub band_z: f64,
    /// Independent reference draws per simulation (DRP).
    pub repeat_count: usize,
}

impl CoverageSettings {
    pub fn new(n_post: usize, seed: u64) -> Self {
        Self {
            n_post,
            levels: credibility_grid(101),
            seed,
            band_z: DEFAULT_BAND_Z,
            repeat_count: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_post == 0 {
            return Err(CoverageError::InvalidArgument("n_post must be >= 1".into()));
        }
        if self.repeat_count == 0 {
            return Err(CoverageError::InvalidArgument("repeat_count must be >= 1".into()));
        }
        if self.levels.is_empty() {
            return Err(CoverageError::InvalidArgument("empty credibility grid".into()));
        }
        if !(self.band_z.is_finite() && self.band_z > 0.0) {
            return Err(CoverageError::InvalidArgument(format!(
                "band z must be > 0, got {}",
                self.band_z
            )));
        }
        Ok(())
    }
}

/// A rank-based coverage test.
pub trait CoverageMethod: Send + Sync {
    fn tag(&self) -> MethodTag;

    fn policy_label(&self) -> Option<String> {
        None
    }

    fn metric_label(&self) -> Option<String> {
        None
    }

    /// Rank statistics of one simulation given its posterior samples.
    fn ranks(
        &self,
        sim: &Simulation,
        samples: &DenseMatrix,
        settings: &CoverageSettings,
    ) -> Result<Vec<RankStatistic>>;
}

/// Distance to random point.
#[derive(Debug, Clone)]
pub struct Drp {
    pub policy: Arc<dyn ReferencePolicy>,
    pub metric: Arc<dyn DistanceMetric>,
    pub normalization: NormalizationMap,
}

impl CoverageMethod for Drp {
    fn tag(&self) -> MethodTag {
        MethodTag::Drp
    }

    fn policy_label(&self) -> Option<String> {
        Some(self.policy.label())
    }

    fn metric_label(&self) -> Option<String> {
        Some(self.metric.label())
    }

    fn ranks(
        &self,
        sim: &Simulation,
        samples: &DenseMatrix,
        settings: &CoverageSettings,
    ) -> Result<Vec<RankStatistic>> {
        let d = sim.theta.len();
        if samples.cols() != d || self.normalization.dim() != d {
            return Err(CoverageError::DimensionMismatch(format!(
                "samples have {} columns, truth {d}, normalization {}",
                samples.cols(),
                self.normalization.dim()
            )));
        }
        let mut normed = samples.clone();
        for j in 0..normed.rows() {
            self.normalization.apply_in_place(normed.row_mut(j));
        }
        let truth = self.normalization.apply(&sim.theta);
        (0..settings.repeat_count)
            .map(|rep| {
                let mut rng = reference_stream(settings.seed, sim.sim_id, rep);
                let theta_r =
                    sample_reference(&*self.policy, &sim.x, d, &self.normalization, &mut rng)?;
                let mut r = drp_rank(&normed, &truth, &theta_r, &*self.metric)?;
                r.sim_id = sim.sim_id;
                Ok(r)
            })
            .collect()
    }
}

/// Highest posterior density regions; needs an estimator density.
#[derive(Clone)]
pub struct Hpd {
    estimator: Arc<dyn PosteriorSampler>,
}

impl Hpd {
    pub fn new(estimator: Arc<dyn PosteriorSampler>) -> Result<Self> {
        if !estimator.has_density() {
            return Err(CoverageError::MissingDensity(estimator.name()));
        }
        Ok(Self { estimator })
    }
}

impl CoverageMethod for Hpd {
    fn tag(&self) -> MethodTag {
        MethodTag::Hpd
    }

    fn ranks(
        &self,
        sim: &Simulation,
        samples: &DenseMatrix,
        _settings: &CoverageSettings,
    ) -> Result<Vec<RankStatistic>> {
        let density = |theta: &[f64]| {
            self.estimator
                .log_density(theta, &sim.x)
                .ok_or_else(|| CoverageError::MissingDensity(self.estimator.name()))
        };
        let logs = (0..samples.rows())
            .map(|j| density(samples.row(j)))
            .collect::<Result<Vec<_>>>()?;
        let mut r = hpd_rank_log(&logs, density(&sim.theta)?)?;
        r.sim_id = sim.sim_id;
        Ok(vec![r])
    }
}

/// Runs `method` over every simulation and assembles the curve.
///
/// Each simulation draws from its own `sim_id`-keyed substreams, so the
/// result does not depend on thread count or on the order of `dataset`.
pub fn run_coverage(
    dataset: &JointSampleSet,
    provider: &dyn SampleProvider,
    method: &dyn CoverageMethod,
    settings: &CoverageSettings,
) -> Result<CoverageCurve> {
    settings.validate()?;
    let mut per_sim: Vec<(usize, Result<Vec<RankStatistic>>)> = dataset
        .sims()
        .par_iter()
        .map(|sim| {
            let run = || {
                let mut rng = posterior_stream(settings.seed, sim.sim_id);
                let samples = provider.draw(sim, settings.n_post, &mut rng)?;
                method.ranks(sim, &samples, settings)
            };
            (sim.sim_id, run().map_err(|e| e.at_sim(sim.sim_id)))
        })
        .collect();
    per_sim.sort_by_key(|(id, _)| *id);
    let mut ranks = Vec::with_capacity(per_sim.len() * settings.repeat_count);
    for (_, r) in per_sim {
        ranks.extend(r?);
    }
    let n_post = ranks.iter().map(|r| r.n_samples).min().unwrap_or(0);
    let mut curve = ecp_curve(
        method.tag(),
        ranks,
        &settings.levels,
        dataset.n_sims(),
        n_post,
        settings.band_z,
    )?;
    curve.policy = method.policy_label();
    curve.metric = method.metric_label();
    Ok(curve)
}

/// DRP test with normalization fitted to `dataset` (or to explicit bounds).
pub fn drp_test(
    dataset: &JointSampleSet,
    provider: &dyn SampleProvider,
    policy: Arc<dyn ReferencePolicy>,
    metric: Arc<dyn DistanceMetric>,
    bounds: Option<&[(f64, f64)]>,
    settings: &CoverageSettings,
) -> Result<CoverageCurve> {
    let method = Drp {
        policy,
        metric,
        normalization: fit_normalization(dataset, bounds)?,
    };
    run_coverage(dataset, provider, &method, settings)
}

/// HPD test drawing from, and evaluating the density of, `estimator`.
pub fn hpd_test(
    dataset: &JointSampleSet,
    estimator: Arc<dyn PosteriorSampler>,
    settings: &CoverageSettings,
) -> Result<CoverageCurve> {
    let method = Hpd::new(estimator.clone())?;
    run_coverage(dataset, &estimator, &method, settings)
}
