use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::{LensingConfig, LensingModel, ReverseSdeSampler, Result, ScoreKind, VeSchedule};
use crate::coverage::{
    drp_test, CoverageCurve, CoverageError, CoverageSettings, Euclidean, JointSampleSet,
    PosteriorSampler, PriorDraw, SampleProvider, Simulation,
};
use crate::numerics::{DenseMatrix, SeededRng};

const GENERATOR_STREAM: u64 = 2;

/// Validation set `θ ~ N(μ₀, Σ₀)`, `x = Aθ + ε` with per-sim substreams.
pub fn generate_lensing(model: &LensingModel, n_sims: usize, seed: u64) -> Result<JointSampleSet> {
    let sims = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let (theta, x) = model.simulate(&mut SeededRng::derive(seed, &[GENERATOR_STREAM, i as u64]));
            Simulation { sim_id: i, theta, x }
        })
        .collect();
    Ok(JointSampleSet::new(model.dim_theta(), sims)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LensingExperiment {
    pub model: LensingConfig,
    pub schedule: VeSchedule,
    pub kind: ScoreKind,
    pub n_sims: usize,
    pub n_post: usize,
    pub seed: u64,
}

/// Posterior summary of one simulation, as flattened source images.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub sim_id: usize,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `mean - truth`.
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LensingRun {
    pub curve: CoverageCurve,
    pub summaries: Vec<SimSummary>,
}

/// Forwards to the sampler and keeps per-pixel sample moments.
struct Recording<'a> {
    sampler: &'a ReverseSdeSampler,
    moments: Mutex<BTreeMap<usize, (Vec<f64>, Vec<f64>)>>,
}

impl SampleProvider for Recording<'_> {
    fn draw(
        &self,
        sim: &Simulation,
        n_post: usize,
        rng: &mut SeededRng,
    ) -> Result<DenseMatrix, CoverageError> {
        let s = self.sampler.sample(&sim.x, n_post, rng)?;
        let n = s.rows() as f64;
        let d = s.cols();
        let mut mean = vec![0.0; d];
        for j in 0..s.rows() {
            for (m, v) in mean.iter_mut().zip(s.row(j)) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for j in 0..s.rows() {
            for ((q, v), m) in var.iter_mut().zip(s.row(j)).zip(&mean) {
                *q += (v - m) * (v - m);
            }
        }
        let std = var.iter().map(|q| (q / (n - 1.0).max(1.0)).sqrt()).collect();
        self.moments
            .lock()
            .expect("moment table poisoned")
            .insert(sim.sim_id, (mean, std));
        Ok(s)
    }
}

/// Draws the validation set, runs the DRP test with prior reference points
/// and returns the curve plus per-simulation summaries.
pub fn run_lensing(exp: &LensingExperiment) -> Result<LensingRun> {
    let model = Arc::new(LensingModel::new(&exp.model)?);
    let dataset = generate_lensing(&model, exp.n_sims, exp.seed)?;
    let sampler = ReverseSdeSampler::new(model.clone(), exp.schedule, exp.kind)?;
    let recording = Recording {
        sampler: &sampler,
        moments: Mutex::new(BTreeMap::new()),
    };
    let curve = drp_test(
        &dataset,
        &recording,
        Arc::new(PriorDraw::new(model.clone())),
        Arc::new(Euclidean),
        None,
        &CoverageSettings::new(exp.n_post, exp.seed),
    )?;
    let moments = recording.moments.into_inner().expect("moment table poisoned");
    let summaries = dataset
        .iter()
        .map(|sim| {
            let (mean, std) = moments[&sim.sim_id].clone();
            let residual = mean.iter().zip(&sim.theta).map(|(m, t)| m - t).collect();
            SimSummary {
                sim_id: sim.sim_id,
                truth: sim.theta.clone(),
                mean,
                std,
                residual,
            }
        })
        .collect();
    Ok(LensingRun { curve, summaries })
}
