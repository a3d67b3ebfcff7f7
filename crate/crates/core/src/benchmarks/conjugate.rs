use rayon::prelude::*;

use super::{BenchmarkError, Result};
use crate::coverage::{
    CoverageError, JointSampleSet, ParameterPrior, PosteriorSampler, Simulation,
};
use crate::numerics::{norm_logpdf, DenseMatrix, SeededRng};

const GENERATOR_STREAM: u64 = 2;

/// Scalar `θ ~ N(μ₀, σ₀²)` observed through `n_obs` draws `x_i ~ N(θ, σ_x²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateConfig {
    pub n_obs: usize,
    pub mu0: f64,
    pub sigma0: f64,
    pub sigma_x: f64,
    pub n_sims: usize,
}

impl Default for ConjugateConfig {
    fn default() -> Self {
        Self {
            n_obs: 50,
            mu0: 0.0,
            sigma0: 1.0,
            sigma_x: 0.1,
            n_sims: 500,
        }
    }
}

impl ConjugateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(BenchmarkError::InvalidConfig(format!(
                "sigma0 must be > 0, got {}",
                self.sigma0
            )));
        }
        if !(self.sigma_x.is_finite() && self.sigma_x > 0.0) {
            return Err(BenchmarkError::InvalidConfig(format!(
                "sigma_x must be > 0, got {}",
                self.sigma_x
            )));
        }
        if !self.mu0.is_finite() {
            return Err(BenchmarkError::InvalidConfig("mu0 must be finite".into()));
        }
        if self.n_sims == 0 {
            return Err(BenchmarkError::InvalidConfig("n_sims must be >= 1".into()));
        }
        Ok(())
    }
}

/// Posterior mean and variance `(m, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugatePosterior {
    pub mean: f64,
    pub variance: f64,
}

/// `s = (1/σ₀² + n/σ_x²)⁻¹`, `m = s (μ₀/σ₀² + Σx/σ_x²)`.
pub fn conjugate_posterior_params(config: &ConjugateConfig, x: &[f64]) -> ConjugatePosterior {
    let p0 = 1.0 / (config.sigma0 * config.sigma0);
    let px = 1.0 / (config.sigma_x * config.sigma_x);
    let variance = 1.0 / (p0 + x.len() as f64 * px);
    let sum: f64 = x.iter().sum();
    ConjugatePosterior {
        mean: variance * (config.mu0 * p0 + sum * px),
        variance,
    }
}

fn normal_draws(mean: f64, sd: f64, n: usize, rng: &mut SeededRng) -> DenseMatrix {
    DenseMatrix::from_fn(n, 1, |_, _| mean + sd * rng.standard_normal())
}

/// Estimator that ignores the data and returns the prior.
#[derive(Debug, Clone, Copy)]
pub struct PriorAsPosterior {
    pub mu0: f64,
    pub sigma0: f64,
}

impl PosteriorSampler for PriorAsPosterior {
    fn name(&self) -> String {
        "prior-as-posterior".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn sample(
        &self,
        _x: &[f64],
        n: usize,
        rng: &mut SeededRng,
    ) -> Result<DenseMatrix, CoverageError> {
        Ok(normal_draws(self.mu0, self.sigma0, n, rng))
    }

    fn has_density(&self) -> bool {
        true
    }

    fn log_density(&self, theta: &[f64], _x: &[f64]) -> Option<f64> {
        match theta {
            [t] => Some(norm_logpdf((t - self.mu0) / self.sigma0) - self.sigma0.ln()),
            _ => None,
        }
    }
}

pub fn uninformative_sampler(config: &ConjugateConfig) -> PriorAsPosterior {
    PriorAsPosterior {
        mu0: config.mu0,
        sigma0: config.sigma0,
    }
}

impl PosteriorSampler for ConjugateConfig {
    fn name(&self) -> String {
        "conjugate-posterior".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn sample(
        &self,
        x: &[f64],
        n: usize,
        rng: &mut SeededRng,
    ) -> Result<DenseMatrix, CoverageError> {
        let p = conjugate_posterior_params(self, x);
        Ok(normal_draws(p.mean, p.variance.sqrt(), n, rng))
    }

    fn has_density(&self) -> bool {
        true
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> Option<f64> {
        let p = conjugate_posterior_params(self, x);
        let sd = p.variance.sqrt();
        match theta {
            [t] => Some(norm_logpdf((t - p.mean) / sd) - sd.ln()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConjugatePrior {
    pub mu0: f64,
    pub sigma0: f64,
}

impl ParameterPrior for ConjugatePrior {
    fn dim(&self) -> usize {
        1
    }

    fn draw(&self, rng: &mut SeededRng) -> Vec<f64> {
        vec![self.mu0 + self.sigma0 * rng.standard_normal()]
    }
}

#[derive(Debug, Clone)]
pub struct ConjugateBenchmark {
    pub config: ConjugateConfig,
    pub dataset: JointSampleSet,
    pub posteriors: Vec<ConjugatePosterior>,
    pub prior: ConjugatePrior,
}

impl ConjugateBenchmark {
    /// The analytic posterior, the optimal estimator.
    pub fn true_posterior(&self) -> ConjugateConfig {
        self.config.clone()
    }
}

pub fn generate_conjugate(config: &ConjugateConfig, seed: u64) -> Result<ConjugateBenchmark> {
    config.validate()?;
    let sims: Vec<Simulation> = (0..config.n_sims)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeededRng::derive(seed, &[GENERATOR_STREAM, i as u64]);
            let theta = config.mu0 + config.sigma0 * rng.standard_normal();
            let x = (0..config.n_obs)
                .map(|_| theta + config.sigma_x * rng.standard_normal())
                .collect();
            Simulation {
                sim_id: i,
                theta: vec![theta],
                x,
            }
        })
        .collect();
    let posteriors = sims
        .iter()
        .map(|s| conjugate_posterior_params(config, &s.x))
        .collect();
    Ok(ConjugateBenchmark {
        config: config.clone(),
        dataset: JointSampleSet::new(1, sims)?,
        posteriors,
        prior: ConjugatePrior {
            mu0: config.mu0,
            sigma0: config.sigma0,
        },
    })
}
