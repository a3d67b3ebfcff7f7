use std::str::FromStr;

use rayon::prelude::*;

use super::{BenchmarkError, Result};
use crate::coverage::{
    CoverageError, JointSampleSet, ParameterPrior, PosteriorSampler, Simulation,
};
use crate::numerics::{norm_isf, norm_logpdf, DenseMatrix, SeededRng};

const GENERATOR_STREAM: u64 = 2;
const Z_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyCase {
    Correct,
    Overconfident,
    Underconfident,
    Biased,
}

impl ToyCase {
    pub const ALL: [ToyCase; 4] = [
        ToyCase::Correct,
        ToyCase::Overconfident,
        ToyCase::Underconfident,
        ToyCase::Biased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToyCase::Correct => "correct",
            ToyCase::Overconfident => "overconfident",
            ToyCase::Underconfident => "underconfident",
            ToyCase::Biased => "biased",
        }
    }
}

impl std::fmt::Display for ToyCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToyCase {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "over" => return Ok(ToyCase::Overconfident),
            "under" => return Ok(ToyCase::Underconfident),
            _ => {}
        }
        ToyCase::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                BenchmarkError::InvalidConfig(format!(
                    "unknown toy case `{s}` (expected correct, over, under or biased)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub dim: usize,
    pub n_sims: usize,
    pub case: ToyCase,
    pub theta_bounds: (f64, f64),
    /// Bounds on `log_base σ`.
    pub log_sigma_bounds: (f64, f64),
    pub log_sigma_base: f64,
    /// Estimator variance factor in the overconfident case.
    pub narrow_factor: f64,
    /// Estimator variance factor in the underconfident case.
    pub wide_factor: f64,
}

impl ToyConfig {
    pub fn new(dim: usize, n_sims: usize, case: ToyCase) -> Self {
        Self {
            dim,
            n_sims,
            case,
            theta_bounds: (-5.0, 5.0),
            log_sigma_bounds: (-5.0, -1.0),
            log_sigma_base: 10.0,
            narrow_factor: 0.5,
            wide_factor: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchmarkError::InvalidConfig(m));
        if self.dim == 0 || self.n_sims == 0 {
            return bad("toy model needs dim >= 1 and n_sims >= 1".into());
        }
        let (lo, hi) = self.theta_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("theta bounds ({lo}, {hi}) are not ordered"));
        }
        let (a, b) = self.log_sigma_bounds;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return bad(format!("log sigma bounds ({a}, {b}) are not ordered"));
        }
        if !(self.log_sigma_base > 1.0 && self.log_sigma_base.is_finite()) {
            return bad(format!("log base must exceed 1, got {}", self.log_sigma_base));
        }
        for (name, f) in [("narrow", self.narrow_factor), ("wide", self.wide_factor)] {
            if !(f.is_finite() && f > 0.0) {
                return bad(format!("{name} factor must be > 0, got {f}"));
            }
        }
        if self.case == ToyCase::Biased && lo != -hi {
            return bad("the biased case needs bounds symmetric about 0".into());
        }
        Ok(())
    }

    fn sigma_factor(&self) -> f64 {
        match self.case {
            ToyCase::Overconfident => self.narrow_factor.sqrt(),
            ToyCase::Underconfident => self.wide_factor.sqrt(),
            ToyCase::Correct | ToyCase::Biased => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySimulation {
    pub theta_true: Vec<f64>,
    pub sigma: Vec<f64>,
    pub estimator_mean: Vec<f64>,
    pub estimator_sigma: Vec<f64>,
}

impl ToySimulation {
    /// Observation payload: `estimator_mean ++ estimator_sigma`.
    pub fn payload(&self) -> Vec<f64> {
        let mut x = self.estimator_mean.clone();
        x.extend_from_slice(&self.estimator_sigma);
        x
    }
}

/// `θ - sign(θ) Z(1 - |θ|/bound) σ` per dimension, `Z` the standard normal
/// inverse survival function with its argument clamped to `[1e-12, 1 - 1e-12]`.
/// `θ = 0` is returned unchanged.
pub fn biased_mean(theta: &[f64], sigma: &[f64], bound: f64) -> Vec<f64> {
    theta
        .iter()
        .zip(sigma)
        .map(|(&t, &s)| {
            if t == 0.0 {
                return t;
            }
            let p = (1.0 - t.abs() / bound).clamp(Z_EPS, 1.0 - Z_EPS);
            let z = norm_isf(p).expect("clamped argument is inside (0, 1)");
            t - t.signum() * z * s
        })
        .collect()
}

/// Diagonal Gaussian estimator reading its mean and widths from the
/// observation payload.
#[derive(Debug, Clone, Copy)]
pub struct ToyEstimator {
    dim: usize,
}

impl ToyEstimator {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    fn split<'a>(&self, x: &'a [f64]) -> Result<(&'a [f64], &'a [f64]), CoverageError> {
        if x.len() != 2 * self.dim {
            return Err(CoverageError::DimensionMismatch(format!(
                "toy payload has {} entries, expected {}",
                x.len(),
                2 * self.dim
            )));
        }
        Ok(x.split_at(self.dim))
    }
}

impl PosteriorSampler for ToyEstimator {
    fn name(&self) -> String {
        "toy-gaussian".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(
        &self,
        x: &[f64],
        n: usize,
        rng: &mut SeededRng,
    ) -> Result<DenseMatrix, CoverageError> {
        let (mean, sigma) = self.split(x)?;
        let mut out = DenseMatrix::zeros(n, self.dim);
        for j in 0..n {
            let row = out.row_mut(j);
            rng.fill_standard_normal(row);
            for ((v, m), s) in row.iter_mut().zip(mean).zip(sigma) {
                *v = m + s * *v;
            }
        }
        Ok(out)
    }

    fn has_density(&self) -> bool {
        true
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> Option<f64> {
        let (mean, sigma) = self.split(x).ok()?;
        if theta.len() != self.dim {
            return None;
        }
        Some(
            theta
                .iter()
                .zip(mean)
                .zip(sigma)
                .map(|((t, m), s)| norm_logpdf((t - m) / s) - s.ln())
                .sum(),
        )
    }
}

/// Uniform prior on the toy parameter box.
#[derive(Debug, Clone, Copy)]
pub struct ToyPrior {
    pub dim: usize,
    pub bounds: (f64, f64),
}

impl ParameterPrior for ToyPrior {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw(&self, rng: &mut SeededRng) -> Vec<f64> {
        (0..self.dim)
            .map(|_| rng.uniform_range(self.bounds.0, self.bounds.1))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ToyBenchmark {
    pub config: ToyConfig,
    pub dataset: JointSampleSet,
    pub sims: Vec<ToySimulation>,
    pub estimator: ToyEstimator,
    pub prior: ToyPrior,
}

impl ToyBenchmark {
    /// Per-dimension `theta_bounds`, used to normalize parameters.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![self.config.theta_bounds; self.config.dim]
    }
}

fn simulate_one(config: &ToyConfig, rng: &mut SeededRng) -> ToySimulation {
    let (lo, hi) = config.theta_bounds;
    let bound = hi.abs().max(lo.abs());
    let theta_true: Vec<f64> = (0..config.dim)
        .map(|_| loop {
            let t = rng.uniform_range(lo, hi);
            if t > lo && t < hi && t.abs() < bound {
                break t;
            }
        })
        .collect();
    let (a, b) = config.log_sigma_bounds;
    let sigma: Vec<f64> = (0..config.dim)
        .map(|_| config.log_sigma_base.powf(rng.uniform_range(a, b)))
        .collect();
    let estimator_mean = match config.case {
        ToyCase::Biased => biased_mean(&theta_true, &sigma, bound),
        _ => theta_true
            .iter()
            .zip(&sigma)
            .map(|(t, s)| t + s * rng.standard_normal())
            .collect(),
    };
    let factor = config.sigma_factor();
    let estimator_sigma = sigma.iter().map(|s| s * factor).collect();
    ToySimulation {
        theta_true,
        sigma,
        estimator_mean,
        estimator_sigma,
    }
}

/// Draws the validation set and the case's estimator.
pub fn generate_toy(config: &ToyConfig, seed: u64) -> Result<ToyBenchmark> {
    config.validate()?;
    let sims: Vec<ToySimulation> = (0..config.n_sims)
        .into_par_iter()
        .map(|i| simulate_one(config, &mut SeededRng::derive(seed, &[GENERATOR_STREAM, i as u64])))
        .collect();
    let dataset = JointSampleSet::new(
        config.dim,
        sims.iter()
            .enumerate()
            .map(|(i, s)| Simulation {
                sim_id: i,
                theta: s.theta_true.clone(),
                x: s.payload(),
            })
            .collect(),
    )?;
    Ok(ToyBenchmark {
        config: config.clone(),
        dataset,
        sims,
        estimator: ToyEstimator::new(config.dim),
        prior: ToyPrior {
            dim: config.dim,
            bounds: config.theta_bounds,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biased_mean_examples() {
        assert_eq!(biased_mean(&[2.5], &[0.1], 5.0), vec![2.5]);
        assert_eq!(biased_mean(&[0.0], &[0.1], 5.0), vec![0.0]);
        // 1 - |θ|/5 = 0.1586553 gives Z ≈ 1.
        let t = 5.0 * (1.0 - 0.158_655_3);
        let m = biased_mean(&[t, -t], &[0.1, 0.1], 5.0);
        assert!((m[0] - (t - 0.1)).abs() < 1e-6);
        assert!((m[1] - (-t + 0.1)).abs() < 1e-6);
    }

    #[test]
    fn biased_mean_is_finite_near_zero() {
        let m = biased_mean(&[1e-300, -1e-300], &[0.1, 0.1], 5.0);
        assert!(m.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let cfg = ToyConfig::new(4, 50, ToyCase::Correct);
        let a = generate_toy(&cfg, 11).unwrap();
        let b = generate_toy(&cfg, 11).unwrap();
        assert_eq!(a.sims, b.sims);
        for s in &a.sims {
            assert!(s.theta_true.iter().all(|t| t.abs() < 5.0));
            assert!(s.sigma.iter().all(|&v| (1e-5..1e-1).contains(&v)));
        }
    }

    #[test]
    fn case_factors() {
        for (case, f) in [
            (ToyCase::Correct, 1.0),
            (ToyCase::Overconfident, 0.5f64.sqrt()),
            (ToyCase::Underconfident, 2f64.sqrt()),
            (ToyCase::Biased, 1.0),
        ] {
            let b = generate_toy(&ToyConfig::new(3, 5, case), 2).unwrap();
            for s in &b.sims {
                for (e, sig) in s.estimator_sigma.iter().zip(&s.sigma) {
                    assert!((e / sig - f).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut c = ToyConfig::new(2, 2, ToyCase::Biased);
        c.theta_bounds = (0.0, 5.0);
        assert!(c.validate().is_err());
        let mut c = ToyConfig::new(2, 2, ToyCase::Correct);
        c.wide_factor = 0.0;
        assert!(c.validate().is_err());
        assert!("sideways".parse::<ToyCase>().is_err());
        assert_eq!("biased".parse::<ToyCase>().unwrap(), ToyCase::Biased);
        assert_eq!("over".parse::<ToyCase>().unwrap(), ToyCase::Overconfident);
    }

    #[test]
    fn density_matches_closed_form() {
        let est = ToyEstimator::new(1);
        let x = [0.5, 2.0];
        let l = est.log_density(&[1.5], &x).unwrap();
        let expect = -0.5 * (0.5f64).powi(2) - 2f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((l - expect).abs() < 1e-12);
        assert!(est.log_density(&[1.5], &[0.0]).is_none());
    }
}
