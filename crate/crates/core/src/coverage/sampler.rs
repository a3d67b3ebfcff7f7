use std::collections::BTreeMap;
use std::sync::Arc;

use super::{CoverageError, Result, Simulation};
use crate::numerics::{DenseMatrix, SeededRng};

/// A posterior estimator `p̂(θ | x)` that can be sampled.
///
/// Density evaluation is optional and only the HPD test needs it. The value
/// may be unnormalized per `x`: only comparisons at a fixed `x` are made.
pub trait PosteriorSampler: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// `n` draws as an `n × dim` matrix.
    fn sample(&self, x: &[f64], n: usize, rng: &mut SeededRng) -> Result<DenseMatrix>;

    fn has_density(&self) -> bool {
        false
    }

    /// Log of the (possibly unnormalized) estimator density at `theta`.
    fn log_density(&self, _theta: &[f64], _x: &[f64]) -> Option<f64> {
        None
    }
}

macro_rules! delegate_sampler {
    ($($ty:ty),*) => {$(
        impl<T: PosteriorSampler + ?Sized> PosteriorSampler for $ty {
            fn name(&self) -> String {
                (**self).name()
            }

            fn dim(&self) -> usize {
                (**self).dim()
            }

            fn sample(&self, x: &[f64], n: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
                (**self).sample(x, n, rng)
            }

            fn has_density(&self) -> bool {
                (**self).has_density()
            }

            fn log_density(&self, theta: &[f64], x: &[f64]) -> Option<f64> {
                (**self).log_density(theta, x)
            }
        }
    )*};
}

delegate_sampler!(Arc<T>, &T, Box<T>);

/// Source of posterior samples for a given simulation.
///
/// Every [`PosteriorSampler`] is one; [`StoredSamples`] serves draws that
/// were produced elsewhere and read back from disk.
pub trait SampleProvider: Sync {
    fn draw(&self, sim: &Simulation, n_post: usize, rng: &mut SeededRng) -> Result<DenseMatrix>;
}

impl<T: PosteriorSampler + ?Sized> SampleProvider for T {
    fn draw(&self, sim: &Simulation, n_post: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
        let samples = self.sample(&sim.x, n_post, rng)?;
        if samples.cols() != self.dim() || samples.rows() != n_post {
            return Err(CoverageError::Sampler(format!(
                "{} returned a {}x{} sample matrix, expected {n_post}x{}",
                self.name(),
                samples.rows(),
                samples.cols(),
                self.dim()
            )));
        }
        Ok(samples)
    }
}

/// Precomputed posterior samples keyed by `sim_id`. The requested `n_post`
/// is ignored; every stored sample of the simulation is returned.
#[derive(Debug, Clone, Default)]
pub struct StoredSamples {
    by_sim: BTreeMap<usize, DenseMatrix>,
}

impl StoredSamples {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sim_id: usize, samples: DenseMatrix) {
        self.by_sim.insert(sim_id, samples);
    }

    pub fn get(&self, sim_id: usize) -> Option<&DenseMatrix> {
        self.by_sim.get(&sim_id)
    }

    pub fn len(&self) -> usize {
        self.by_sim.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_sim.is_empty()
    }

    /// Smallest per-simulation sample count.
    pub fn min_count(&self) -> Option<usize> {
        self.by_sim.values().map(DenseMatrix::rows).min()
    }
}

impl SampleProvider for StoredSamples {
    fn draw(&self, sim: &Simulation, _n_post: usize, _rng: &mut SeededRng) -> Result<DenseMatrix> {
        self.by_sim
            .get(&sim.sim_id)
            .cloned()
            .ok_or_else(|| CoverageError::Sampler(format!("no stored samples for sim {}", sim.sim_id)))
    }
}
