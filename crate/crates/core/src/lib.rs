//! Expected-coverage diagnostics for posterior estimators.
//!
//! Two coverage tests are provided. The distance-to-random-point (DRP) test
//! needs only posterior samples: for every validation simulation it draws a
//! reference point, and records the fraction of samples that are closer to
//! it than the true parameter. The highest-posterior-density (HPD) test does
//! the same with estimator densities instead of distances. Both rank
//! statistics are uniform for an optimal estimator, and the expected coverage
//! curve is their empirical CDF.
//!
//! Synthetic benchmarks with known ground truth live in [`benchmarks`]
//! (Gaussian toy model, prior-as-posterior estimator) and [`lensing`]
//! (linear-Gaussian inverse problem with reverse-SDE samplers).

pub mod benchmarks;
pub mod coverage;
pub mod lensing;
pub mod numerics;
