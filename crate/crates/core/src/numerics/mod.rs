//! Shared numerical plumbing: seeded substreams, normal-distribution special
//! functions, a small dense matrix type and a couple of statistics helpers.

mod linalg;
mod normal;
mod rng;
mod stats;

pub use linalg::{cholesky, mvn_sample, CholeskyFactor, DenseMatrix, SymmetricEigen};
pub use normal::{norm_cdf, norm_isf, norm_logpdf, norm_pdf, norm_sf};
pub use rng::SeededRng;
pub use stats::{binomial_band, ks_uniform_statistic, BinomialBand};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is not symmetric: |m[{row},{col}] - m[{col},{row}]| exceeds tolerance")]
    NotSymmetric { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("empty input")]
    Empty,
}
