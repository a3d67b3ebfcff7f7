use super::{CoverageError, DistanceMetric, Result};
use crate::numerics::DenseMatrix;

/// Per-simulation rank statistic `f = count / n_samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankStatistic {
    pub sim_id: usize,
    /// Number of posterior samples that beat the truth.
    pub count: usize,
    pub n_samples: usize,
    /// Reference point used (normalized coordinates); DRP only.
    pub theta_r: Option<Vec<f64>>,
}

impl RankStatistic {
    pub fn f(&self) -> f64 {
        self.count as f64 / self.n_samples as f64
    }
}

/// Fraction of samples strictly closer to `theta_r` than `theta_true` is.
/// Samples at exactly the truth's distance do not count.
pub fn drp_rank(
    post_samples: &DenseMatrix,
    theta_true: &[f64],
    theta_r: &[f64],
    metric: &dyn DistanceMetric,
) -> Result<RankStatistic> {
    let d = theta_true.len();
    if post_samples.rows() == 0 {
        return Err(CoverageError::InvalidArgument("no posterior samples".into()));
    }
    if post_samples.cols() != d || theta_r.len() != d {
        return Err(CoverageError::DimensionMismatch(format!(
            "samples have {} columns, truth {d}, reference {}",
            post_samples.cols(),
            theta_r.len()
        )));
    }
    let truth_key = metric.ordering_key(theta_true, theta_r);
    if !truth_key.is_finite() {
        return Err(CoverageError::NonFiniteDistance);
    }
    let mut count = 0;
    for j in 0..post_samples.rows() {
        let key = metric.ordering_key(post_samples.row(j), theta_r);
        if !key.is_finite() {
            return Err(CoverageError::NonFiniteDistance);
        }
        if key < truth_key {
            count += 1;
        }
    }
    Ok(RankStatistic {
        sim_id: 0,
        count,
        n_samples: post_samples.rows(),
        theta_r: Some(theta_r.to_vec()),
    })
}

/// HPD rank: fraction of samples whose estimator density is strictly above
/// the density at the truth, i.e. the estimated mass of the HPD region whose
/// boundary passes through the truth. Ties do not count.
pub fn hpd_rank(sample_densities: &[f64], truth_density: f64) -> Result<RankStatistic> {
    for &p in sample_densities.iter().chain(std::iter::once(&truth_density)) {
        if p.is_nan() || p.is_infinite() {
            return Err(CoverageError::NonFiniteDensity);
        }
        if p < 0.0 {
            return Err(CoverageError::NegativeDensity(p));
        }
    }
    count_above(sample_densities, truth_density)
}

/// [`hpd_rank`] on log densities; avoids overflow for sharp
/// high-dimensional estimators. `-inf` stands for zero density.
pub fn hpd_rank_log(sample_log_densities: &[f64], truth_log_density: f64) -> Result<RankStatistic> {
    for &l in sample_log_densities.iter().chain(std::iter::once(&truth_log_density)) {
        if l.is_nan() || l == f64::INFINITY {
            return Err(CoverageError::NonFiniteDensity);
        }
    }
    count_above(sample_log_densities, truth_log_density)
}

fn count_above(values: &[f64], truth: f64) -> Result<RankStatistic> {
    if values.is_empty() {
        return Err(CoverageError::InvalidArgument("no posterior samples".into()));
    }
    Ok(RankStatistic {
        sim_id: 0,
        count: values.iter().filter(|&&v| v > truth).count(),
        n_samples: values.len(),
        theta_r: None,
    })
}
