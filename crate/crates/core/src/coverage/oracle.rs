//! Coverage computed by explicit region membership, independent of the
//! rank-counting path.

use super::{CoverageError, DistanceMetric, MethodTag, Result};
use crate::numerics::DenseMatrix;

/// Per-simulation inputs to the membership check.
pub enum MembershipInput<'a> {
    /// Samples, truth and reference point in normalized coordinates.
    Drp {
        samples: &'a DenseMatrix,
        theta_true: &'a [f64],
        theta_r: &'a [f64],
        metric: &'a dyn DistanceMetric,
    },
    /// Estimator log densities at the samples and at the truth.
    Hpd {
        sample_log_densities: &'a [f64],
        truth_log_density: f64,
    },
}

impl MembershipInput<'_> {
    fn tag(&self) -> MethodTag {
        match self {
            MembershipInput::Drp { .. } => MethodTag::Drp,
            MembershipInput::Hpd { .. } => MethodTag::Hpd,
        }
    }
}

/// Smallest `k` with `k / n >= c`.
fn region_size(c: f64, n: usize) -> usize {
    let nf = n as f64;
    let mut k = (c * nf).floor() as usize;
    while (k as f64) / nf < c {
        k += 1;
    }
    while k > 0 && ((k - 1) as f64) / nf >= c {
        k -= 1;
    }
    k.min(n)
}

/// Whether the truth lies inside the estimated credible region at level `c`.
///
/// The region holds the `k` samples that rank best (closest to `θ_r`, or
/// highest density), `k` the smallest count reaching mass `c`: a closed ball
/// of radius `d_(k)` for DRP and a superlevel set for HPD. `k = 0` is empty.
pub fn truth_in_region(input: &MembershipInput<'_>, c: f64) -> Result<bool> {
    match input {
        MembershipInput::Drp {
            samples,
            theta_true,
            theta_r,
            metric,
        } => {
            let mut d: Vec<f64> = (0..samples.rows())
                .map(|j| metric.distance(samples.row(j), theta_r))
                .collect();
            if d.is_empty() {
                return Err(CoverageError::InvalidArgument("no posterior samples".into()));
            }
            let k = region_size(c, d.len());
            if k == 0 {
                return Ok(false);
            }
            d.sort_by(f64::total_cmp);
            Ok(metric.distance(theta_true, theta_r) <= d[k - 1])
        }
        MembershipInput::Hpd {
            sample_log_densities,
            truth_log_density,
        } => {
            if sample_log_densities.is_empty() {
                return Err(CoverageError::InvalidArgument("no posterior samples".into()));
            }
            let k = region_size(c, sample_log_densities.len());
            if k == 0 {
                return Ok(false);
            }
            let mut l = sample_log_densities.to_vec();
            l.sort_by(|a, b| b.total_cmp(a));
            Ok(*truth_log_density >= l[k - 1])
        }
    }
}

/// ECP at each level as the fraction of simulations whose truth falls inside
/// the estimated region.
pub fn region_membership_ecp(inputs: &[MembershipInput<'_>], levels: &[f64]) -> Result<Vec<f64>> {
    if inputs.is_empty() {
        return Err(CoverageError::EmptyRanks);
    }
    let tag = inputs[0].tag();
    if inputs.iter().any(|i| i.tag() != tag) {
        return Err(CoverageError::InvalidArgument(
            "mixed DRP and HPD inputs".into(),
        ));
    }
    levels
        .iter()
        .map(|&c| {
            let mut covered = 0usize;
            for input in inputs {
                if truth_in_region(input, c)? {
                    covered += 1;
                }
            }
            Ok(covered as f64 / inputs.len() as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::Euclidean;

    #[test]
    fn region_size_rounding() {
        assert_eq!(region_size(0.0, 10), 0);
        assert_eq!(region_size(0.3, 10), 3);
        assert_eq!(region_size(0.31, 10), 4);
        assert_eq!(region_size(1.0, 10), 10);
        assert_eq!(region_size(0.68, 3), 3);
    }

    #[test]
    fn three_sim_example() {
        // Truth ranks 0/3, 1/3 and 3/3 against three samples each.
        let s = DenseMatrix::from_rows(&[vec![0.1], vec![0.2], vec![0.3]]).unwrap();
        let truths = [[0.05], [0.15], [0.35]];
        let inputs: Vec<_> = truths
            .iter()
            .map(|t| MembershipInput::Drp {
                samples: &s,
                theta_true: t,
                theta_r: &[0.0],
                metric: &Euclidean,
            })
            .collect();
        let ecp = region_membership_ecp(&inputs, &[0.68]).unwrap();
        assert!((ecp[0] - 2.0 / 3.0).abs() < 1e-15);
    }
}
