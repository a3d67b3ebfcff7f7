use super::{CoverageError, RankStatistic, Result};
use crate::numerics::{binomial_band, BinomialBand};

/// Default band multiplier: ±3 binomial standard errors.
pub const DEFAULT_BAND_Z: f64 = 3.0;

/// `n_levels` evenly spaced credibility levels from 0 to 1 inclusive.
pub fn credibility_grid(n_levels: usize) -> Vec<f64> {
    assert!(n_levels >= 2, "a credibility grid needs both endpoints");
    let last = (n_levels - 1) as f64;
    (0..n_levels).map(|i| i as f64 / last).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Drp,
    Hpd,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Drp => "drp",
            MethodTag::Hpd => "hpd",
        }
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Expected coverage probability against credibility level, with the
/// pointwise binomial band for a calibrated estimator.
#[derive(Debug, Clone)]
pub struct CoverageCurve {
    pub method: MethodTag,
    pub levels: Vec<f64>,
    pub ecp: Vec<f64>,
    pub band: BinomialBand,
    pub n_sims: usize,
    pub n_post: usize,
    pub ranks: Vec<RankStatistic>,
    /// Reference policy label (DRP only).
    pub policy: Option<String>,
    /// Distance metric label (DRP only).
    pub metric: Option<String>,
}

impl CoverageCurve {
    /// `α = 1 - c` for each level.
    pub fn alphas(&self) -> Vec<f64> {
        self.levels.iter().map(|c| 1.0 - c).collect()
    }

    /// Fraction of levels with `|ecp - c| <= half_width`.
    pub fn fraction_in_band(&self) -> f64 {
        let inside = self
            .levels
            .iter()
            .zip(&self.ecp)
            .zip(&self.band.half_widths)
            .filter(|((c, e), hw)| (*e - *c).abs() <= **hw + 1e-12)
            .count();
        inside as f64 / self.levels.len() as f64
    }

    /// Largest `|ecp - c| / half_width` over levels with a nonzero band.
    pub fn max_standardized_deviation(&self) -> f64 {
        self.levels
            .iter()
            .zip(&self.ecp)
            .zip(&self.band.half_widths)
            .filter(|(_, hw)| **hw > 0.0)
            .map(|((c, e), hw)| (e - c).abs() / hw)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_deviation(&self) -> f64 {
        self.levels
            .iter()
            .zip(&self.ecp)
            .map(|(c, e)| (e - c).abs())
            .fold(0.0, f64::max)
    }

    /// Band bounds clipped to `[0, 1]`.
    pub fn band_bounds(&self) -> Vec<(f64, f64)> {
        self.levels
            .iter()
            .zip(&self.band.half_widths)
            .map(|(c, hw)| ((c - hw).max(0.0), (c + hw).min(1.0)))
            .collect()
    }
}

/// Builds the curve `ecp(c) = #{f_i < c} / #ranks`.
///
/// With several ranks per simulation (repeated reference draws) the ECP
/// averages over all of them while the band stays at `n_sims` trials.
pub fn ecp_curve(
    method: MethodTag,
    ranks: Vec<RankStatistic>,
    levels: &[f64],
    n_sims: usize,
    n_post: usize,
    z: f64,
) -> Result<CoverageCurve> {
    if ranks.is_empty() || n_sims == 0 {
        return Err(CoverageError::EmptyRanks);
    }
    if let Some(c) = levels.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(CoverageError::InvalidArgument(format!(
            "credibility level {c} outside [0, 1]"
        )));
    }
    let mut fs: Vec<f64> = ranks.iter().map(RankStatistic::f).collect();
    fs.sort_by(f64::total_cmp);
    let total = fs.len() as f64;
    let ecp = levels
        .iter()
        .map(|&c| fs.partition_point(|&f| f < c) as f64 / total)
        .collect();
    Ok(CoverageCurve {
        method,
        levels: levels.to_vec(),
        ecp,
        band: binomial_band(levels, n_sims, z),
        n_sims,
        n_post,
        ranks,
        policy: None,
        metric: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranks(fs: &[(usize, usize)]) -> Vec<RankStatistic> {
        fs.iter()
            .enumerate()
            .map(|(i, &(count, n))| RankStatistic {
                sim_id: i,
                count,
                n_samples: n,
                theta_r: None,
            })
            .collect()
    }

    #[test]
    fn grid_endpoints() {
        let g = credibility_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert!((g[37] - 0.37).abs() < 1e-15);
    }

    #[test]
    fn ecp_counts_strictly_below() {
        let r = ranks(&[(1, 4), (2, 4), (3, 4), (4, 4)]);
        let c = ecp_curve(MethodTag::Drp, r, &[0.0, 0.25, 0.5, 0.6, 1.0], 4, 4, 3.0).unwrap();
        assert_eq!(c.ecp, vec![0.0, 0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn ecp_is_monotone_and_bounded() {
        let r = ranks(&[(0, 10), (3, 10), (3, 10), (9, 10), (10, 10)]);
        let c = ecp_curve(MethodTag::Hpd, r, &credibility_grid(101), 5, 10, 3.0).unwrap();
        assert_eq!(c.ecp[0], 0.0);
        assert!(c.ecp.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.ecp.iter().all(|e| (0.0..=1.0).contains(e)));
    }

    #[test]
    fn empty_ranks_rejected() {
        assert!(matches!(
            ecp_curve(MethodTag::Drp, vec![], &[0.5], 1, 1, 3.0),
            Err(CoverageError::EmptyRanks)
        ));
    }

    #[test]
    fn band_statistics() {
        // All f = 0 gives ecp = 1 for every c > 0.
        let r = ranks(&[(0, 10); 100]);
        let c = ecp_curve(MethodTag::Drp, r, &[0.0, 0.5, 1.0], 100, 10, 3.0).unwrap();
        assert_eq!(c.ecp, vec![0.0, 1.0, 1.0]);
        // At c = 0.5: hw = 3 * 0.05 = 0.15, deviation 0.5 -> 10 half-widths.
        assert!((c.max_standardized_deviation() - 0.5 / 0.15).abs() < 1e-12);
        assert!((c.fraction_in_band() - 2.0 / 3.0).abs() < 1e-12);
    }
}
