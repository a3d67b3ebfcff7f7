use super::NumericsError;

/// Kolmogorov–Smirnov distance between the empirical CDF of `values` and the
/// uniform CDF on `[0, 1]`.
pub fn ks_uniform_statistic(values: &[f64]) -> Result<f64, NumericsError> {
    if values.is_empty() {
        return Err(NumericsError::Empty);
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(NumericsError::Domain(format!(
            "KS uniform statistic needs values in [0, 1], got {v}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted.iter().enumerate().fold(0.0_f64, |d, (i, &v)| {
        let above = (i + 1) as f64 / n - v;
        let below = v - i as f64 / n;
        d.max(above).max(below)
    });
    Ok(d)
}

/// Pointwise binomial uncertainty on an ECP estimate from `n_sims` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialBand {
    pub z: f64,
    pub n_sims: usize,
    pub half_widths: Vec<f64>,
}

impl BinomialBand {
    pub fn level_count(&self) -> usize {
        self.half_widths.len()
    }
}

/// Half-width `z * sqrt(c (1 - c) / n_sims)` at each credibility level `c`.
pub fn binomial_band(levels: &[f64], n_sims: usize, z: f64) -> BinomialBand {
    assert!(n_sims >= 1, "binomial band needs at least one simulation");
    let n = n_sims as f64;
    let half_widths = levels
        .iter()
        .map(|&c| z * (c * (1.0 - c) / n).max(0.0).sqrt())
        .collect();
    BinomialBand {
        z,
        n_sims,
        half_widths,
    }
}
