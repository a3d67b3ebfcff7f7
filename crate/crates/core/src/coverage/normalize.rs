use super::{CoverageError, JointSampleSet, Result};

/// Per-dimension affine map `θ ↦ (θ - lo) / (hi - lo)` onto the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationMap {
    offsets: Vec<f64>,
    widths: Vec<f64>,
}

impl NormalizationMap {
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(bounds.len());
        let mut widths = Vec::with_capacity(bounds.len());
        for (dim, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CoverageError::Normalization {
                    dim,
                    reason: format!("bounds ({lo}, {hi}) must be finite with lo < hi"),
                });
            }
            offsets.push(lo);
            widths.push(hi - lo);
        }
        Ok(Self { offsets, widths })
    }

    /// Identity map in `dim` dimensions (data already in the unit cube).
    pub fn identity(dim: usize) -> Self {
        Self {
            offsets: vec![0.0; dim],
            widths: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    /// The `(lo, hi)` pair of each dimension.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.offsets
            .iter()
            .zip(&self.widths)
            .map(|(&lo, &w)| (lo, lo + w))
            .collect()
    }

    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = theta.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, theta: &mut [f64]) {
        debug_assert_eq!(theta.len(), self.dim());
        for ((v, lo), w) in theta.iter_mut().zip(&self.offsets).zip(&self.widths) {
            *v = (*v - lo) / w;
        }
    }
}

/// Builds the map from explicit bounds, or from the per-dimension min/max of
/// the dataset's true parameters.
pub fn fit_normalization(
    dataset: &JointSampleSet,
    explicit_bounds: Option<&[(f64, f64)]>,
) -> Result<NormalizationMap> {
    let d = dataset.dim_theta();
    if let Some(bounds) = explicit_bounds {
        if bounds.len() != d {
            return Err(CoverageError::DimensionMismatch(format!(
                "{} bounds for {d}-dimensional parameters",
                bounds.len()
            )));
        }
        return NormalizationMap::from_bounds(bounds);
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for sim in dataset.iter() {
        for (k, &v) in sim.theta.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let bounds: Vec<(f64, f64)> = lo.into_iter().zip(hi).collect();
    if let Some(dim) = bounds.iter().position(|(l, h)| l >= h) {
        return Err(CoverageError::Normalization {
            dim,
            reason: "all true values are equal; supply explicit bounds".into(),
        });
    }
    NormalizationMap::from_bounds(&bounds)
}
