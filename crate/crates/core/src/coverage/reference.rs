use std::sync::Arc;

use super::{CoverageError, NormalizationMap, Result};
use crate::numerics::SeededRng;

/// Distribution `p̃(θ_r | x)` of DRP reference points.
///
/// Returned points are already in normalized coordinates.
pub trait ReferencePolicy: Send + Sync + std::fmt::Debug {
    /// Registry spelling, e.g. `hypercube` or `datashift:0,1`.
    fn label(&self) -> String;

    fn sample(
        &self,
        x: &[f64],
        dim: usize,
        normalization: &NormalizationMap,
        rng: &mut SeededRng,
    ) -> Result<Vec<f64>>;
}

/// Independent draws of the parameter prior, in raw (unnormalized) units.
pub trait ParameterPrior: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;

    fn draw(&self, rng: &mut SeededRng) -> Vec<f64>;
}

/// Uniform on the unit hypercube `[0, 1]^D`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitHypercubeUniform;

impl ReferencePolicy for UnitHypercubeUniform {
    fn label(&self) -> String {
        "hypercube".into()
    }

    fn sample(
        &self,
        _x: &[f64],
        dim: usize,
        _normalization: &NormalizationMap,
        rng: &mut SeededRng,
    ) -> Result<Vec<f64>> {
        Ok((0..dim).map(|_| rng.uniform()).collect())
    }
}

/// A prior draw pushed through the active normalization.
#[derive(Debug, Clone)]
pub struct PriorDraw {
    prior: Arc<dyn ParameterPrior>,
}

impl PriorDraw {
    pub fn new(prior: Arc<dyn ParameterPrior>) -> Self {
        Self { prior }
    }
}

impl ReferencePolicy for PriorDraw {
    fn label(&self) -> String {
        "prior".into()
    }

    fn sample(
        &self,
        _x: &[f64],
        dim: usize,
        normalization: &NormalizationMap,
        rng: &mut SeededRng,
    ) -> Result<Vec<f64>> {
        if self.prior.dim() != dim {
            return Err(CoverageError::Policy(format!(
                "prior has dimension {}, parameters have {dim}",
                self.prior.dim()
            )));
        }
        Ok(normalization.apply(&self.prior.draw(rng)))
    }
}

/// `θ_r = x_k + u`, `u ~ U(-u_max, u_max)`, for scalar parameters.
#[derive(Debug, Clone, Copy)]
pub struct DataShift {
    pub coordinate: usize,
    pub half_width: f64,
}

impl DataShift {
    pub fn new(coordinate: usize, half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width >= 0.0) {
            return Err(CoverageError::Policy(format!(
                "datashift half-width must be finite and >= 0, got {half_width}"
            )));
        }
        Ok(Self {
            coordinate,
            half_width,
        })
    }
}

impl ReferencePolicy for DataShift {
    fn label(&self) -> String {
        format!("datashift:{},{}", self.coordinate, self.half_width)
    }

    fn sample(
        &self,
        x: &[f64],
        dim: usize,
        normalization: &NormalizationMap,
        rng: &mut SeededRng,
    ) -> Result<Vec<f64>> {
        if dim != 1 {
            return Err(CoverageError::Policy(format!(
                "datashift needs scalar parameters, got dimension {dim}"
            )));
        }
        let xk = *x.get(self.coordinate).ok_or_else(|| {
            CoverageError::Policy(format!(
                "observation has {} coordinates, datashift reads x_{}",
                x.len(),
                self.coordinate
            ))
        })?;
        let u = if self.half_width == 0.0 {
            0.0
        } else {
            rng.uniform_range(-self.half_width, self.half_width)
        };
        Ok(normalization.apply(&[xk + u]))
    }
}

/// Draws one reference point under `policy`.
pub fn sample_reference(
    policy: &dyn ReferencePolicy,
    x: &[f64],
    dim: usize,
    normalization: &NormalizationMap,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    let r = policy.sample(x, dim, normalization, rng)?;
    if r.len() != dim {
        return Err(CoverageError::Policy(format!(
            "{} produced a point of dimension {}, expected {dim}",
            policy.label(),
            r.len()
        )));
    }
    Ok(r)
}
