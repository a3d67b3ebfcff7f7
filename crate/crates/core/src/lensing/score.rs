use std::str::FromStr;

use super::{LensingError, LensingModel, Result, VeSchedule};
use crate::numerics::{CholeskyFactor, DenseMatrix};

/// Which time-dependent likelihood the posterior score uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// `N(x | A θ_c(θ), σ_n² I + A Σ_c Aᵀ)`, the true noised likelihood.
    Exact,
    /// `N(x | Aθ, σ_n² I + σ_t² AAᵀ)`, ignoring the prior inside the convolution.
    Biased,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Exact => "exact",
            ScoreKind::Biased => "biased",
        }
    }
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = LensingError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ScoreKind::Exact),
            "biased" => Ok(ScoreKind::Biased),
            _ => Err(LensingError::Config(format!(
                "unknown estimator `{s}` (expected exact or biased)"
            ))),
        }
    }
}

/// A score that is affine in θ: `-Pθ + a + K x̂`, `x̂` the least-squares
/// source of the observation.
#[derive(Debug, Clone)]
pub struct AffineScore {
    pub precision: DenseMatrix,
    pub offset: Vec<f64>,
    pub gain: DenseMatrix,
}

impl AffineScore {
    pub fn eval(&self, theta: &[f64], x_hat: &[f64]) -> Result<Vec<f64>> {
        let p = self.precision.matvec(theta)?;
        let k = self.gain.matvec(x_hat)?;
        Ok(p.iter()
            .zip(&self.offset)
            .zip(k)
            .map(|((p, a), k)| a + k - p)
            .collect())
    }

    fn plus(&self, other: &AffineScore) -> Result<AffineScore> {
        Ok(AffineScore {
            precision: self.precision.add(&other.precision)?,
            offset: self.offset.iter().zip(&other.offset).map(|(a, b)| a + b).collect(),
            gain: self.gain.add(&other.gain)?,
        })
    }
}

fn spd_inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(CholeskyFactor::new(&m.symmetrized())?.inverse())
}

/// `∇ log N(θ | μ₀, Σ₀ + σ_t² I)` as an affine map.
pub fn prior_affine(model: &LensingModel, schedule: &VeSchedule, t: f64) -> Result<AffineScore> {
    let s2 = schedule.sigma_t(t)?.powi(2);
    let precision = model.prior_eigen().reconstruct_with(|l| 1.0 / (l + s2));
    let offset = precision.matvec(model.prior_mean())?;
    let d = model.dim_theta();
    Ok(AffineScore {
        precision,
        offset,
        gain: DenseMatrix::zeros(d, d),
    })
}

/// Time-`t` likelihood score as an affine map, for `t ∈ (0, 1]`.
pub fn likelihood_affine(
    model: &LensingModel,
    schedule: &VeSchedule,
    kind: ScoreKind,
    t: f64,
) -> Result<AffineScore> {
    let s2 = schedule.sigma_t(t)?.powi(2);
    let d = model.dim_theta();
    match kind {
        ScoreKind::Biased => {
            // Aᵀ(σ_n² I + σ_t² AAᵀ)⁻¹(x - Aθ) = (G⁻¹ + σ_t² I)⁻¹(x̂ - θ)
            let k = spd_inverse(&model.g_inv().with_added_diagonal(s2))?;
            Ok(AffineScore {
                precision: k.clone(),
                offset: vec![0.0; d],
                gain: k,
            })
        }
        ScoreKind::Exact => {
            // θ_c(θ) = (I - J) μ₀ + Jθ with J = Σ_c / σ_t² = Σ₀ (Σ₀ + σ_t² I)⁻¹.
            let eig = model.prior_eigen();
            let sigma_c = eig.reconstruct_with(|l| l * s2 / (l + s2));
            let j = eig.reconstruct_with(|l| l / (l + s2));
            let k = spd_inverse(&model.g_inv().add(&sigma_c)?)?;
            let jk = j.matmul(&k)?;
            let i_minus_j_mu = eig
                .reconstruct_with(|l| s2 / (l + s2))
                .matvec(model.prior_mean())?;
            let offset = jk.matvec(&i_minus_j_mu)?.into_iter().map(|v| -v).collect();
            Ok(AffineScore {
                precision: jk.matmul(&j)?.symmetrized(),
                offset,
                gain: jk,
            })
        }
    }
}

/// Posterior score (prior plus likelihood) at time `t ∈ (0, 1]`.
pub fn posterior_affine(
    model: &LensingModel,
    schedule: &VeSchedule,
    kind: ScoreKind,
    t: f64,
) -> Result<AffineScore> {
    prior_affine(model, schedule, t)?.plus(&likelihood_affine(model, schedule, kind, t)?)
}

/// `-(Σ₀ + σ_t² I)⁻¹(θ - μ₀)`.
pub fn prior_score(
    model: &LensingModel,
    schedule: &VeSchedule,
    theta: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    let s2 = schedule.sigma_t(t)?.powi(2);
    let eig = model.prior_eigen();
    let v = &eig.vectors;
    let diff: Vec<f64> = theta.iter().zip(model.prior_mean()).map(|(a, b)| a - b).collect();
    let mut w = v.matvec_transposed(&diff)?;
    for (w, l) in w.iter_mut().zip(&eig.values) {
        *w /= -(l + s2);
    }
    Ok(v.matvec(&w)?)
}

/// Gradient in θ of the time-`t` log likelihood of `kind`. At `t = 0` both
/// kinds are evaluated in the `σ_t → 0` limit, `Aᵀ(x - Aθ)/σ_n²`.
pub fn likelihood_score(
    model: &LensingModel,
    schedule: &VeSchedule,
    kind: ScoreKind,
    theta: &[f64],
    x: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    check_theta(model, theta)?;
    if t == 0.0 {
        let a = model.operator();
        let mut r = x.to_vec();
        if r.len() != model.dim_x() {
            return Err(LensingError::Dimension(format!(
                "observation has {} pixels, model expects {}",
                r.len(),
                model.dim_x()
            )));
        }
        for (r, p) in r.iter_mut().zip(a.matvec(theta)?) {
            *r -= p;
        }
        let s2 = model.sigma_n().powi(2);
        return Ok(a.matvec_transposed(&r)?.into_iter().map(|v| v / s2).collect());
    }
    let x_hat = model.x_hat(x)?;
    likelihood_affine(model, schedule, kind, t)?.eval(theta, &x_hat)
}

fn check_theta(model: &LensingModel, theta: &[f64]) -> Result<()> {
    if theta.len() != model.dim_theta() {
        return Err(LensingError::Dimension(format!(
            "θ has {} entries, model expects {}",
            theta.len(),
            model.dim_theta()
        )));
    }
    Ok(())
}
