use super::{LensingError, Result};
use crate::coverage::ParameterPrior;
use crate::numerics::{CholeskyFactor, DenseMatrix, SeededRng, SymmetricEigen};

const PRIOR_JITTER: f64 = 1e-4;
const MAX_CONDITION: f64 = 1e4;
const WARP_WIDTH: f64 = 0.25;
const WARP_CENTER: (f64, f64) = (0.56, 0.44);
const CENTER_JITTER: f64 = 0.02;
const OPERATOR_STREAM: u64 = 3;

/// Forward operator shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// Bilinear resampling of the source under a radial pinch of the given
    /// strength about an off-center point.
    Warp { strength: f64 },
    /// `A = I`; needs equal source and observation grids.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LensingConfig {
    /// Source grid side; `D = side²`.
    pub source_side: usize,
    /// Observation grid side; `M = side²`.
    pub obs_side: usize,
    pub sigma_n: f64,
    /// Prior correlation length as a fraction of the source side.
    pub kernel_scale: f64,
    pub operator: OperatorKind,
    pub seed: u64,
}

impl LensingConfig {
    /// Source `side × side`, observations at twice the resolution.
    pub fn new(source_side: usize, seed: u64) -> Self {
        Self {
            source_side,
            obs_side: 2 * source_side,
            sigma_n: 1.0,
            kernel_scale: 0.5,
            operator: OperatorKind::Warp { strength: 0.35 },
            seed,
        }
    }
}

/// Bilinear warp (or identity) operator mapping a `source_side²` image to an
/// `obs_side²` one, row-major pixels.
pub fn build_operator(
    source_side: usize,
    obs_side: usize,
    kind: OperatorKind,
    seed: u64,
) -> Result<DenseMatrix> {
    let (s, o) = (source_side, obs_side);
    if s < 2 || o < s {
        return Err(LensingError::Operator(format!(
            "need 2 <= source side <= observation side, got {s} and {o}"
        )));
    }
    let a = match kind {
        OperatorKind::Identity => {
            if s != o {
                return Err(LensingError::Operator(
                    "identity operator needs equal grid sizes".into(),
                ));
            }
            DenseMatrix::identity(s * s)
        }
        OperatorKind::Warp { strength } => {
            if !(0.0..1.0).contains(&strength) {
                return Err(LensingError::Operator(format!(
                    "warp strength must lie in [0, 1), got {strength}"
                )));
            }
            let mut rng = SeededRng::derive(seed, &[OPERATOR_STREAM]);
            let cx = WARP_CENTER.0 + rng.uniform_range(-CENTER_JITTER, CENTER_JITTER);
            let cy = WARP_CENTER.1 + rng.uniform_range(-CENTER_JITTER, CENTER_JITTER);
            warp_stencil(s, o, strength, (cx, cy))
        }
    };
    check_operator(&a)?;
    Ok(a)
}

fn warp_stencil(s: usize, o: usize, strength: f64, center: (f64, f64)) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(o * o, s * s);
    let sf = s as f64;
    let last = sf - 1.0;
    for i in 0..o {
        for j in 0..o {
            let px = (j as f64 + 0.5) / o as f64;
            let py = (i as f64 + 0.5) / o as f64;
            let (dx, dy) = (px - center.0, py - center.1);
            let r2 = dx * dx + dy * dy;
            let w = 1.0 - strength * (-r2 / (2.0 * WARP_WIDTH * WARP_WIDTH)).exp();
            let sx = ((center.0 + dx * w) * sf - 0.5).clamp(0.0, last);
            let sy = ((center.1 + dy * w) * sf - 0.5).clamp(0.0, last);
            let x0 = (sx.floor() as usize).min(s - 2);
            let y0 = (sy.floor() as usize).min(s - 2);
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let row = i * o + j;
            for (yy, xx, wt) in [
                (y0, x0, (1.0 - fx) * (1.0 - fy)),
                (y0, x0 + 1, fx * (1.0 - fy)),
                (y0 + 1, x0, (1.0 - fx) * fy),
                (y0 + 1, x0 + 1, fx * fy),
            ] {
                a[(row, yy * s + xx)] += wt;
            }
        }
    }
    a
}

/// Condition number of `a` from the eigenvalues of `aᵀa`.
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    let ata = a.transpose().matmul(a)?.symmetrized();
    let ev = ata.symmetric_eigen()?;
    let lo = ev.values[0];
    let hi = *ev.values.last().expect("nonempty operator");
    if lo <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((hi / lo).sqrt())
}

fn check_operator(a: &DenseMatrix) -> Result<()> {
    let cond = condition_number(a)?;
    if !(cond < MAX_CONDITION) {
        return Err(LensingError::Operator(format!(
            "operator is rank deficient or ill conditioned (condition number {cond:e}); try another seed"
        )));
    }
    Ok(())
}

/// Radial bump mean and squared-exponential covariance over the pixel grid.
/// The correlation length is `kernel_scale * side` pixels.
pub fn build_prior(side: usize, kernel_scale: f64) -> Result<(Vec<f64>, DenseMatrix)> {
    if !(kernel_scale.is_finite() && kernel_scale > 0.0) {
        return Err(LensingError::Prior(format!(
            "kernel scale must be > 0, got {kernel_scale}"
        )));
    }
    let d = side * side;
    let sf = side as f64;
    let coord = |k: usize| ((k / side) as f64, (k % side) as f64);
    let mean = (0..d)
        .map(|k| {
            let (r, c) = coord(k);
            let (u, v) = ((r + 0.5) / sf - 0.5, (c + 0.5) / sf - 0.5);
            (-(u * u + v * v) / (2.0 * WARP_WIDTH * WARP_WIDTH)).exp()
        })
        .collect();
    let ell = kernel_scale * sf;
    let cov = DenseMatrix::from_fn(d, d, |i, j| {
        let ((ri, ci), (rj, cj)) = (coord(i), coord(j));
        let d2 = (ri - rj).powi(2) + (ci - cj).powi(2);
        let k = (-d2 / (2.0 * ell * ell)).exp();
        if i == j {
            k + PRIOR_JITTER
        } else {
            k
        }
    });
    CholeskyFactor::new(&cov).map_err(|e| LensingError::Prior(e.to_string()))?;
    Ok((mean, cov))
}

/// Linear-Gaussian inverse problem `x = Aθ + ε`, `θ ~ N(μ₀, Σ₀)`,
/// `ε ~ N(0, σ_n² I)`, with the factorizations the samplers share.
#[derive(Debug, Clone)]
pub struct LensingModel {
    a: DenseMatrix,
    sigma_n: f64,
    mu0: Vec<f64>,
    sigma0: DenseMatrix,
    sigma0_chol: CholeskyFactor,
    sigma0_eigen: SymmetricEigen,
    ata_chol: CholeskyFactor,
    /// `σ_n² (AᵀA)⁻¹`, the inverse of the likelihood precision in θ.
    g_inv: DenseMatrix,
}

impl LensingModel {
    pub fn new(config: &LensingConfig) -> Result<Self> {
        let a = build_operator(config.source_side, config.obs_side, config.operator, config.seed)?;
        let (mu0, sigma0) = build_prior(config.source_side, config.kernel_scale)?;
        Self::from_parts(a, config.sigma_n, mu0, sigma0)
    }

    pub fn from_parts(
        a: DenseMatrix,
        sigma_n: f64,
        mu0: Vec<f64>,
        sigma0: DenseMatrix,
    ) -> Result<Self> {
        let d = a.cols();
        if mu0.len() != d || sigma0.rows() != d || !sigma0.is_square() {
            return Err(LensingError::Prior(format!(
                "operator has {d} columns, prior mean {} and covariance {}x{}",
                mu0.len(),
                sigma0.rows(),
                sigma0.cols()
            )));
        }
        if !(sigma_n.is_finite() && sigma_n >= 0.0) {
            return Err(LensingError::Operator(format!(
                "noise level must be finite and >= 0, got {sigma_n}"
            )));
        }
        let sigma0 = sigma0.symmetrized();
        let sigma0_chol =
            CholeskyFactor::new(&sigma0).map_err(|e| LensingError::Prior(e.to_string()))?;
        let sigma0_eigen = sigma0.symmetric_eigen()?;
        let ata = a.transpose().matmul(&a)?.symmetrized();
        let ata_chol = CholeskyFactor::new(&ata)
            .map_err(|e| LensingError::Operator(format!("AᵀA is singular: {e}")))?;
        let g_inv = ata_chol.inverse().scaled(sigma_n * sigma_n);
        Ok(Self {
            a,
            sigma_n,
            mu0,
            sigma0,
            sigma0_chol,
            sigma0_eigen,
            ata_chol,
            g_inv,
        })
    }

    pub fn dim_theta(&self) -> usize {
        self.a.cols()
    }

    pub fn dim_x(&self) -> usize {
        self.a.rows()
    }

    pub fn operator(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn prior_mean(&self) -> &[f64] {
        &self.mu0
    }

    pub fn prior_cov(&self) -> &DenseMatrix {
        &self.sigma0
    }

    pub fn prior_chol(&self) -> &CholeskyFactor {
        &self.sigma0_chol
    }

    pub(crate) fn prior_eigen(&self) -> &SymmetricEigen {
        &self.sigma0_eigen
    }

    pub(crate) fn g_inv(&self) -> &DenseMatrix {
        &self.g_inv
    }

    /// `θ ~ N(μ₀, Σ₀)`, `x = Aθ + σ_n ε`.
    pub fn simulate(&self, rng: &mut SeededRng) -> (Vec<f64>, Vec<f64>) {
        let theta = self.sample_prior(rng);
        let mut x = self.a.matvec(&theta).expect("operator shape");
        for v in &mut x {
            *v += self.sigma_n * rng.standard_normal();
        }
        (theta, x)
    }

    pub fn sample_prior(&self, rng: &mut SeededRng) -> Vec<f64> {
        crate::numerics::mvn_sample(&self.mu0, self.sigma0_chol.l(), rng).expect("prior shape")
    }

    /// Least-squares source `(AᵀA)⁻¹Aᵀx`; the likelihood depends on `x` only
    /// through it.
    pub fn x_hat(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim_x() {
            return Err(LensingError::Dimension(format!(
                "observation has {} pixels, model expects {}",
                x.len(),
                self.dim_x()
            )));
        }
        Ok(self.ata_chol.solve(&self.a.matvec_transposed(x)?))
    }

    /// Exact posterior `N(mean, cov)` with `cov = (Σ₀⁻¹ + AᵀA/σ_n²)⁻¹`.
    pub fn conjugate_posterior(&self, x: &[f64]) -> Result<(Vec<f64>, DenseMatrix)> {
        let s2 = self.sigma_n * self.sigma_n;
        let prec0 = self.sigma0_eigen.reconstruct_with(|l| 1.0 / l);
        let ata = self.a.transpose().matmul(&self.a)?;
        let prec = prec0.add(&ata.scaled(1.0 / s2))?.symmetrized();
        let cov = CholeskyFactor::new(&prec)?.inverse();
        let mut rhs = prec0.matvec(&self.mu0)?;
        for (r, v) in rhs.iter_mut().zip(self.a.matvec_transposed(x)?) {
            *r += v / s2;
        }
        let mean = cov.matvec(&rhs)?;
        Ok((mean, cov))
    }
}

impl ParameterPrior for LensingModel {
    fn dim(&self) -> usize {
        self.dim_theta()
    }

    fn draw(&self, rng: &mut SeededRng) -> Vec<f64> {
        self.sample_prior(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_option() {
        let a = build_operator(4, 4, OperatorKind::Identity, 0).unwrap();
        assert_eq!(a, DenseMatrix::identity(16));
        assert!(build_operator(4, 8, OperatorKind::Identity, 0).is_err());
    }

    #[test]
    fn warp_rows_are_convex() {
        let a = build_operator(8, 16, OperatorKind::Warp { strength: 0.35 }, 5).unwrap();
        for i in 0..a.rows() {
            let row = a.row(i);
            assert!(row.iter().all(|&w| w >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().filter(|&&w| w > 0.0).count() <= 4);
        }
        let cond = condition_number(&a).unwrap();
        assert!(cond.is_finite() && cond < 10.0, "{cond}");
    }

    #[test]
    fn operator_depends_on_seed() {
        let k = OperatorKind::Warp { strength: 0.35 };
        assert_eq!(build_operator(8, 16, k, 1).unwrap(), build_operator(8, 16, k, 1).unwrap());
        assert_ne!(build_operator(8, 16, k, 1).unwrap(), build_operator(8, 16, k, 2).unwrap());
    }

    #[test]
    fn prior_kernel_limit() {
        let (_, cov) = build_prior(4, 1e-6).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                if i == j {
                    assert!((cov[(i, j)] - (1.0 + 1e-4)).abs() < 1e-15);
                } else {
                    assert!(cov[(i, j)] < 1e-8);
                }
            }
        }
        assert!(build_prior(4, 0.0).is_err());
    }

    #[test]
    fn prior_is_symmetric_at_paper_scale() {
        let (_, cov) = build_prior(16, 0.5).unwrap();
        assert_eq!(cov, cov.transpose());
    }

    #[test]
    fn conjugate_identity_case() {
        let m = LensingModel::from_parts(
            DenseMatrix::identity(3),
            1.0,
            vec![0.0; 3],
            DenseMatrix::identity(3),
        )
        .unwrap();
        let x = [1.0, -2.0, 0.5];
        let (mean, cov) = m.conjugate_posterior(&x).unwrap();
        for i in 0..3 {
            assert!((mean[i] - x[i] / 2.0).abs() < 1e-14);
            for j in 0..3 {
                let e = if i == j { 0.5 } else { 0.0 };
                assert!((cov[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn noiseless_identity_simulation() {
        let m = LensingModel::from_parts(
            DenseMatrix::identity(4),
            0.0,
            vec![0.0; 4],
            DenseMatrix::identity(4),
        )
        .unwrap();
        let (theta, x) = m.simulate(&mut SeededRng::new(1, 0));
        assert_eq!(theta, x);
    }
}
