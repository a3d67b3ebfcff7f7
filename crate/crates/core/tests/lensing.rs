use std::sync::Arc;

use drpkit_core::lensing::{
    likelihood_score, prior_score, LensingConfig, LensingModel, ReverseSdeSampler, ScoreKind,
    VeSchedule,
};
use drpkit_core::numerics::{CholeskyFactor, DenseMatrix, SeededRng};

fn model() -> LensingModel {
    LensingModel::new(&LensingConfig::new(8, 3)).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

fn inverse(m: &DenseMatrix) -> DenseMatrix {
    CholeskyFactor::new(&m.symmetrized()).unwrap().inverse()
}

/// `log N(v | mean, cov)` up to a constant.
fn gauss_log_pdf(chol: &CholeskyFactor, v: &[f64], mean: &[f64]) -> f64 {
    let d: Vec<f64> = v.iter().zip(mean).map(|(a, b)| a - b).collect();
    -0.5 * chol.solve_lower(&d).iter().map(|x| x * x).sum::<f64>()
}

fn central_diff(f: &dyn Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut p = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            p[i] = theta[i] + h;
            let up = f(&p);
            p[i] = theta[i] - h;
            let down = f(&p);
            p[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Observation-space time-`t` log likelihood, built without any of the
/// library's θ-space reductions.
fn log_likelihood(m: &LensingModel, kind: ScoreKind, sigma_t: f64, x: &[f64]) -> Box<dyn Fn(&[f64]) -> f64> {
    let a = m.operator().clone();
    let at = a.transpose();
    let s2 = sigma_t * sigma_t;
    let sn2 = m.sigma_n().powi(2);
    let x = x.to_vec();
    match kind {
        ScoreKind::Biased => {
            let cov = a.matmul(&at).unwrap().scaled(s2).with_added_diagonal(sn2);
            let chol = CholeskyFactor::new(&cov.symmetrized()).unwrap();
            Box::new(move |t: &[f64]| gauss_log_pdf(&chol, &x, &a.matvec(t).unwrap()))
        }
        ScoreKind::Exact => {
            let prec0 = inverse(m.prior_cov());
            let sigma_c = inverse(&prec0.with_added_diagonal(1.0 / s2));
            let cov = a.matmul(&sigma_c).unwrap().matmul(&at).unwrap().with_added_diagonal(sn2);
            let chol = CholeskyFactor::new(&cov.symmetrized()).unwrap();
            let base = prec0.matvec(m.prior_mean()).unwrap();
            Box::new(move |t: &[f64]| {
                // θ_c(θ) = Σ_c (Σ₀⁻¹ μ₀ + θ / σ_t²)
                let rhs: Vec<f64> = base.iter().zip(t).map(|(b, v)| b + v / s2).collect();
                let theta_c = sigma_c.matvec(&rhs).unwrap();
                gauss_log_pdf(&chol, &x, &a.matvec(&theta_c).unwrap())
            })
        }
    }
}

fn log_prior_t(m: &LensingModel, sigma_t: f64) -> Box<dyn Fn(&[f64]) -> f64> {
    let cov = m.prior_cov().with_added_diagonal(sigma_t * sigma_t);
    let chol = CholeskyFactor::new(&cov).unwrap();
    let mu = m.prior_mean().to_vec();
    Box::new(move |t: &[f64]| gauss_log_pdf(&chol, t, &mu))
}

fn random_case(m: &LensingModel, rng: &mut SeededRng) -> (Vec<f64>, Vec<f64>) {
    let (truth, x) = m.simulate(rng);
    // Evaluate away from the truth so the gradient is not tiny.
    let theta = truth.iter().map(|v| v + 0.3 * rng.standard_normal()).collect();
    (theta, x)
}

#[test]
fn scores_match_finite_differences() {
    let m = model();
    let sched = VeSchedule::default();
    let mut rng = SeededRng::new(40, 0);
    for k in 0..6 {
        let t = [0.05, 0.5, 1.0, 0.2, 0.8, 0.35][k];
        let s = sched.sigma_t(t).unwrap();
        let (theta, x) = random_case(&m, &mut rng);
        let fd = central_diff(&*log_prior_t(&m, s), &theta, 1e-3);
        let an = prior_score(&m, &sched, &theta, t).unwrap();
        assert!(rel_err(&an, &fd) < 1e-5, "prior t={t}: {}", rel_err(&an, &fd));
        for kind in [ScoreKind::Biased, ScoreKind::Exact] {
            let fd = central_diff(&*log_likelihood(&m, kind, s, &x), &theta, 1e-3);
            let an = likelihood_score(&m, &sched, kind, &theta, &x, t).unwrap();
            assert!(rel_err(&an, &fd) < 1e-5, "{kind} t={t}: {}", rel_err(&an, &fd));
        }
    }
}

#[test]
fn prior_score_vanishes_at_mean() {
    let m = model();
    let s = prior_score(&m, &VeSchedule::default(), m.prior_mean(), 0.3).unwrap();
    assert!(s.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn prior_score_dominant_noise_limit() {
    let m = model();
    let mut rng = SeededRng::new(41, 0);
    let (theta, _) = random_case(&m, &mut rng);
    let limit = |s: f64| -> Vec<f64> {
        theta.iter().zip(m.prior_mean()).map(|(a, b)| -(a - b) / (s * s)).collect()
    };
    // The deviation from the limit is about λ_max(Σ₀)/σ², so the 1e-8 target
    // needs σ_max well above the prior scale.
    let lam_max = *m.prior_cov().symmetric_eigen().unwrap().values.last().unwrap();
    for sigma_max in [1e4, 1e6] {
        let sched = VeSchedule::new(0.01, sigma_max, 300).unwrap();
        let err = rel_err(&prior_score(&m, &sched, &theta, 1.0).unwrap(), &limit(sigma_max));
        assert!(err <= 1.01 * lam_max / sigma_max.powi(2), "{sigma_max}: {err}");
        if sigma_max >= 1e6 {
            assert!(err < 1e-8, "{err}");
        }
    }
}

#[test]
fn small_noise_limit_of_likelihoods() {
    let m = model();
    let sched = VeSchedule::new(1e-6, 100.0, 300).unwrap();
    let mut rng = SeededRng::new(42, 0);
    let (theta, x) = random_case(&m, &mut rng);
    let e = likelihood_score(&m, &sched, ScoreKind::Exact, &theta, &x, 1e-4).unwrap();
    let b = likelihood_score(&m, &sched, ScoreKind::Biased, &theta, &x, 1e-4).unwrap();
    assert!(rel_err(&e, &b) < 1e-6, "{}", rel_err(&e, &b));
    // t = 0 uses the noiseless likelihood for both kinds.
    let e0 = likelihood_score(&m, &sched, ScoreKind::Exact, &theta, &x, 0.0).unwrap();
    let b0 = likelihood_score(&m, &sched, ScoreKind::Biased, &theta, &x, 0.0).unwrap();
    assert_eq!(e0, b0);
    assert!(rel_err(&e, &e0) < 1e-5);
}

#[test]
fn posterior_score_consistency_near_zero() {
    let m = model();
    let sched = VeSchedule::new(1e-7, 100.0, 300).unwrap();
    let mut rng = SeededRng::new(43, 0);
    let (theta, x) = random_case(&m, &mut rng);
    let joint = {
        let prior = log_prior_t(&m, 0.0);
        let a = m.operator().clone();
        let sn2 = m.sigma_n().powi(2);
        let x = x.clone();
        move |t: &[f64]| {
            let r = a.matvec(t).unwrap();
            prior(t) - 0.5 * x.iter().zip(&r).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / sn2
        }
    };
    let fd = central_diff(&joint, &theta, 1e-3);
    for t in [0.0, 1e-4] {
        let p = prior_score(&m, &sched, &theta, t).unwrap();
        let l = likelihood_score(&m, &sched, ScoreKind::Exact, &theta, &x, t).unwrap();
        let total: Vec<f64> = p.iter().zip(&l).map(|(a, b)| a + b).collect();
        assert!(rel_err(&total, &fd) < 1e-5, "t={t}: {}", rel_err(&total, &fd));
    }
}

#[test]
fn exact_and_biased_differ_at_mid_time() {
    let m = model();
    let sched = VeSchedule::default();
    let mut rng = SeededRng::new(44, 0);
    for _ in 0..5 {
        let (theta, x) = random_case(&m, &mut rng);
        let e = likelihood_score(&m, &sched, ScoreKind::Exact, &theta, &x, 0.5).unwrap();
        let b = likelihood_score(&m, &sched, ScoreKind::Biased, &theta, &x, 0.5).unwrap();
        assert!(rel_err(&e, &b) > 1e-3, "{}", rel_err(&e, &b));
    }
}

#[test]
fn conjugate_posterior_is_stationary() {
    let m = model();
    let (_, x) = m.simulate(&mut SeededRng::new(45, 0));
    let (mean, _) = m.conjugate_posterior(&x).unwrap();
    let prec0 = inverse(m.prior_cov());
    let d: Vec<f64> = mean.iter().zip(m.prior_mean()).map(|(a, b)| a - b).collect();
    let prior_part = prec0.matvec(&d).unwrap();
    let a = m.operator();
    let r: Vec<f64> = x.iter().zip(a.matvec(&mean).unwrap()).map(|(u, v)| u - v).collect();
    let lik_part = a.matvec_transposed(&r).unwrap();
    let grad_max = prior_part
        .iter()
        .zip(&lik_part)
        .map(|(p, l)| (l / m.sigma_n().powi(2) - p).abs())
        .fold(0.0, f64::max);
    assert!(grad_max < 1e-8, "{grad_max}");
}

#[test]
fn huge_noise_recovers_prior() {
    let mut cfg = LensingConfig::new(8, 3);
    cfg.sigma_n = 1e6;
    let m = LensingModel::new(&cfg).unwrap();
    // An order-one observation: simulating under σ_n = 1e6 would move the
    // exact posterior mean by about λ_max/σ_n.
    let (_, x) = model().simulate(&mut SeededRng::new(46, 0));
    let (mean, cov) = m.conjugate_posterior(&x).unwrap();
    let diff = cov.sub(m.prior_cov()).unwrap();
    assert!(diff.frobenius_norm() < 1e-6 * m.prior_cov().frobenius_norm());
    assert!(rel_err(&mean, m.prior_mean()) < 1e-6);
}

#[test]
fn simulation_moments() {
    let m = model();
    let n = 10_000;
    let d = m.dim_theta();
    let mut rng = SeededRng::new(47, 0);
    let mut sum_sq_resid = vec![0.0; m.dim_x()];
    let mut thetas = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let (theta, x) = m.simulate(&mut rng);
        let ax = m.operator().matvec(&theta).unwrap();
        for (s, (a, b)) in sum_sq_resid.iter_mut().zip(x.iter().zip(&ax)) {
            *s += (a - b).powi(2);
        }
        thetas.row_mut(i).copy_from_slice(&theta);
    }
    for s in &sum_sq_resid {
        let sd = (s / n as f64).sqrt();
        assert!((sd - 1.0).abs() < 0.03, "{sd}");
    }
    let cov = sample_cov(&thetas);
    let err = cov.sub(m.prior_cov()).unwrap().frobenius_norm() / m.prior_cov().frobenius_norm();
    assert!(err < 0.1, "{err}");
}

fn sample_cov(s: &DenseMatrix) -> DenseMatrix {
    let (n, d) = (s.rows(), s.cols());
    let mean: Vec<f64> = (0..d).map(|j| s.column(j).iter().sum::<f64>() / n as f64).collect();
    DenseMatrix::from_fn(d, d, |a, b| {
        (0..n).map(|i| (s[(i, a)] - mean[a]) * (s[(i, b)] - mean[b])).sum::<f64>() / (n - 1) as f64
    })
}

#[test]
fn discretized_exact_chain_matches_conjugate() {
    let m = Arc::new(model());
    let (_, x) = m.simulate(&mut SeededRng::new(48, 0));
    let (pm, pc) = m.conjugate_posterior(&x).unwrap();
    let s300 = ReverseSdeSampler::new(m.clone(), VeSchedule::default(), ScoreKind::Exact).unwrap();
    let (mean, cov) = s300.discretized_moments(&x).unwrap();
    let cov_err = cov.sub(&pc).unwrap().frobenius_norm() / pc.frobenius_norm();
    assert!(cov_err < 0.01, "{cov_err}");
    let se: Vec<f64> = pc.diagonal().iter().map(|v| (v / 2000.0).sqrt()).collect();
    for i in 0..mean.len() {
        assert!((mean[i] - pm[i]).abs() < 0.5 * se[i], "coord {i}");
    }
    // Doubling the step count moves the means by far less than the Monte
    // Carlo error of a 2000-draw estimate.
    let sched600 = VeSchedule::new(0.01, 100.0, 600).unwrap();
    let s600 = ReverseSdeSampler::new(m.clone(), sched600, ScoreKind::Exact).unwrap();
    let (mean600, _) = s600.discretized_moments(&x).unwrap();
    for i in 0..mean.len() {
        assert!((mean600[i] - mean[i]).abs() < se[i], "coord {i}");
    }
}

#[test]
fn biased_chain_mean_is_detectably_off() {
    let m = Arc::new(model());
    let (_, x) = m.simulate(&mut SeededRng::new(49, 0));
    let (pm, pc) = m.conjugate_posterior(&x).unwrap();
    let s = ReverseSdeSampler::new(m.clone(), VeSchedule::default(), ScoreKind::Biased).unwrap();
    let draws = s.sample_many(&x, 2000, &mut SeededRng::new(50, 0)).unwrap();
    let d = m.dim_theta();
    let mean: Vec<f64> = (0..d).map(|j| draws.column(j).iter().sum::<f64>() / 2000.0).collect();
    let diff: Vec<f64> = mean.iter().zip(&pm).map(|(a, b)| a - b).collect();
    let maha = 2000.0 * {
        let c = CholeskyFactor::new(&pc).unwrap();
        c.solve_lower(&diff).iter().map(|v| v * v).sum::<f64>()
    };
    // 99th percentile of χ²(64).
    assert!(maha > 93.22, "{maha}");
}

#[test]
fn uninformative_likelihood_returns_prior() {
    let mut cfg = LensingConfig::new(8, 3);
    cfg.sigma_n = 1e6;
    let m = Arc::new(LensingModel::new(&cfg).unwrap());
    let (_, x) = m.simulate(&mut SeededRng::new(51, 0));
    let s = ReverseSdeSampler::new(m.clone(), VeSchedule::default(), ScoreKind::Exact).unwrap();
    let n = 2000;
    let draws = s.sample_many(&x, n, &mut SeededRng::new(52, 0)).unwrap();
    let var = m.prior_cov().diagonal();
    for j in 0..m.dim_theta() {
        let mean = draws.column(j).iter().sum::<f64>() / n as f64;
        let se = (var[j] / n as f64).sqrt();
        assert!((mean - m.prior_mean()[j]).abs() < 3.0 * se, "coord {j}");
    }
}
