use std::sync::Arc;

use drpkit_core::coverage::{
    credibility_grid, drp_rank, drp_test, ecp_curve, hpd_rank, hpd_test, region_membership_ecp,
    CoverageSettings, Euclidean, JointSampleSet, MembershipInput, MethodTag, PosteriorSampler,
    RankStatistic, Result, Simulation, UnitHypercubeUniform, WeightedEuclidean,
};
use drpkit_core::numerics::{ks_uniform_statistic, norm_logpdf, DenseMatrix, SeededRng};

/// KS threshold for 10⁴ draws; the null exceedance probability is below 1e-3.
const KS_1E4: f64 = 0.0195;

/// 1-D Gaussian `N(x[0], sd²)`.
struct Gaussian1d {
    sd: f64,
}

impl PosteriorSampler for Gaussian1d {
    fn name(&self) -> String {
        "gauss1d".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, x: &[f64], n: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
        Ok(DenseMatrix::from_fn(n, 1, |_, _| x[0] + self.sd * rng.standard_normal()))
    }

    fn has_density(&self) -> bool {
        true
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> Option<f64> {
        Some(norm_logpdf((theta[0] - x[0]) / self.sd))
    }
}

/// Truth ~ N(x, 1) with x ~ N(0, 4): the posterior of θ given x is N(x, 1).
fn gaussian_dataset(n_sims: usize, seed: u64) -> JointSampleSet {
    let mut rng = SeededRng::new(seed, 99);
    let sims = (0..n_sims)
        .map(|i| {
            let x = 2.0 * rng.standard_normal();
            Simulation {
                sim_id: i,
                theta: vec![x + rng.standard_normal()],
                x: vec![x],
            }
        })
        .collect();
    JointSampleSet::new(1, sims).unwrap()
}

/// Randomizes the discrete rank `k/n` to a continuous uniform under the null.
fn jittered(ranks: &[RankStatistic], rng: &mut SeededRng) -> Vec<f64> {
    ranks
        .iter()
        .map(|r| (r.count as f64 + rng.uniform()) / (r.n_samples as f64 + 1.0))
        .collect()
}

#[test]
fn drp_rank_is_uniform_for_matched_truth() {
    let mut rng = SeededRng::new(21, 0);
    let n = 20;
    let ranks: Vec<_> = (0..10_000)
        .map(|_| {
            let s = DenseMatrix::from_fn(n, 1, |_, _| rng.standard_normal());
            let truth = [rng.standard_normal()];
            drp_rank(&s, &truth, &[0.7], &Euclidean).unwrap()
        })
        .collect();
    let ks = ks_uniform_statistic(&jittered(&ranks, &mut rng)).unwrap();
    assert!(ks < KS_1E4, "ks = {ks}");
}

#[test]
fn hpd_rank_is_uniform_for_matched_truth() {
    let mut rng = SeededRng::new(22, 0);
    let n = 20;
    let ranks: Vec<_> = (0..10_000)
        .map(|_| {
            let dens: Vec<f64> = (0..n).map(|_| norm_logpdf(rng.standard_normal()).exp()).collect();
            hpd_rank(&dens, norm_logpdf(rng.standard_normal()).exp()).unwrap()
        })
        .collect();
    let ks = ks_uniform_statistic(&jittered(&ranks, &mut rng)).unwrap();
    assert!(ks < KS_1E4, "ks = {ks}");
}

#[test]
fn uniform_ranks_stay_in_band() {
    let mut rng = SeededRng::new(5, 0);
    let n = 1000;
    let ranks = (0..500)
        .map(|i| RankStatistic {
            sim_id: i,
            count: rng.index(n + 1),
            n_samples: n,
            theta_r: None,
        })
        .collect();
    let c = ecp_curve(MethodTag::Drp, ranks, &credibility_grid(101), 500, n, 3.0).unwrap();
    assert!(c.fraction_in_band() >= 0.99, "{}", c.fraction_in_band());
}

fn drp(ds: &JointSampleSet, est: &dyn PosteriorSampler, settings: &CoverageSettings) -> Vec<f64> {
    drp_test(
        ds,
        &est,
        Arc::new(UnitHypercubeUniform),
        Arc::new(Euclidean),
        None,
        settings,
    )
    .unwrap()
    .ecp
}

#[test]
fn calibrated_1d_estimator_is_diagonal() {
    let ds = gaussian_dataset(500, 3);
    let settings = CoverageSettings::new(200, 17);
    let est = Gaussian1d { sd: 1.0 };
    let curve = drp_test(
        &ds,
        &est,
        Arc::new(UnitHypercubeUniform),
        Arc::new(Euclidean),
        None,
        &settings,
    )
    .unwrap();
    assert!(curve.fraction_in_band() >= 0.98, "{}", curve.fraction_in_band());
    let hpd = hpd_test(&ds, Arc::new(est), &settings).unwrap();
    assert!(hpd.fraction_in_band() >= 0.98, "{}", hpd.fraction_in_band());
}

#[test]
fn underconfident_1d_estimator_bows_above_the_diagonal() {
    let ds = gaussian_dataset(500, 4);
    let settings = CoverageSettings::new(200, 18);
    let wide = drp(&ds, &Gaussian1d { sd: 2.0 }, &settings);
    // Truth sits near the middle of a too-wide cloud, so f clusters at 0.5:
    // ecp is below c at low levels and above it at high ones.
    assert!(wide[70] > 0.70 && wide[90] > 0.90, "{} {}", wide[70], wide[90]);
    assert!(wide[30] < 0.30, "{}", wide[30]);
}

#[test]
fn drp_is_deterministic_and_order_independent() {
    let ds = gaussian_dataset(60, 6);
    let est = Gaussian1d { sd: 1.3 };
    let settings = CoverageSettings::new(40, 123);
    let a = drp(&ds, &est, &settings);
    let b = drp(&ds, &est, &settings);
    assert_eq!(a, b);
    let order: Vec<usize> = (0..60).rev().collect();
    let shuffled = ds.reordered(&order).unwrap();
    assert_eq!(a, drp(&shuffled, &est, &settings));
    let other_seed = drp(&ds, &est, &CoverageSettings::new(40, 124));
    assert_ne!(a, other_seed);
}

#[test]
fn weighted_metric_keeps_optimal_curve_in_band() {
    let mut rng = SeededRng::new(8, 0);
    let sims = (0..500)
        .map(|i| {
            let x = vec![rng.standard_normal(), rng.standard_normal()];
            Simulation {
                sim_id: i,
                theta: vec![x[0] + 0.5 * rng.standard_normal(), x[1] + 0.5 * rng.standard_normal()],
                x,
            }
        })
        .collect();
    let ds = JointSampleSet::new(2, sims).unwrap();
    struct Iso;
    impl PosteriorSampler for Iso {
        fn name(&self) -> String {
            "iso".into()
        }
        fn dim(&self) -> usize {
            2
        }
        fn sample(&self, x: &[f64], n: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
            Ok(DenseMatrix::from_fn(n, 2, |_, j| x[j] + 0.5 * rng.standard_normal()))
        }
    }
    let c = drp_test(
        &ds,
        &Iso,
        Arc::new(UnitHypercubeUniform),
        Arc::new(WeightedEuclidean::new(vec![0.1, 7.0]).unwrap()),
        None,
        &CoverageSettings::new(200, 31),
    )
    .unwrap();
    assert!(c.fraction_in_band() >= 0.98, "{}", c.fraction_in_band());
}

#[test]
fn rank_path_matches_region_membership() {
    let mut rng = SeededRng::new(77, 0);
    for n in [1, 7, 50] {
        let n_sims = 40;
        let samples: Vec<DenseMatrix> = (0..n_sims)
            .map(|_| DenseMatrix::from_fn(n, 2, |_, _| rng.uniform()))
            .collect();
        let truths: Vec<Vec<f64>> = (0..n_sims).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
        let refs: Vec<Vec<f64>> = (0..n_sims).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
        let ranks = (0..n_sims)
            .map(|i| drp_rank(&samples[i], &truths[i], &refs[i], &Euclidean).unwrap())
            .collect();
        let levels: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
        let curve = ecp_curve(MethodTag::Drp, ranks, &levels, n_sims, n, 3.0).unwrap();
        let inputs: Vec<_> = (0..n_sims)
            .map(|i| MembershipInput::Drp {
                samples: &samples[i],
                theta_true: &truths[i],
                theta_r: &refs[i],
                metric: &Euclidean,
            })
            .collect();
        let oracle = region_membership_ecp(&inputs, &levels).unwrap();
        for (a, b) in curve.ecp.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1.0 / n as f64 + 1e-12, "n={n}: {a} vs {b}");
        }
        if n == 1 {
            assert_eq!(curve.ecp, oracle);
        }
    }
}
