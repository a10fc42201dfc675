use std::f64::consts::PI;

use proptest::prelude::*;

use wrates::gaussian::{
    brownian_truncation_deficit, check_doubling, lloyd_quantizer, small_ball_curve, GaussianProcessModel,
};
use wrates::measures::Sampler;

/// `P(sup_{[0,1]} |B_t| <= t)` from the alternating eigenfunction series.
fn brownian_small_ball(t: f64) -> f64 {
    (0..200)
        .map(|k| {
            let m = (2 * k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / m * (-(m * m) * PI * PI / (8.0 * t * t)).exp()
        })
        .sum::<f64>()
        * 4.0
        / PI
}

#[test]
fn endpoint_variance_matches_truncation() {
    let m = GaussianProcessModel::brownian_kl(256, 256).unwrap();
    let mc = 20_000;
    let paths = m.sample_paths(mc, 12).unwrap();
    let ends: Vec<f64> = (0..mc).map(|i| paths.point(i)[255]).collect();
    let var = ends.iter().map(|x| x * x).sum::<f64>() / mc as f64;
    // Var of the sample second moment of N(0, s^2) is 2 s^4 / mc.
    let target = 1.0 - brownian_truncation_deficit(256);
    let se = (2.0 / mc as f64).sqrt() * target;
    assert!((var - target).abs() < 3.0 * se, "{var} vs {target} ± {se}");
}

#[test]
fn brownian_small_ball_against_series() {
    let m = GaussianProcessModel::brownian_kl(256, 256).unwrap();
    let ts = [0.5, 0.7, 1.0, 1.5];
    let est = small_ball_curve(&m, &ts, 20_000, 3).unwrap();
    for e in est {
        let exact = -brownian_small_ball(e.t).ln();
        // The grid maximum never exceeds the continuous one; shifting the
        // level by 0.5826 / sqrt(G) corrects for the grid to first order.
        let shifted = -brownian_small_ball(e.t + 0.5826 / 16.0).ln();
        assert!(e.psi_hat <= exact + 3.0 * e.stderr, "t = {}: {} vs {exact}", e.t, e.psi_hat);
        assert!(
            (e.psi_hat - shifted).abs() <= 0.08 * shifted + 3.0 * e.stderr,
            "t = {}: {} vs {shifted}",
            e.t,
            e.psi_hat
        );
    }
}

#[test]
fn brownian_doubling_near_four() {
    let m = GaussianProcessModel::brownian_kl(128, 128).unwrap();
    // Small radii only: far from zero psi decays faster than any power.
    let ts: Vec<f64> = (0..=6).map(|k| 0.42 * 2f64.powf(k as f64 / 4.0)).collect();
    let est = small_ball_curve(&m, &ts, 20_000, 5).unwrap();
    let psi: Vec<f64> = est.iter().map(|e| e.psi_hat).collect();
    let d = check_doubling(&ts, &psi).unwrap();
    assert!(d.kappa_hat > 3.0 && d.kappa_hat < 8.0, "{d:?}");
    assert_eq!(d.pairs, 3);
}

#[test]
fn quantizer_ordering_in_one_dimension() {
    // Lloyd from quantile starts is globally optimal in 1-D, so more centers never hurt.
    let s = Sampler::new(wrates::measures::SamplerKind::GaussianIid { variances: vec![1.0] }, 2)
        .unwrap()
        .sample_empirical(3000)
        .unwrap();
    let mut last = f64::INFINITY;
    for k in [1, 2, 3, 5, 8, 13, 21] {
        let d = lloyd_quantizer(&s, k, 300, 0).unwrap().delta_hat;
        assert!(d <= last + 1e-12);
        last = d;
    }
    assert!((lloyd_quantizer(&s, 1, 10, 0).unwrap().delta_hat - 1.0).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn small_ball_monotone(seed in any::<u64>(), k in 1usize..32) {
        let m = GaussianProcessModel::brownian_kl(k, 16).unwrap();
        let ts: Vec<f64> = (1..20).map(|i| i as f64 * 0.1).collect();
        let est = small_ball_curve(&m, &ts, 2000, seed).unwrap();
        prop_assert!(est.windows(2).all(|w| w[0].psi_hat >= w[1].psi_hat));
    }

    #[test]
    fn weak_variance_dominates_marginals(seed in any::<u64>(), k in 1usize..16, g in 1usize..16) {
        let m = GaussianProcessModel::brownian_kl(k, g).unwrap();
        let path = m.sample_path(seed);
        prop_assert_eq!(path.len(), g);
        for t in 0..g {
            let v: f64 = (0..k).map(|i| m.basis[i * g + t].powi(2)).sum();
            prop_assert!(v <= m.sigma_hat.powi(2) * (1.0 + 1e-12));
        }
    }
}
