use std::sync::Arc;

use proptest::prelude::*;

use wrates::experiments::{estimate_mean_wp, fit_rate, ExperimentConfig, Source};
use wrates::measures::{DiscreteMeasure, MetricSpace, Sampler, SamplerKind};

#[test]
fn stderr_scales_with_replicates() {
    let space = Arc::new(MetricSpace::euclidean(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap());
    let law = DiscreteMeasure::uniform(space).unwrap();
    let s = Sampler::new(SamplerKind::FiniteSupport(law.clone()), 0).unwrap();
    let small = estimate_mean_wp(Source::Sampler(&s), &law, 1.0, 5, 100, 3).unwrap();
    let large = estimate_mean_wp(Source::Sampler(&s), &law, 1.0, 5, 10_000, 3).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!((ratio - 10.0).abs() < 2.0, "{ratio}");
}

#[test]
fn loads_toml_and_json_files() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("c.toml");
    std::fs::write(
        &toml_path,
        "p = 2.0\nn_grid = [4, 8, 16]\nreplicates = 3\nseed = 0\n[scenario]\nkind = \"iid_cube\"\ndim = 5\n",
    )
    .unwrap();
    let c = ExperimentConfig::load(&toml_path).unwrap();
    let json_path = dir.path().join("c.json");
    std::fs::write(&json_path, serde_json::to_string(&c).unwrap()).unwrap();
    let d = ExperimentConfig::load(&json_path).unwrap();
    assert_eq!(c.hash(), d.hash());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_power_laws(slope in -2.0f64..0.5, c in 0.01f64..100.0, start in 1usize..50, k in 3usize..10) {
        let grid: Vec<usize> = (0..k).map(|i| start << i).collect();
        let means: Vec<f64> = grid.iter().map(|&n| c * (n as f64).powf(slope)).collect();
        let f = fit_rate(&grid, &means).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-8);
        prop_assert!(f.slope_ci.0 <= f.slope_ci.1);
    }

    #[test]
    fn ci_well_ordered(noise in proptest::collection::vec(0.5f64..2.0, 5)) {
        let grid = [10, 20, 40, 80, 160];
        let means: Vec<f64> = grid.iter().zip(&noise).map(|(&n, e)| e / (n as f64).sqrt()).collect();
        let f = fit_rate(&grid, &means).unwrap();
        prop_assert!(f.slope_ci.0 <= f.slope && f.slope <= f.slope_ci.1);
        prop_assert!(f.intercept_ci.0 <= f.intercept && f.intercept <= f.intercept_ci.1);
    }

    #[test]
    fn hash_is_stable(seed in any::<u64>(), reps in 1usize..1000, dim in 1usize..6) {
        let text = format!("p = 1.0\nn_grid = [2, 4, 8]\nreplicates = {reps}\nseed = {seed}\n[scenario]\nkind = \"iid_cube\"\ndim = {dim}\n");
        let a = ExperimentConfig::from_toml(&text).unwrap();
        let b = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.replicates += 1;
        prop_assert_ne!(a.hash(), c.hash());
    }
}
