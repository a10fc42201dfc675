use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{spectral_gap_finite, MarkovModel};
use crate::measures::{derive_seed, rng_from_seed, DiscreteMeasure, MetricKind, MetricSpace, Rng64};
use crate::{Error, Result};

fn row_samplers(model: &MarkovModel) -> Result<Vec<WeightedIndex<f64>>> {
    model
        .kernel()
        .row_iter()
        .map(|r| WeightedIndex::new(r.iter().copied()).map_err(|e| Error::Numeric(format!("kernel row: {e}"))))
        .collect()
}

fn trajectory(model: &MarkovModel, rows: &[WeightedIndex<f64>], n: usize, rng: &mut Rng64) -> Result<Vec<usize>> {
    let start = WeightedIndex::new(model.nu()).map_err(|e| Error::invalid(format!("initial law: {e}")))?;
    let mut x = start.sample(rng);
    Ok((0..n)
        .map(|_| {
            x = rows[x].sample(rng);
            x
        })
        .collect())
}

/// Visit frequencies of a trajectory as a measure on the model's states.
pub fn occupation_measure(model: &MarkovModel, trajectory: &[usize]) -> Result<DiscreteMeasure> {
    if trajectory.is_empty() {
        return Err(Error::invalid("empty trajectory"));
    }
    let mut counts = vec![0usize; model.len()];
    for &s in trajectory {
        *counts.get_mut(s).ok_or_else(|| Error::invalid(format!("state {s} out of range")))? += 1;
    }
    let n = trajectory.len() as f64;
    let dense: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    DiscreteMeasure::from_dense(model.space().clone(), &dense)
}

/// Simulates `X_1, ..., X_n` from `X_0 ~ nu` and returns the trajectory with
/// its occupation measure `L_n = (1/n) sum delta_{X_i}`.
pub fn run_chain(model: &MarkovModel, n: usize, seed: u64) -> Result<(Vec<usize>, DiscreteMeasure)> {
    if n == 0 {
        return Err(Error::invalid("chain length must be at least 1"));
    }
    let rows = row_samplers(model)?;
    let traj = trajectory(model, &rows, n, &mut rng_from_seed(seed))?;
    let occ = occupation_measure(model, &traj)?;
    Ok((traj, occ))
}

#[derive(Debug, Clone, Serialize)]
pub struct OccupationDeviation {
    /// Monte Carlo mean of `|(L_n - pi)(A)|`.
    pub mean: f64,
    pub stderr: f64,
    /// `n^{-1/2} (2 sqrt(2C) / sqrt(1 - lambda)) ‖d nu/d pi‖_r^{1/2} pi(A)^{1/2 - 1/2r}`
    /// with `C = 1` and the spectral `lambda`.
    pub bound: f64,
    pub lambda: f64,
    pub pi_a: f64,
    /// `mean <= bound + 3 stderr`.
    pub within_bound: bool,
}

/// Compares `E |(L_n - pi)(A)|` with its analytic bound for a reversible chain.
pub fn occupation_deviation(
    model: &MarkovModel,
    set: &[usize],
    n: usize,
    r: f64,
    replicates: usize,
    seed: u64,
) -> Result<OccupationDeviation> {
    if n == 0 || replicates == 0 {
        return Err(Error::invalid("n and replicates must be positive"));
    }
    let mut in_a = vec![false; model.len()];
    for &s in set {
        *in_a.get_mut(s).ok_or_else(|| Error::invalid(format!("state {s} out of range")))? = true;
    }
    let pi_a: f64 = model.pi().iter().zip(&in_a).filter(|(_, &a)| a).map(|(p, _)| p).sum();
    let lambda = spectral_gap_finite(model)?.lambda;
    if lambda >= 1.0 {
        return Err(Error::InapplicableRegime("spectral lambda is 1".into()));
    }
    let rn = model.radon_nikodym_norm(r)?;
    let bound =
        (n as f64).powf(-0.5) * 2.0 * 2f64.sqrt() / (1.0 - lambda).sqrt() * rn.sqrt() * pi_a.powf(0.5 - 0.5 / r);
    let rows = row_samplers(model)?;
    let devs: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let traj = trajectory(model, &rows, n, &mut rng_from_seed(derive_seed(seed, k as u64)))?;
            let hits = traj.iter().filter(|&&s| in_a[s]).count();
            Ok((hits as f64 / n as f64 - pi_a).abs())
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&devs);
    Ok(OccupationDeviation { mean, stderr, bound, lambda, pi_a, within_bound: mean <= bound + 3.0 * stderr })
}

pub(crate) fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

type LogDensity = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Gaussian random-walk Metropolis chain on `R^dim`.
///
/// Only a sampler for qualitative experiments: no spectral gap is available,
/// so none of the Markov bounds can be checked against it.
#[derive(Clone)]
pub struct RandomWalkMetropolis {
    pub dim: usize,
    pub step: f64,
    log_density: Arc<LogDensity>,
}

impl RandomWalkMetropolis {
    pub fn new(dim: usize, step: f64, log_density: Arc<LogDensity>) -> Result<Self> {
        if dim == 0 || !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("dimension and step must be positive"));
        }
        Ok(Self { dim, step, log_density })
    }

    /// `n` states after `x0`, as a Euclidean point set, with the acceptance rate.
    pub fn run(&self, x0: &[f64], n: usize, seed: u64) -> Result<(MetricSpace, f64)> {
        if x0.len() != self.dim || n == 0 {
            return Err(Error::invalid("start point dimension or chain length"));
        }
        let mut rng = rng_from_seed(seed);
        let mut x = x0.to_vec();
        let mut lx = (self.log_density)(&x);
        let mut y = vec![0.0; self.dim];
        let mut coords = Vec::with_capacity(n * self.dim);
        let mut accepted = 0usize;
        for _ in 0..n {
            for (yi, xi) in y.iter_mut().zip(&x) {
                let z: f64 = rng.sample(StandardNormal);
                *yi = xi + self.step * z;
            }
            let ly = (self.log_density)(&y);
            if rng.random::<f64>().ln() < ly - lx {
                std::mem::swap(&mut x, &mut y);
                lx = ly;
                accepted += 1;
            }
            coords.extend_from_slice(&x);
        }
        Ok((MetricSpace::from_flat(self.dim, coords, MetricKind::Euclidean)?, accepted as f64 / n as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::metropolis_on_grid;

    #[test]
    fn absorbing_state() {
        let space = Arc::new(MetricSpace::euclidean(vec![vec![0.0], vec![1.0]]).unwrap());
        let m = MarkovModel::from_rows(space, &[vec![1.0, 0.0], vec![1.0, 0.0]], true)
            .unwrap()
            .with_initial(vec![1.0, 0.0])
            .unwrap();
        let (traj, occ) = run_chain(&m, 50, 3).unwrap();
        assert!(traj.iter().all(|&s| s == 0));
        assert_eq!(occ.support(), &[0]);
        assert_eq!(occ.weights(), &[1.0]);
    }

    #[test]
    fn fair_two_state_frequencies() {
        let m = MarkovModel::two_state(0.5, 0.5).unwrap();
        let (_, occ) = run_chain(&m, 100_000, 11).unwrap();
        let d = occ.to_dense();
        assert!((d[0] - 0.5).abs() < 0.01 && (d[1] - 0.5).abs() < 0.01);
    }

    #[test]
    fn same_seed_same_path() {
        let m = metropolis_on_grid(8, |x| 1.0 + x * x, 1).unwrap();
        assert_eq!(run_chain(&m, 500, 9).unwrap().0, run_chain(&m, 500, 9).unwrap().0);
        assert_ne!(run_chain(&m, 500, 9).unwrap().0, run_chain(&m, 500, 10).unwrap().0);
    }

    #[test]
    fn full_set_has_no_deviation() {
        let m = metropolis_on_grid(8, |x| 1.0 + x, 1).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let d = occupation_deviation(&m, &all, 100, 2.0, 20, 1).unwrap();
        assert!(d.mean < 1e-12);
        assert!(d.within_bound);
    }

    #[test]
    fn iid_kernel_matches_binomial() {
        // E|Bin(n, 1/2)/n - 1/2| for n = 4 is 3/16.
        let space = Arc::new(MetricSpace::euclidean(vec![vec![0.0], vec![1.0]]).unwrap());
        let m = MarkovModel::iid(space, vec![0.5, 0.5]).unwrap();
        let d = occupation_deviation(&m, &[1], 4, f64::INFINITY, 40_000, 5).unwrap();
        assert!((d.mean - 3.0 / 16.0).abs() < 4.0 * d.stderr, "{} ± {}", d.mean, d.stderr);
        assert!(d.within_bound);
        assert!((d.bound - 2.0 * 2f64.sqrt() * 0.5f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_state_deviation_within_bound() {
        let m = MarkovModel::two_state(0.1, 0.1).unwrap();
        let d = occupation_deviation(&m, &[1], 1000, 2.0, 1000, 17).unwrap();
        assert!(d.within_bound, "{d:?}");
    }

    #[test]
    fn continuous_metropolis_runs() {
        let rw = RandomWalkMetropolis::new(1, 1.0, Arc::new(|x: &[f64]| -0.5 * x[0] * x[0])).unwrap();
        let (pts, acc) = rw.run(&[0.0], 20_000, 4).unwrap();
        let mean: f64 = (0..pts.len()).map(|i| pts.point(i)[0]).sum::<f64>() / pts.len() as f64;
        assert!(mean.abs() < 0.1);
        assert!(acc > 0.3 && acc < 0.95);
    }
}
