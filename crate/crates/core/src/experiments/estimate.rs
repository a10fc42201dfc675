use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::markov::{mean_and_stderr, run_chain, MarkovModel};
use crate::measures::{derive_seed, DiscreteMeasure, Sampler, PROBABILITY_TOLERANCE};
use crate::transport::exact_wp;
use crate::{Error, Result};

/// Where the random measures `L_n` come from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// Empirical measures of i.i.d. draws.
    Sampler(&'a Sampler),
    /// Occupation measures of the chain started from its initial law.
    Chain(&'a MarkovModel),
}

impl Source<'_> {
    /// `L_n` for replicate seed `seed`.
    pub fn draw(&self, n: usize, seed: u64) -> Result<DiscreteMeasure> {
        match self {
            Source::Sampler(s) => s.with_seed(seed).sample_empirical(n),
            Source::Chain(m) => Ok(run_chain(m, n, seed)?.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Zero with fewer than two successful replicates.
    pub stderr: f64,
    /// Replicates whose solve failed and were left out.
    pub failures: usize,
}

/// Monte Carlo mean of `W_p(L_n, reference)` over `replicates` independent
/// draws; replicate `k` uses seed `seed ^ k`.
///
/// Replicates run on the current rayon pool and are reduced in replicate
/// order. Failed replicates are counted; more than 1% of them is an error.
pub fn estimate_mean_wp(
    source: Source<'_>,
    reference: &DiscreteMeasure,
    p: f64,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if n == 0 || replicates == 0 {
        return Err(Error::invalid("n and replicates must be positive"));
    }
    if !reference.is_probability() {
        return Err(Error::MassMismatch { left: reference.total_mass(), right: 1.0, tolerance: PROBABILITY_TOLERANCE });
    }
    let runs: Vec<Result<f64>> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let l_n = source.draw(n, derive_seed(seed, k as u64))?;
            Ok(exact_wp(&l_n, reference, p)?.0)
        })
        .collect();
    let mut values = Vec::with_capacity(replicates);
    let mut failures = 0;
    for (k, r) in runs.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                log::warn!("replicate {k} at n = {n} failed: {e}");
                failures += 1;
            }
        }
    }
    if failures * 100 > replicates {
        return Err(Error::Experiment(format!("{failures} of {replicates} replicates failed at n = {n}")));
    }
    let (mean, stderr) = mean_and_stderr(&values);
    Ok(MeanEstimate { mean, stderr, failures })
}

/// Least-squares line through `(log n, log mean)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval for the slope.
    pub slope_ci: (f64, f64),
    pub intercept_ci: (f64, f64),
    /// Residual standard deviation on the log scale.
    pub residual_sd: f64,
}

/// Fits `log mean = intercept + slope log n` by ordinary least squares, with
/// Student-t intervals from the residual variance.
pub fn fit_rate(n_grid: &[usize], means: &[f64]) -> Result<RateFit> {
    if n_grid.len() != means.len() {
        return Err(Error::invalid("grid and means differ in length"));
    }
    if n_grid.len() < 3 {
        return Err(Error::invalid("a rate fit needs at least 3 points"));
    }
    if let Some(m) = means.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return Err(Error::invalid(format!("mean {m} is not positive")));
    }
    if n_grid.contains(&0) {
        return Err(Error::invalid("grid sizes must be positive"));
    }
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let k = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / k;
    let ybar = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - xbar).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("grid sizes must differ"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xbar) * (b - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = sse / (k - 2.0);
    let se_slope = (s2 / sxx).sqrt();
    let se_intercept = (s2 * (1.0 / k + xbar * xbar / sxx)).sqrt();
    let q = StudentsT::new(0.0, 1.0, k - 2.0)
        .map_err(|e| Error::Numeric(format!("t distribution: {e}")))?
        .inverse_cdf(0.975);
    Ok(RateFit {
        slope,
        intercept,
        slope_ci: (slope - q * se_slope, slope + q * se_slope),
        intercept_ci: (intercept - q * se_intercept, intercept + q * se_intercept),
        residual_sd: s2.sqrt(),
    })
}
