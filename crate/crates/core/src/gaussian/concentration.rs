use rayon::prelude::*;
use serde::Serialize;

use super::GaussianProcessModel;
use crate::measures::{derive_seed, DiscreteMeasure};
use crate::transport::{exact_wp, wp_1d};
use crate::{Error, Result};

/// Size of the sampled stand-in for the Gaussian law.
pub const REFERENCE_SIZE: usize = 10_000;

/// Fewer replicates than this mark a tail estimate as unreliable.
pub const MIN_RELIABLE_REPLICATES: usize = 100;

/// Empirical reference measure of `n_ref` paths.
pub fn reference_measure(model: &GaussianProcessModel, n_ref: usize, seed: u64) -> Result<DiscreteMeasure> {
    model.sample_empirical(n_ref, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct TailPoint {
    pub t: f64,
    /// Fraction of replicates with `W_2 >= mean + t`.
    pub exceedance: f64,
    pub stderr: f64,
    /// `exp(-n t^2 / (2 sigma_hat^2))`.
    pub bound: f64,
    /// `exceedance <= bound + 3 stderr`.
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub replicates: usize,
    pub mean_w2: f64,
    pub sigma_hat: f64,
    pub points: Vec<TailPoint>,
    /// Set when `replicates < MIN_RELIABLE_REPLICATES`.
    pub unreliable: bool,
}

/// Upper tail of `W_2(L_n, reference)` around its Monte Carlo mean against the
/// Gaussian concentration bound. The binomial standard error uses the
/// observed frequency. One-dimensional laws use the quantile coupling.
pub fn concentration_tail(
    model: &GaussianProcessModel,
    reference: &DiscreteMeasure,
    n: usize,
    ts: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if n == 0 || replicates == 0 {
        return Err(Error::invalid("n and replicates must be positive"));
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::invalid(format!("tail level {t} must be positive")));
    }
    if replicates < MIN_RELIABLE_REPLICATES {
        log::warn!("{replicates} replicates: tail estimates are unreliable");
    }
    let one_d = reference.space().has_coordinates() && reference.space().dim() == 1;
    let w: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let emp = model.sample_empirical(n, derive_seed(seed, k as u64))?;
            if one_d {
                wp_1d(&emp, reference, 2.0)
            } else {
                Ok(exact_wp(&emp, reference, 2.0)?.0)
            }
        })
        .collect::<Result<_>>()?;
    let mean_w2 = w.iter().sum::<f64>() / replicates as f64;
    let s2 = model.sigma_hat * model.sigma_hat;
    let points = ts
        .iter()
        .map(|&t| {
            let hits = w.iter().filter(|&&x| x >= mean_w2 + t).count();
            let q = hits as f64 / replicates as f64;
            let stderr = (q * (1.0 - q) / replicates as f64).sqrt();
            let bound = (-(n as f64) * t * t / (2.0 * s2)).exp();
            TailPoint { t, exceedance: q, stderr, bound, within_bound: q <= bound + 3.0 * stderr }
        })
        .collect();
    Ok(ConcentrationReport {
        n,
        replicates,
        mean_w2,
        sigma_hat: model.sigma_hat,
        points,
        unreliable: replicates < MIN_RELIABLE_REPLICATES,
    })
}
