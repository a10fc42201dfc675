use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::measures::{rng_from_seed, DiscreteMeasure, MetricKind, MetricSpace, Rng64, Sampler, SamplerKind};
use crate::{Error, Result};

/// Row-major `k x g` table of `x_i(t) = √2 sin((i - 1/2) π t) / ((i - 1/2) π)`,
/// `i = 1..=k`, at `t = 1/g, 2/g, ..., 1`.
pub fn brownian_kl_basis(k: usize, g: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k * g);
    for i in 0..k {
        let w = (i as f64 + 0.5) * std::f64::consts::PI;
        for t in 0..g {
            let x = (t + 1) as f64 / g as f64;
            out.push(std::f64::consts::SQRT_2 * (w * x).sin() / w);
        }
    }
    out
}

/// `sum_{i > k} 2 / ((i - 1/2) π)^2`, the variance at `t = 1` lost by
/// truncating the Brownian expansion after `k` terms.
pub fn brownian_truncation_deficit(k: usize) -> f64 {
    // 1 - sum_{i <= k}, summed from the small terms up.
    1.0 - (0..k).rev().map(|i| 2.0 / ((i as f64 + 0.5) * std::f64::consts::PI).powi(2)).sum::<f64>()
}

/// A centered Gaussian vector `sum_k g_k x_k` observed on `grid` points, with
/// the sup norm over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProcessModel {
    pub truncation: usize,
    pub grid: usize,
    /// Row-major `truncation x grid` table of the `x_k`.
    pub basis: Vec<f64>,
    /// Weak variance: `sqrt(max_t sum_k x_k(t)^2)`.
    pub sigma_hat: f64,
}

impl GaussianProcessModel {
    pub fn from_basis(truncation: usize, grid: usize, basis: Vec<f64>) -> Result<Self> {
        if truncation == 0 || grid == 0 || basis.len() != truncation * grid {
            return Err(Error::invalid(format!(
                "basis of length {} for truncation {truncation} and grid {grid}",
                basis.len()
            )));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("basis values must be finite"));
        }
        let sigma_hat = (0..grid)
            .map(|t| (0..truncation).map(|k| basis[k * grid + t].powi(2)).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt();
        Ok(Self { truncation, grid, basis, sigma_hat })
    }

    /// Brownian motion on `[0, 1]` through `k` Karhunen-Loeve terms.
    pub fn brownian_kl(k: usize, g: usize) -> Result<Self> {
        Self::from_basis(k, g, brownian_kl_basis(k, g))
    }

    /// One-dimensional `N(0, sigma^2)`.
    pub fn scalar(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma = {sigma} must be positive")));
        }
        Self::from_basis(1, 1, vec![sigma])
    }

    fn draw(&self, rng: &mut Rng64, path: &mut [f64]) {
        path.fill(0.0);
        for row in self.basis.chunks(self.grid) {
            let z: f64 = rng.sample(StandardNormal);
            for (x, b) in path.iter_mut().zip(row) {
                *x += z * b;
            }
        }
    }

    /// One path, from its own seeded stream.
    pub fn sample_path(&self, seed: u64) -> Vec<f64> {
        let mut path = vec![0.0; self.grid];
        self.draw(&mut rng_from_seed(seed), &mut path);
        path
    }

    /// A sampler of paths; its first path equals [`sample_path`](Self::sample_path)
    /// with the same seed.
    pub fn sampler(&self, seed: u64) -> Result<Sampler> {
        let me = self.clone();
        let draw = Arc::new(move |rng: &mut Rng64, path: &mut [f64]| me.draw(rng, path));
        Sampler::new(SamplerKind::Custom { dim: self.grid, metric: MetricKind::SupNorm, draw }, seed)
    }

    /// `n` i.i.d. paths as a sup-norm point set.
    pub fn sample_paths(&self, n: usize, seed: u64) -> Result<MetricSpace> {
        self.sampler(seed)?.sample_space(n)
    }

    pub fn sample_empirical(&self, n: usize, seed: u64) -> Result<DiscreteMeasure> {
        self.sampler(seed)?.sample_empirical(n)
    }

    /// Sup norms of `n` paths drawn from one stream.
    pub fn sup_norms(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut path = vec![0.0; self.grid];
        (0..n)
            .map(|_| {
                self.draw(&mut rng, &mut path);
                path.iter().fold(0.0f64, |m, x| m.max(x.abs()))
            })
            .collect()
    }
}

/// Paths as CSV, one per line, columns `g0..g{G-1}`.
pub fn write_paths_csv(paths: &MetricSpace, mut out: impl Write) -> Result<()> {
    if !paths.has_coordinates() {
        return Err(Error::invalid("paths need coordinates"));
    }
    let header: Vec<String> = (0..paths.dim()).map(|k| format!("g{k}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..paths.len() {
        let row: Vec<String> = paths.point(i).iter().map(|x| format!("{x:e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_path() {
        let basis = vec![0.5, -2.0, 1.0];
        let m = GaussianProcessModel::from_basis(1, 3, basis.clone()).unwrap();
        assert_eq!(m.sigma_hat, 2.0);
        let p = m.sample_path(4);
        let g = p[0] / 0.5;
        for (x, b) in p.iter().zip(&basis) {
            assert!((x - g * b).abs() < 1e-15);
        }
        assert!((m.sup_norms(1, 4)[0] - 2.0 * g.abs()).abs() < 1e-14);
        assert_eq!(m.sample_path(4), p);
    }

    #[test]
    fn brownian_sigma_approaches_one() {
        let mut last = 0.0;
        for k in [1, 4, 16, 64, 256, 1024] {
            let m = GaussianProcessModel::brownian_kl(k, 64).unwrap();
            assert!(m.sigma_hat <= 1.0 && m.sigma_hat > last);
            assert!((m.sigma_hat.powi(2) - (1.0 - brownian_truncation_deficit(k))).abs() < 1e-12);
            last = m.sigma_hat;
        }
        assert!(1.0 - last < 1e-3);
    }

    #[test]
    fn sampler_agrees_with_sample_path() {
        let m = GaussianProcessModel::brownian_kl(8, 16).unwrap();
        let s = m.sample_paths(3, 21).unwrap();
        assert_eq!(s.point(0), m.sample_path(21).as_slice());
        let reference = Sampler::new(SamplerKind::BrownianKl { truncation: 8, grid: 16 }, 21).unwrap();
        let r = reference.sample_space(3).unwrap();
        for i in 0..3 {
            assert_eq!(r.point(i), s.point(i));
        }
    }

    #[test]
    fn paths_csv() {
        let m = GaussianProcessModel::brownian_kl(2, 3).unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&m.sample_paths(2, 1).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("g0,g1,g2\n"));
    }
}
