use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GaussianProcessModel;
use crate::bounds::SmallBall;
use crate::measures::{coord_distance, rng_from_seed, DiscreteMeasure, MetricKind};
use crate::transport::exact_wp;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Quantizer {
    pub centers: Vec<Vec<f64>>,
    /// Mass of each Voronoi cell.
    pub weights: Vec<f64>,
    /// `W_2` between the samples and the quantized measure.
    pub delta_hat: f64,
    /// Mean squared distance to the nearest center after each assignment.
    pub objective: Vec<f64>,
}

struct Data<'a> {
    points: Vec<&'a [f64]>,
    weights: &'a [f64],
    kind: MetricKind,
}

impl Data<'_> {
    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        coord_distance(self.kind, a, b)
    }

    /// Nearest center and distance for every point.
    fn assign(&self, centers: &[Vec<f64>]) -> Vec<(usize, f64)> {
        self.points
            .par_iter()
            .map(|x| {
                let mut best = (0, f64::INFINITY);
                for (c, y) in centers.iter().enumerate() {
                    let d = self.dist(x, y);
                    if d < best.1 {
                        best = (c, d);
                    }
                }
                best
            })
            .collect()
    }

    fn cost(&self, members: &[usize], c: &[f64]) -> f64 {
        members.iter().map(|&i| self.weights[i] * self.dist(self.points[i], c).powi(2)).sum()
    }
}

fn prepare(samples: &DiscreteMeasure) -> Result<Data<'_>> {
    let kind = samples.space().kind();
    if kind == MetricKind::Table || samples.is_empty() {
        return Err(Error::invalid("quantization needs a nonempty measure on coordinates"));
    }
    Ok(Data { points: (0..samples.len()).map(|i| samples.atom(i)).collect(), weights: samples.weights(), kind })
}

/// Lloyd iterations from farthest-point initial centers (first center drawn
/// with `seed`). One-dimensional Euclidean data start instead from the
/// weighted quantiles `(k + 1/2) / n_centers` of the sorted atoms.
///
/// An empty cell gets its center moved onto the point farthest from its
/// own center. Under the sup norm a cell mean replaces the center only when
/// it lowers the cell cost, so the objective never increases.
pub fn lloyd_quantizer(samples: &DiscreteMeasure, n_centers: usize, iterations: usize, seed: u64) -> Result<Quantizer> {
    if n_centers == 0 {
        return Err(Error::invalid("need at least one center"));
    }
    let data = prepare(samples)?;
    let m = data.points.len();
    let init: Vec<Vec<f64>> = if data.kind == MetricKind::Euclidean && samples.space().dim() == 1 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| data.points[a][0].total_cmp(&data.points[b][0]));
        let total = samples.total_mass();
        let mut cum = 0.0;
        let mut k = 0;
        let mut out: Vec<Vec<f64>> = Vec::new();
        for &i in &order {
            cum += data.weights[i];
            while k < n_centers && (k as f64 + 0.5) / n_centers as f64 * total <= cum {
                if out.last().is_none_or(|c| c[0] != data.points[i][0]) {
                    out.push(data.points[i].to_vec());
                }
                k += 1;
            }
        }
        if out.is_empty() {
            out.push(data.points[order[m - 1]].to_vec());
        }
        out
    } else {
        let start = rng_from_seed(seed).random_range(0..m);
        let mut centers = vec![data.points[start].to_vec()];
        let mut near: Vec<f64> = data.points.iter().map(|x| data.dist(x, &centers[0])).collect();
        while centers.len() < n_centers {
            let (far, r) = near.iter().enumerate().fold((0, 0.0), |b, (i, &d)| if d > b.1 { (i, d) } else { b });
            if r <= 0.0 {
                break;
            }
            let c = data.points[far].to_vec();
            for (d, x) in near.iter_mut().zip(&data.points) {
                *d = d.min(data.dist(x, &c));
            }
            centers.push(c);
        }
        centers
    };
    lloyd_from(samples, init, iterations)
}

/// Lloyd iterations from the given centers.
pub fn lloyd_from(samples: &DiscreteMeasure, mut centers: Vec<Vec<f64>>, iterations: usize) -> Result<Quantizer> {
    let data = prepare(samples)?;
    if centers.is_empty() || centers.iter().any(|c| c.len() != samples.space().dim()) {
        return Err(Error::invalid("initial centers missing or of the wrong dimension"));
    }
    let total = samples.total_mass();
    let mut objective = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    let mut assign = data.assign(&centers);
    for _ in 0..=iterations {
        // Re-seed empty cells on the worst-served points.
        let mut counts = vec![0usize; centers.len()];
        for &(c, _) in &assign {
            counts[c] += 1;
        }
        for c in 0..centers.len() {
            if counts[c] == 0 {
                let (far, d) =
                    assign.iter().enumerate().fold((0, -1.0), |b, (i, &(_, d))| if d > b.1 { (i, d) } else { b });
                if d <= 0.0 {
                    break;
                }
                counts[assign[far].0] -= 1;
                centers[c] = data.points[far].to_vec();
                assign[far] = (c, 0.0);
                counts[c] = 1;
            }
        }
        let j = assign.iter().zip(data.weights).map(|(&(_, d), w)| w * d * d).sum::<f64>() / total;
        if let Some(&last) = objective.last() {
            if j > last * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::Numeric(format!("Lloyd objective rose from {last} to {j}")));
            }
        }
        objective.push(j);
        let labels: Vec<usize> = assign.iter().map(|a| a.0).collect();
        if prev.as_ref() == Some(&labels) || objective.len() > iterations {
            break;
        }
        let mut members = vec![Vec::new(); centers.len()];
        for (i, &c) in labels.iter().enumerate() {
            members[c].push(i);
        }
        for (c, mem) in members.iter().enumerate() {
            let mass: f64 = mem.iter().map(|&i| data.weights[i]).sum();
            if mem.is_empty() || mass <= 0.0 {
                continue;
            }
            let mut mean = vec![0.0; centers[c].len()];
            for &i in mem {
                for (m, x) in mean.iter_mut().zip(data.points[i]) {
                    *m += data.weights[i] * x / mass;
                }
            }
            if data.kind == MetricKind::Euclidean || data.cost(mem, &mean) < data.cost(mem, &centers[c]) {
                centers[c] = mean;
            }
        }
        prev = Some(labels);
        assign = data.assign(&centers);
    }
    let mut weights = vec![0.0; centers.len()];
    for (&(c, _), w) in assign.iter().zip(data.weights) {
        weights[c] += w;
    }
    let delta_hat = objective.last().copied().unwrap_or(0.0).sqrt();
    Ok(Quantizer { centers, weights, delta_hat, objective })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizerComparison {
    pub n: usize,
    /// `W_2(L_n, reference)`.
    pub w2: f64,
    /// Best Lloyd quantization error of the reference with `n` centers.
    pub delta_hat: f64,
    /// `psi^{-1}(log n)` from the supplied small-ball function.
    pub psi_inv_log_n: f64,
    /// `delta_hat <= w2`.
    pub ordered: bool,
}

/// `W_2(L_n, reference)` next to the `n`-point quantization error of the
/// reference and `psi^{-1}(log n)`.
///
/// Lloyd is run twice, from farthest-point centers and from the atoms of
/// `L_n`, and the smaller error is kept. The second run starts at a cost
/// no larger than `W_2(L_n, reference)^2` and never increases it, so
/// `ordered` holds up to rounding.
pub fn empirical_vs_quantizer(
    model: &GaussianProcessModel,
    reference: &DiscreteMeasure,
    n: usize,
    psi: &SmallBall,
    iterations: usize,
    seed: u64,
) -> Result<QuantizerComparison> {
    let emp = model.sample_empirical(n, seed)?;
    let w2 = exact_wp(&emp, reference, 2.0)?.0;
    let greedy = lloyd_quantizer(reference, n, iterations, seed)?;
    let from_emp = lloyd_from(reference, (0..emp.len()).map(|i| emp.atom(i).to_vec()).collect(), iterations)?;
    let delta_hat = greedy.delta_hat.min(from_emp.delta_hat);
    let psi_inv_log_n = psi.inverse((n as f64).ln())?;
    Ok(QuantizerComparison { n, w2, delta_hat, psi_inv_log_n, ordered: delta_hat <= w2 * (1.0 + 1e-9) })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::measures::{MetricSpace, Sampler};

    fn line(xs: &[f64]) -> DiscreteMeasure {
        let space = Arc::new(MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap());
        DiscreteMeasure::uniform(space).unwrap()
    }

    #[test]
    fn enough_centers_is_exact() {
        let m = line(&[0.0, 1.0, 1.0, 5.0]);
        assert_eq!(lloyd_quantizer(&m, 3, 10, 0).unwrap().delta_hat, 0.0);
        assert_eq!(lloyd_quantizer(&m, 8, 10, 0).unwrap().delta_hat, 0.0);
    }

    #[test]
    fn uniform_one_center() {
        let s = Sampler::uniform_cube(1, 3).unwrap().sample_empirical(10_000).unwrap();
        let q = lloyd_quantizer(&s, 1, 50, 0).unwrap();
        assert!((q.centers[0][0] - 0.5).abs() < 0.01);
        assert!((q.delta_hat - 1.0 / (2.0 * 3f64.sqrt())).abs() < 0.01);
    }

    #[test]
    fn delta_matches_transport() {
        let s = Sampler::uniform_cube(2, 5).unwrap().sample_empirical(300).unwrap();
        let q = lloyd_quantizer(&s, 7, 30, 2).unwrap();
        assert!(q.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let space = Arc::new(MetricSpace::euclidean(q.centers.clone()).unwrap());
        let quant = DiscreteMeasure::new(space, (0..q.centers.len()).collect(), q.weights.clone()).unwrap();
        let exact = exact_wp(&s, &quant, 2.0).unwrap().0;
        assert!((exact - q.delta_hat).abs() < 1e-9 * q.delta_hat.max(1.0), "{exact} vs {}", q.delta_hat);
    }

    #[test]
    fn more_centers_never_worse_in_one_dimension() {
        let s = Sampler::uniform_cube(1, 9).unwrap().sample_empirical(4000).unwrap();
        let mut last = f64::INFINITY;
        for k in [1, 2, 4, 8, 16, 32] {
            let d = lloyd_quantizer(&s, k, 200, 0).unwrap().delta_hat;
            assert!(d <= last);
            last = d;
        }
    }

    #[test]
    fn sup_norm_paths() {
        let m = GaussianProcessModel::brownian_kl(16, 16).unwrap();
        let reference = m.sample_empirical(500, 1).unwrap();
        let q = lloyd_quantizer(&reference, 10, 20, 4).unwrap();
        assert!(q.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let psi = SmallBall::Power { scale: std::f64::consts::PI.powi(2) / 8.0, exponent: 2.0 };
        let c = empirical_vs_quantizer(&m, &reference, 16, &psi, 20, 3).unwrap();
        assert!(c.ordered, "{c:?}");
    }
}
