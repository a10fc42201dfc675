//! Exact Wasserstein distances between discrete measures.
//!
//! [`exact_wp`] solves the transportation problem with costs `d^p` by network
//! simplex. [`brute_force_wp`] (dense LP) and [`wp_1d`] (quantile coupling)
//! are independent oracles for tiny and one-dimensional instances.
//!
//! Zero-weight atoms are dropped before solving and the target measure is
//! rescaled to the exact total mass of the source.

mod dense_lp;
mod ground;
mod network_simplex;
mod one_d;
mod plan;
mod solver;

pub use ground::{CoordGround, Ground, MatrixGround, MeasureGround};
pub use plan::{PlanEntry, TransportPlan};
pub use solver::{north_west_corner, solve_transport, SolveStats, COST_RESOLUTION, DENSE_ARC_LIMIT};

use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

use plan::pow_p;

/// Largest `|supp mu| * |supp nu|` accepted by [`brute_force_wp`].
pub const BRUTE_FORCE_LIMIT: usize = 64;

/// Absolute tolerance on the difference of total masses (per unit of mass).
pub const MASS_TOLERANCE: f64 = 1e-12;

struct Prepared {
    rows: Vec<usize>,
    cols: Vec<usize>,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("p = {p} must be a finite real >= 1")))
    }
}

fn prepare(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<Prepared> {
    check_p(p)?;
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::invalid("empty support"));
    }
    if !mu.space().compatible(nu.space()) {
        return Err(Error::invalid("measures live on incompatible metric spaces"));
    }
    let (ma, mb) = (mu.total_mass(), nu.total_mass());
    let tolerance = MASS_TOLERANCE * ma.max(mb).max(1.0);
    if (ma - mb).abs() > tolerance {
        return Err(Error::MassMismatch { left: ma, right: mb, tolerance });
    }
    if ma <= 0.0 {
        return Err(Error::invalid("measures have zero mass"));
    }
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu.weights()[j] > 0.0).collect();
    let a = rows.iter().map(|&i| mu.weights()[i]).collect();
    let scale = ma / mb;
    let b = cols.iter().map(|&j| nu.weights()[j] * scale).collect();
    Ok(Prepared { rows, cols, a, b })
}

fn gather(m: &DiscreteMeasure, idx: &[usize]) -> Vec<f64> {
    idx.iter().flat_map(|&i| m.atom(i).iter().copied()).collect()
}

fn run_solver(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    prep: &Prepared,
    p: f64,
) -> Result<(Vec<(usize, usize, f64)>, SolveStats)> {
    let space = mu.space();
    if space.has_coordinates() {
        let g = CoordGround::new(space.kind(), space.dim(), p, gather(mu, &prep.rows), gather(nu, &prep.cols));
        solve_transport(&prep.a, &prep.b, &g)
    } else {
        let g = MeasureGround { mu, nu, rows: &prep.rows, cols: &prep.cols, p };
        solve_transport(&prep.a, &prep.b, &g)
    }
}

/// Exact `W_p(mu, nu)` and an optimal plan.
///
/// The measures must have equal total mass (within [`MASS_TOLERANCE`]) and
/// live on one space or on compatible coordinate spaces. For measures of
/// total mass `M`, the value is `(min sum mass * d^p)^(1/p)` without
/// normalisation by `M`.
pub fn exact_wp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(f64, TransportPlan)> {
    exact_wp_with_stats(mu, nu, p).map(|(c, plan, _)| (c, plan))
}

/// [`exact_wp`] together with solver statistics.
pub fn exact_wp_with_stats(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
) -> Result<(f64, TransportPlan, SolveStats)> {
    let prep = prepare(mu, nu, p)?;
    let (raw, stats) = run_solver(mu, nu, &prep, p)?;
    let pairs = raw
        .into_iter()
        .map(|(i, j, mass)| {
            let (src, dst) = (prep.rows[i], prep.cols[j]);
            PlanEntry { src, dst, mass, distance: mu.atom_distance(src, nu, dst) }
        })
        .collect();
    let plan = TransportPlan::from_pairs(pairs, p);
    Ok((plan.cost, plan, stats))
}

/// `W_p` by a dense two-phase simplex; an oracle for tiny instances.
pub fn brute_force_wp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    if mu.len().saturating_mul(nu.len()) > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "{} x {} atoms exceeds the brute-force limit of {BRUTE_FORCE_LIMIT} pairs",
            mu.len(),
            nu.len()
        )));
    }
    let prep = prepare(mu, nu, p)?;
    let cost: Vec<Vec<f64>> =
        prep.rows.iter().map(|&i| prep.cols.iter().map(|&j| pow_p(mu.atom_distance(i, nu, j), p)).collect()).collect();
    let value = dense_lp::transport_lp(&prep.a, &prep.b, &cost)?;
    Ok(value.max(0.0).powf(1.0 / p))
}

/// `W_p` on the line by the monotone (quantile) coupling.
pub fn wp_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    for m in [mu, nu] {
        if !m.space().has_coordinates() || m.space().dim() != 1 {
            return Err(Error::invalid("wp_1d needs one-dimensional coordinate measures"));
        }
    }
    let prep = prepare(mu, nu, p)?;
    let xs: Vec<(f64, f64)> = prep.rows.iter().zip(&prep.a).map(|(&i, &w)| (mu.atom(i)[0], w)).collect();
    let ys: Vec<(f64, f64)> = prep.cols.iter().zip(&prep.b).map(|(&j, &w)| (nu.atom(j)[0], w)).collect();
    Ok(one_d::quantile_cost(&xs, &ys, p).max(0.0).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MetricSpace;
    use std::sync::Arc;

    fn line(xs: &[f64]) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    #[test]
    fn dirac_to_half_half() {
        let s = line(&[0.0, 1.0]);
        let mu = DiscreteMeasure::dirac(s.clone(), 0).unwrap();
        let nu = DiscreteMeasure::new(s, vec![0, 1], vec![0.5, 0.5]).unwrap();
        let (c, plan) = exact_wp(&mu, &nu, 1.0).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
        plan.validate(&mu, &nu).unwrap();
        assert!((brute_force_wp(&mu, &nu, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((wp_1d(&mu, &nu, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diracs_cost_their_distance_for_every_p() {
        let s = Arc::new(MetricSpace::euclidean(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap());
        let mu = DiscreteMeasure::dirac(s.clone(), 0).unwrap();
        let nu = DiscreteMeasure::dirac(s, 1).unwrap();
        for p in [1.0, 1.5, 2.0, 3.7] {
            assert!((exact_wp(&mu, &nu, p).unwrap().0 - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_pair_by_hand() {
        let mu = DiscreteMeasure::uniform(line(&[0.0, 1.0])).unwrap();
        let nu = DiscreteMeasure::uniform(line(&[1.0, 2.0])).unwrap();
        assert!((brute_force_wp(&mu, &nu, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((exact_wp(&mu, &nu, 2.0).unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_mismatch_and_empty_support() {
        let s = line(&[0.0, 1.0]);
        let mu = DiscreteMeasure::dirac(s.clone(), 0).unwrap();
        let nu = DiscreteMeasure::new(s.clone(), vec![1], vec![0.5]).unwrap();
        assert!(matches!(exact_wp(&mu, &nu, 1.0), Err(Error::MassMismatch { .. })));
        let empty = DiscreteMeasure::new(s, vec![], vec![]).unwrap();
        assert!(matches!(exact_wp(&empty, &empty, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn brute_force_size_limit() {
        let xs: Vec<f64> = (0..9).map(f64::from).collect();
        let mu = DiscreteMeasure::uniform(line(&xs)).unwrap();
        assert!(matches!(brute_force_wp(&mu, &mu, 1.0), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn wp_1d_rejects_higher_dimension() {
        let s = Arc::new(MetricSpace::euclidean(vec![vec![0.0, 0.0]]).unwrap());
        let mu = DiscreteMeasure::dirac(s, 0).unwrap();
        assert!(matches!(wp_1d(&mu, &mu, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_weight_atoms_are_ignored() {
        let s = line(&[0.0, 1.0, 5.0]);
        let mu = DiscreteMeasure::new(s.clone(), vec![0, 2], vec![1.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(s, 1).unwrap();
        let (c, plan) = exact_wp(&mu, &nu, 1.0).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(plan.pairs.len(), 1);
    }
}
