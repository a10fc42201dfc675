use std::io::Write;

use serde::Serialize;

use crate::measures::{neumaier_sum, DiscreteMeasure};
use crate::{Error, Result};

/// One entry of a coupling: `mass` moved from atom `src` of the source
/// measure to atom `dst` of the target, over `distance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry {
    pub src: usize,
    pub dst: usize,
    pub mass: f64,
    pub distance: f64,
}

/// A coupling between two discrete measures and its `p`-cost
/// `(sum mass * distance^p)^(1/p)`.
///
/// Atom indices are positions in the measures' support lists.
#[derive(Debug, Clone, Serialize)]
pub struct TransportPlan {
    pub pairs: Vec<PlanEntry>,
    pub p: f64,
    pub cost: f64,
}

#[inline]
pub(crate) fn pow_p(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

impl TransportPlan {
    /// Builds a plan and computes its cost from the entries.
    pub fn from_pairs(pairs: Vec<PlanEntry>, p: f64) -> Self {
        let mut plan = Self { pairs, p, cost: 0.0 };
        plan.cost = plan.recompute_cost();
        plan
    }

    pub fn recompute_cost(&self) -> f64 {
        neumaier_sum(self.pairs.iter().map(|e| e.mass * pow_p(e.distance, self.p))).powf(1.0 / self.p)
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.pairs.iter().map(|e| e.mass))
    }

    /// Checks nonnegativity, marginals within `1e-9` of the total mass and
    /// the stored cost within `1e-9` relative.
    pub fn validate(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
        let tol = 1e-9 * mu.total_mass().max(nu.total_mass()).max(f64::MIN_POSITIVE);
        let mut rows = vec![0.0; mu.len()];
        let mut cols = vec![0.0; nu.len()];
        for e in &self.pairs {
            if !(e.mass >= 0.0) {
                return Err(Error::Numeric(format!("negative plan mass {}", e.mass)));
            }
            if e.src >= mu.len() || e.dst >= nu.len() {
                return Err(Error::Numeric("plan entry out of range".into()));
            }
            rows[e.src] += e.mass;
            cols[e.dst] += e.mass;
        }
        for (i, (&r, &w)) in rows.iter().zip(mu.weights()).enumerate() {
            if (r - w).abs() > tol {
                return Err(Error::Numeric(format!("source marginal {i}: {r} vs {w}")));
            }
        }
        let scale = mu.total_mass() / nu.total_mass();
        for (j, (&c, &w)) in cols.iter().zip(nu.weights()).enumerate() {
            if (c - w * scale).abs() > tol {
                return Err(Error::Numeric(format!("target marginal {j}: {c} vs {w}")));
            }
        }
        let again = self.recompute_cost();
        if (again - self.cost).abs() > 1e-9 * self.cost.max(f64::MIN_POSITIVE) {
            return Err(Error::Numeric(format!("stored cost {} vs recomputed {again}", self.cost)));
        }
        Ok(())
    }

    /// Writes `src,dst,mass,distance` rows.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src", "dst", "mass", "distance"]).map_err(|e| Error::Parse(e.to_string()))?;
        for e in &self.pairs {
            w.write_record([e.src.to_string(), e.dst.to_string(), format!("{}", e.mass), format!("{}", e.distance)])
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}
