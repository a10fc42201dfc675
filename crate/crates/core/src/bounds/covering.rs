use serde::{Deserialize, Serialize};

use crate::measures::MetricSpace;
use crate::multiscale::GreedyPermutation;
use crate::{Error, Result};

/// A covering-number curve `delta -> N(X, delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoveringCurve {
    /// `k_E (diameter / delta)^alpha`.
    PowerLaw { k_e: f64, alpha: f64, diameter: f64 },
    /// Right-continuous step function: the value on `[deltas[i], deltas[i+1])`
    /// is `counts[i]`, and the last count extends to infinity. Undefined
    /// below `deltas[0]`.
    Step { deltas: Vec<f64>, counts: Vec<f64> },
}

impl CoveringCurve {
    pub fn power_law(k_e: f64, alpha: f64, diameter: f64) -> Result<Self> {
        let c = CoveringCurve::PowerLaw { k_e, alpha, diameter };
        c.validate()?;
        Ok(c)
    }

    pub fn step(deltas: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let c = CoveringCurve::Step { deltas, counts };
        c.validate()?;
        Ok(c)
    }

    /// Exact step curve of greedy cover sizes `N̂(delta)` for a point subset.
    pub fn greedy(space: &MetricSpace, subset: &[usize]) -> Result<Self> {
        Self::from_permutation(&GreedyPermutation::new(space, subset, 0.0)?)
    }

    /// Step curve `delta -> perm.count(delta)`, valid for `delta` at or above
    /// the last recorded radius.
    pub fn from_permutation(perm: &GreedyPermutation) -> Result<Self> {
        let mut radii = perm.radii.clone();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let counts = radii.iter().map(|&r| perm.count(r) as f64).collect();
        Self::step(radii, counts)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CoveringCurve::PowerLaw { k_e, alpha, diameter } => {
                for (name, v) in [("k_E", k_e), ("alpha", alpha), ("diameter", diameter)] {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(Error::invalid(format!("{name} = {v} must be positive and finite")));
                    }
                }
            }
            CoveringCurve::Step { deltas, counts } => {
                if deltas.is_empty() || deltas.len() != counts.len() {
                    return Err(Error::invalid("step curve needs equally many deltas and counts"));
                }
                if !deltas.iter().all(|d| d.is_finite() && *d >= 0.0) || deltas.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("step curve deltas must be finite, nonnegative and increasing"));
                }
                if !counts.iter().all(|c| c.is_finite() && *c >= 1.0) {
                    return Err(Error::invalid("covering counts must be finite and at least 1"));
                }
                if counts.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::invalid("covering curve must be nonincreasing in delta"));
                }
            }
        }
        Ok(())
    }

    /// Smallest delta at which the curve is defined.
    pub fn min_delta(&self) -> f64 {
        match self {
            CoveringCurve::PowerLaw { .. } => 0.0,
            CoveringCurve::Step { deltas, .. } => deltas[0],
        }
    }

    pub fn value(&self, delta: f64) -> Result<f64> {
        match self {
            CoveringCurve::PowerLaw { k_e, alpha, diameter } => {
                if !(delta > 0.0) {
                    return Err(Error::Range(format!("covering number at delta = {delta}")));
                }
                Ok(k_e * (diameter / delta).powf(*alpha))
            }
            CoveringCurve::Step { deltas, counts } => {
                if !(delta >= deltas[0]) {
                    return Err(Error::Range(format!("delta = {delta} below the tabulated range")));
                }
                Ok(counts[deltas.partition_point(|&d| d <= delta) - 1])
            }
        }
    }

    /// `∫_a^b N(delta)^q d delta` for `0 < a <= b`. Step curves are
    /// integrated exactly, power laws by adaptive quadrature in `log delta`.
    pub fn integral_pow(&self, a: f64, b: f64, q: f64) -> Result<f64> {
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::invalid(format!("integration range [{a}, {b}]")));
        }
        match self {
            CoveringCurve::PowerLaw { k_e, alpha, diameter } => {
                let f = |s: f64| {
                    let d = s.exp();
                    k_e.powf(q) * (diameter / d).powf(alpha * q) * d
                };
                Ok(adaptive_simpson(&f, a.ln(), b.ln(), 1e-10))
            }
            CoveringCurve::Step { deltas, counts } => {
                if a < deltas[0] {
                    return Err(Error::Range(format!("delta = {a} below the tabulated range")));
                }
                let mut total = 0.0;
                let start = deltas.partition_point(|&d| d <= a) - 1;
                for i in start..deltas.len() {
                    let lo = deltas[i].max(a);
                    let hi = deltas.get(i + 1).copied().unwrap_or(f64::INFINITY).min(b);
                    if hi <= lo {
                        break;
                    }
                    total += (hi - lo) * counts[i].powf(q);
                }
                Ok(total)
            }
        }
    }

    /// Smallest `k_E` with `N(delta) <= k_E (d / delta)^alpha` for all
    /// `0 < delta <= d` on the curve's range.
    pub fn fit_k_e(&self, alpha: f64, d: f64) -> Result<f64> {
        super::check_positive("alpha", alpha)?;
        super::check_positive("diameter", d)?;
        match self {
            CoveringCurve::PowerLaw { k_e, alpha: a, diameter } => {
                if (a - alpha).abs() > 1e-12 || (diameter - d).abs() > 1e-12 * d {
                    return Err(Error::invalid("power-law curve with a different exponent or diameter"));
                }
                Ok(*k_e)
            }
            CoveringCurve::Step { deltas, counts } => {
                let mut k = 0.0f64;
                for (i, &c) in counts.iter().enumerate() {
                    if deltas[i] > d {
                        break;
                    }
                    let hi = deltas.get(i + 1).copied().unwrap_or(f64::INFINITY).min(d);
                    k = k.max(c * (hi / d).powf(alpha));
                }
                Ok(k)
            }
        }
    }

    /// Closed-form `∫_a^b N^q` for power-law curves; `None` for step curves.
    pub fn integral_pow_closed_form(&self, a: f64, b: f64, q: f64) -> Option<f64> {
        let CoveringCurve::PowerLaw { k_e, alpha, diameter } = self else {
            return None;
        };
        let e = alpha * q;
        let scale = k_e.powf(q) * diameter.powf(e);
        Some(if (e - 1.0).abs() < 1e-14 {
            scale * (b / a).ln()
        } else {
            scale * (b.powf(1.0 - e) - a.powf(1.0 - e)) / (1.0 - e)
        })
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, rel * scale, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_quadrature_matches_closed_form() {
        for (alpha, q, a, b) in
            [(3.0, 0.5, 1e-12, 0.25), (1.0, 1.0, 1e-6, 2.0), (2.0, 0.25, 1e-3, 0.25), (0.5, 2.0, 1e-9, 10.0)]
        {
            let c = CoveringCurve::power_law(2.0, alpha, 1.5).unwrap();
            let quad = c.integral_pow(a, b, q).unwrap();
            let exact = c.integral_pow_closed_form(a, b, q).unwrap();
            assert!((quad - exact).abs() <= 1e-6 * exact, "{alpha} {q}: {quad} vs {exact}");
        }
    }

    #[test]
    fn step_integral_is_exact() {
        let c = CoveringCurve::step(vec![0.0, 1.0, 2.0], vec![9.0, 4.0, 1.0]).unwrap();
        assert_eq!(c.value(0.5).unwrap(), 9.0);
        assert_eq!(c.value(1.0).unwrap(), 4.0);
        assert_eq!(c.value(100.0).unwrap(), 1.0);
        // 0.5*3 + 1*2 + 1*1
        assert!((c.integral_pow(0.5, 3.0, 0.5).unwrap() - 4.5).abs() < 1e-15);
        assert_eq!(c.integral_pow(2.5, 2.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn greedy_curve_follows_permutation() {
        let s = MetricSpace::euclidean((0..30).map(|k| vec![(k as f64 * 0.37).sin()]).collect()).unwrap();
        let all: Vec<usize> = (0..30).collect();
        let perm = GreedyPermutation::new(&s, &all, 0.0).unwrap();
        let c = CoveringCurve::from_permutation(&perm).unwrap();
        for k in 1..200 {
            let d = k as f64 / 100.0;
            assert_eq!(c.value(d).unwrap(), perm.count(d) as f64);
        }
    }

    #[test]
    fn rejects_increasing_counts() {
        assert!(CoveringCurve::step(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(CoveringCurve::step(vec![1.0, 0.0], vec![2.0, 1.0]).is_err());
        assert!(CoveringCurve::power_law(0.0, 1.0, 1.0).is_err());
    }
}
