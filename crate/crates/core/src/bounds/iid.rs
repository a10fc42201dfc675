use serde::{Deserialize, Serialize};

use super::{check_n, check_positive, CoveringCurve, LEADING_CONSTANT};
use crate::{Error, Result};

/// Dimension data for a state space: `N(E, delta) <= k_E (diam E / delta)^alpha`,
/// optionally with a measured covering curve that replaces the power law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionProfile {
    pub k_e: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering_curve: Option<CoveringCurve>,
}

impl DimensionProfile {
    pub fn new(k_e: f64, alpha: f64) -> Result<Self> {
        let p = Self { k_e, alpha, covering_curve: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_curve(mut self, curve: CoveringCurve) -> Result<Self> {
        curve.validate()?;
        self.covering_curve = Some(curve);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("k_E", self.k_e)?;
        check_positive("alpha", self.alpha)?;
        if let Some(c) = &self.covering_curve {
            c.validate()?;
        }
        Ok(())
    }

    /// The measured curve if present, else the power law at diameter `d`.
    pub fn curve(&self, d: f64) -> Result<CoveringCurve> {
        match &self.covering_curve {
            Some(c) => Ok(c.clone()),
            None => CoveringCurve::power_law(self.k_e, self.alpha, d),
        }
    }
}

/// `(64/3) (t + n^{-1/2p} ∫_t^{d/4} N(delta)^{1/2p} d delta)`, or
/// `(64/3) t` once `t >= d/4`.
pub fn bound_iid_integral(curve: &CoveringCurve, d: f64, p: f64, n: u64, t: f64) -> Result<f64> {
    check_positive("diameter", d)?;
    check_positive("p", p)?;
    check_positive("t", t)?;
    check_n(n)?;
    curve.validate()?;
    if t >= d / 4.0 {
        return Ok(LEADING_CONSTANT * t);
    }
    let q = 1.0 / (2.0 * p);
    let integral = curve.integral_pow(t, d / 4.0, q)?;
    Ok(LEADING_CONSTANT * (t + (n as f64).powf(-q) * integral))
}

/// Number of points of the geometric `t` grid.
pub const T_GRID_POINTS: usize = 64;

/// Minimizes [`bound_iid_integral`] over `t`, returning `(t, bound)`.
///
/// The bound is convex in `t` (its derivative `1 - n^{-1/2p} N(t)^{1/2p}` is
/// nondecreasing), so the best point of a 64-point geometric grid on
/// `[d 4^-20, d/4]` is refined by golden-section search between its grid
/// neighbours. Grid points below the curve's range are skipped.
pub fn minimize_iid_integral(curve: &CoveringCurve, d: f64, p: f64, n: u64) -> Result<(f64, f64)> {
    check_positive("diameter", d)?;
    let (lo, hi) = (d * 4f64.powi(-20), d / 4.0);
    let ratio = (hi / lo).powf(1.0 / (T_GRID_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..T_GRID_POINTS)
        .map(|k| if k + 1 == T_GRID_POINTS { hi } else { lo * ratio.powi(k as i32) })
        .filter(|&t| t > curve.min_delta())
        .collect();
    if grid.is_empty() {
        return Err(Error::Range("covering curve undefined on the whole t grid".into()));
    }
    let f = |t: f64| bound_iid_integral(curve, d, p, n, t);
    let mut best = (0, f64::INFINITY);
    for (k, &t) in grid.iter().enumerate() {
        let v = f(t)?;
        if v < best.1 {
            best = (k, v);
        }
    }
    let (mut a, mut b) = (grid[best.0.saturating_sub(1)], grid[(best.0 + 1).min(grid.len() - 1)]);
    let mut out = (grid[best.0], best.1);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    for (t, v) in [(x1, f1), (x2, f2)] {
        if v < out.1 {
            out = (t, v);
        }
    }
    Ok(out)
}

/// `(64/3) (alpha / (alpha - 2p)) d k_E^{1/alpha} n^{-1/alpha}`, for `alpha > 2p`.
pub fn bound_finite_dim(profile: &DimensionProfile, d: f64, p: f64, n: u64) -> Result<f64> {
    profile.validate()?;
    check_positive("diameter", d)?;
    check_positive("p", p)?;
    check_n(n)?;
    let alpha = profile.alpha;
    if alpha <= 2.0 * p {
        return Err(Error::InapplicableRegime(format!("alpha = {alpha} must exceed 2p = {}", 2.0 * p)));
    }
    Ok(LEADING_CONSTANT * alpha / (alpha - 2.0 * p) * d * profile.k_e.powf(1.0 / alpha) * (n as f64).powf(-1.0 / alpha))
}
