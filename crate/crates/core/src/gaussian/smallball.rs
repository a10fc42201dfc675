use serde::{Deserialize, Serialize};

use super::GaussianProcessModel;
use crate::bounds::SmallBall;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEstimate {
    pub t: f64,
    /// `-log` of the fraction of paths with sup norm at most `t`; infinite
    /// when no path qualifies (`null` in JSON).
    #[serde(with = "infinite_as_null")]
    pub psi_hat: f64,
    /// Delta-method standard error `sqrt((1 - q) / (mc q))`.
    #[serde(with = "infinite_as_null")]
    pub stderr: f64,
    pub hits: usize,
    pub mc: usize,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl SmallBallEstimate {
    pub fn is_infinite(&self) -> bool {
        self.hits == 0
    }
}

fn estimate_from_norms(norms: &[f64], t: f64) -> SmallBallEstimate {
    let mc = norms.len();
    let hits = norms.iter().filter(|&&x| x <= t).count();
    if hits == 0 {
        return SmallBallEstimate { t, psi_hat: f64::INFINITY, stderr: f64::INFINITY, hits, mc };
    }
    let q = hits as f64 / mc as f64;
    SmallBallEstimate { t, psi_hat: -q.ln(), stderr: ((1.0 - q) / (mc as f64 * q)).sqrt(), hits, mc }
}

/// Monte Carlo estimate of `psi(t) = -log P(‖X‖ <= t)` from `mc` paths.
pub fn estimate_small_ball(model: &GaussianProcessModel, t: f64, mc: usize, seed: u64) -> Result<SmallBallEstimate> {
    Ok(small_ball_curve(model, &[t], mc, seed)?[0])
}

/// [`estimate_small_ball`] at several radii from one set of paths.
pub fn small_ball_curve(
    model: &GaussianProcessModel,
    ts: &[f64],
    mc: usize,
    seed: u64,
) -> Result<Vec<SmallBallEstimate>> {
    if mc == 0 {
        return Err(Error::invalid("need at least one Monte Carlo path"));
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::invalid(format!("radius {t} must be positive")));
    }
    let norms = model.sup_norms(mc, seed);
    Ok(ts.iter().map(|&t| estimate_from_norms(&norms, t)).collect())
}

/// Tabulated [`SmallBall`] from finite estimates. Noise is removed by
/// replacing each value with the running minimum from the left, so the table
/// is nonincreasing.
pub fn small_ball_table(estimates: &[SmallBallEstimate]) -> Result<SmallBall> {
    let mut rows: Vec<(f64, f64)> = estimates.iter().filter(|e| !e.is_infinite()).map(|e| (e.t, e.psi_hat)).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut floor = f64::INFINITY;
    for r in rows.iter_mut() {
        floor = floor.min(r.1);
        r.1 = floor;
    }
    let (ts, values) = rows.into_iter().unzip();
    SmallBall::table(ts, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingCheck {
    /// Smallest `kappa` with `psi(t) <= kappa psi(2t)` over dyadic table pairs up to `t0_hat`.
    pub kappa_hat: f64,
    /// Largest `t` such that every dyadic pair `(s, 2s)` with `s <= t` has a
    /// finite, positive ratio.
    pub t0_hat: f64,
    /// Number of dyadic pairs used.
    pub pairs: usize,
    /// `kappa_hat <= 1`, outside the admissible range `kappa > 1`.
    pub boundary: bool,
}

/// Doubling constant of a tabulated small-ball function on a geometric grid
/// containing dyadic pairs `(t, 2t)`. Rows with infinite `psi` are skipped.
pub fn check_doubling(ts: &[f64], psi: &[f64]) -> Result<DoublingCheck> {
    if ts.len() != psi.len() {
        return Err(Error::invalid("radii and values differ in length"));
    }
    if ts.windows(2).any(|w| !(w[0] < w[1])) || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("radii must be positive and increasing"));
    }
    let mut pairs = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        if !psi[i].is_finite() {
            continue;
        }
        let j = ts.partition_point(|&s| s < 2.0 * t * (1.0 - 1e-9));
        if j < ts.len() && (ts[j] / (2.0 * t) - 1.0).abs() <= 1e-9 {
            pairs.push((t, psi[i], psi[j]));
        }
    }
    if pairs.is_empty() {
        return Err(Error::invalid("table has no dyadic pair (t, 2t)"));
    }
    let mut kappa = f64::NEG_INFINITY;
    let mut t0 = 0.0;
    let mut used = 0;
    for &(t, a, b) in &pairs {
        if !(b > 0.0 && b.is_finite()) {
            break;
        }
        kappa = kappa.max(a / b);
        t0 = t;
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid("psi vanishes at every doubled radius"));
    }
    Ok(DoublingCheck { kappa_hat: kappa, t0_hat: t0, pairs: used, boundary: kappa <= 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_grid(lo: f64, octaves: usize, per_octave: usize) -> Vec<f64> {
        (0..=octaves * per_octave).map(|k| lo * 2f64.powf(k as f64 / per_octave as f64)).collect()
    }

    #[test]
    fn inverse_square_doubles_by_four() {
        let ts = dyadic_grid(0.01, 6, 4);
        let psi: Vec<f64> = ts.iter().map(|t| t.powi(-2)).collect();
        let d = check_doubling(&ts, &psi).unwrap();
        assert!((d.kappa_hat - 4.0).abs() < 1e-9);
        assert!(!d.boundary);
    }

    #[test]
    fn log_ratio_peaks_at_right_end() {
        let ts: Vec<f64> = dyadic_grid(1e-4, 11, 3).into_iter().filter(|&t| t < 0.5).collect();
        let psi: Vec<f64> = ts.iter().map(|t| (1.0 / t).ln()).collect();
        let d = check_doubling(&ts, &psi).unwrap();
        let t = d.t0_hat;
        assert!((d.kappa_hat - (1.0 / t).ln() / (1.0 / (2.0 * t)).ln()).abs() < 1e-12);
        assert!(2.0 * t <= ts[ts.len() - 1] && 4.0 * t > ts[ts.len() - 1]);
    }

    #[test]
    fn constant_is_boundary() {
        let ts = dyadic_grid(0.1, 2, 1);
        let d = check_doubling(&ts, &[3.0; 3]).unwrap();
        assert_eq!(d.kappa_hat, 1.0);
        assert!(d.boundary);
        assert!(check_doubling(&[0.1, 0.15], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn scalar_normal_small_ball() {
        // P(|Z| <= 1) = erf(1/√2).
        let m = GaussianProcessModel::scalar(1.0).unwrap();
        let e = estimate_small_ball(&m, 1.0, 100_000, 8).unwrap();
        let exact = -statrs::function::erf::erf(std::f64::consts::FRAC_1_SQRT_2).ln();
        assert!((exact - 0.3817).abs() < 1e-4);
        assert!((e.psi_hat - exact).abs() < 3.0 * e.stderr, "{} vs {exact}", e.psi_hat);
        let big = estimate_small_ball(&m, 1e3, 1000, 8).unwrap();
        assert_eq!(big.psi_hat, 0.0);
        let tiny = estimate_small_ball(&m, 1e-9, 1000, 8).unwrap();
        assert!(tiny.is_infinite());
    }

    #[test]
    fn table_is_monotone() {
        let m = GaussianProcessModel::brownian_kl(32, 32).unwrap();
        let ts = dyadic_grid(0.2, 4, 4);
        let est = small_ball_curve(&m, &ts, 5000, 2).unwrap();
        for w in est.windows(2) {
            assert!(w[0].psi_hat >= w[1].psi_hat);
        }
        let tab = small_ball_table(&est).unwrap();
        assert!(tab.inverse(1.0).is_ok());
    }

    #[test]
    fn empty_estimate_round_trips_through_json() {
        let e = estimate_from_norms(&[2.0, 3.0], 1.0);
        assert!(e.is_infinite());
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"psi_hat\":null"));
        let back: SmallBallEstimate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);
    }
}
