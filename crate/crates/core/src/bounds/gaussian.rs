use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_n, check_positive};
use crate::{Error, Result};

/// A small-ball function `psi(t) = -log mu(B(0, t))`, nonincreasing in `t`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmallBall {
    /// `scale * t^-exponent`.
    Power { scale: f64, exponent: f64 },
    /// Tabulated values on increasing `ts`, interpolated linearly in `log t`.
    Table { ts: Vec<f64>, values: Vec<f64> },
    #[serde(skip)]
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SmallBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmallBall::Power { scale, exponent } => write!(f, "Power({scale} t^-{exponent})"),
            SmallBall::Table { ts, .. } => write!(f, "Table({} points)", ts.len()),
            SmallBall::Func(_) => write!(f, "Func"),
        }
    }
}

impl SmallBall {
    pub fn table(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = SmallBall::Table { ts, values };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SmallBall::Power { scale, exponent } => {
                check_positive("psi scale", *scale)?;
                check_positive("psi exponent", *exponent)?;
            }
            SmallBall::Table { ts, values } => {
                if ts.len() < 2 || ts.len() != values.len() {
                    return Err(Error::invalid("small-ball table needs at least two (t, psi) pairs"));
                }
                if !ts.iter().all(|t| t.is_finite() && *t > 0.0) || ts.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("small-ball radii must be positive and increasing"));
                }
                if !values.iter().all(|v| v.is_finite() && *v >= 0.0) || values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::invalid("small-ball values must be finite, nonnegative and nonincreasing"));
                }
            }
            SmallBall::Func(_) => {}
        }
        Ok(())
    }

    /// Range of radii on which `psi` is known.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            SmallBall::Table { ts, .. } => (ts[0], ts[ts.len() - 1]),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(t > 0.0 && t >= lo && t <= hi) {
            return Err(Error::Range(format!("psi at t = {t} outside [{lo}, {hi}]")));
        }
        Ok(match self {
            SmallBall::Power { scale, exponent } => scale * t.powf(-exponent),
            SmallBall::Table { ts, values } => {
                let k = ts.partition_point(|&s| s <= t).clamp(1, ts.len() - 1);
                let w = (t / ts[k - 1]).ln() / (ts[k] / ts[k - 1]).ln();
                values[k - 1] + w * (values[k] - values[k - 1])
            }
            SmallBall::Func(f) => f(t),
        })
    }

    /// `inf { t : psi(t) <= y }` by bisection in `log t`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Range(format!("psi inverse at {y}")));
        }
        let (mut lo, mut hi) = match self.domain() {
            (a, b) if b.is_finite() => (a, b),
            _ => {
                let (mut a, mut b) = (1.0f64, 1.0f64);
                while self.eval(a)? <= y && a > 1e-300 {
                    a *= 0.5;
                }
                while self.eval(b)? > y && b < 1e300 {
                    b *= 2.0;
                }
                (a, b)
            }
        };
        if self.eval(lo)? <= y {
            return if self.domain().0 > 0.0 {
                Err(Error::Range(format!("psi inverse at {y} below the tabulated radii")))
            } else {
                Ok(lo)
            };
        }
        if self.eval(hi)? > y {
            return Err(Error::Range(format!("psi stays above {y} on its domain")));
        }
        while hi / lo - 1.0 > 1e-13 {
            let mid = (lo * hi).sqrt();
            if self.eval(mid)? <= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

fn default_c_g() -> f64 {
    1.0
}

/// Gaussian data: weak variance `sigma`, doubling constant `kappa` valid for
/// radii up to `t0`, the small-ball function and the unquantified leading
/// constant `c_g`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianBoundInputs {
    pub sigma: f64,
    pub kappa: f64,
    pub t0: f64,
    pub psi: SmallBall,
    #[serde(default = "default_c_g")]
    pub c_g: f64,
}

impl GaussianBoundInputs {
    pub fn new(sigma: f64, kappa: f64, t0: f64, psi: SmallBall) -> Result<Self> {
        let g = Self { sigma, kappa, t0, psi, c_g: 1.0 };
        g.validate()?;
        Ok(g)
    }

    /// Parameter checks plus `psi(t) <= kappa psi(2t)` for `t <= t0`, on the
    /// table points or on a geometric grid for callables.
    pub fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        check_positive("t0", self.t0)?;
        check_positive("c_g", self.c_g)?;
        if !(self.kappa > 1.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa = {} must exceed 1", self.kappa)));
        }
        self.psi.validate()?;
        let ts: Vec<f64> = match &self.psi {
            SmallBall::Power { scale: _, exponent } => {
                if 2f64.powf(*exponent) > self.kappa * (1.0 + 1e-12) {
                    return Err(Error::invalid(format!("psi = t^-{exponent} is not {}-doubling", self.kappa)));
                }
                return Ok(());
            }
            SmallBall::Table { ts, .. } => ts.iter().copied().filter(|&t| 2.0 * t <= ts[ts.len() - 1]).collect(),
            SmallBall::Func(_) => (0..=200).map(|k| self.t0 * 2f64.powf(-(k as f64) / 5.0)).collect(),
        };
        for t in ts.into_iter().filter(|&t| t <= self.t0) {
            let (a, b) = (self.psi.eval(t)?, self.psi.eval(2.0 * t)?);
            if a > self.kappa * b * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("doubling fails at t = {t}: psi = {a} > kappa * {b}")));
            }
        }
        Ok(())
    }

    /// Smallest `log n` for which the Gaussian bound is claimed:
    /// `(6 + kappa) max(log 2, psi(1), psi(t0/2), 1/sigma^2)`.
    pub fn log_n_threshold(&self) -> Result<f64> {
        let m = [2f64.ln(), self.psi.eval(1.0)?, self.psi.eval(self.t0 / 2.0)?, 1.0 / (self.sigma * self.sigma)]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((6.0 + self.kappa) * m)
    }
}

/// `c_g (psi^{-1}(log n / (6 + kappa)) + sigma n^{-1/(4(6 + kappa))})`, once
/// `log n` reaches [`GaussianBoundInputs::log_n_threshold`].
pub fn bound_gaussian(inputs: &GaussianBoundInputs, n: u64) -> Result<f64> {
    inputs.validate()?;
    check_n(n)?;
    let log_n = (n as f64).ln();
    let threshold = inputs.log_n_threshold()?;
    if log_n < threshold {
        return Err(Error::InapplicableRegime(format!("log n = {log_n} is below the threshold {threshold}")));
    }
    let k = 6.0 + inputs.kappa;
    Ok(inputs.c_g * (inputs.psi.inverse(log_n / k)? + inputs.sigma * (n as f64).powf(-1.0 / (4.0 * k))))
}

/// `psi^{-1}(log n)`, the quantization lower envelope.
pub fn quantization_lower_envelope(inputs: &GaussianBoundInputs, n: u64) -> Result<f64> {
    check_n(n)?;
    inputs.psi.inverse((n as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inverse_square() -> GaussianBoundInputs {
        GaussianBoundInputs::new(1.0, 4.0, 2.0, SmallBall::Power { scale: 1.0, exponent: 2.0 }).unwrap()
    }

    #[test]
    fn closed_form_inverse() {
        let g = inverse_square();
        assert!((g.psi.inverse(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.psi.inverse(4.0).unwrap() - 0.5).abs() < 1e-12);
        for y in [1e-3, 0.7, 10.0, 1e6] {
            assert!((g.psi.inverse(y).unwrap() - y.powf(-0.5)).abs() <= 1e-12 * y.powf(-0.5));
        }
    }

    #[test]
    fn threshold_and_value() {
        let g = inverse_square();
        assert!((g.log_n_threshold().unwrap() - 10.0).abs() < 1e-12);
        assert!(bound_gaussian(&g, 22_026).unwrap_err().is_inapplicable());
        let n = 22_027u64;
        let b = bound_gaussian(&g, n).unwrap();
        let expected = (10.0 / (n as f64).ln()).sqrt() + (n as f64).powf(-1.0 / 40.0);
        assert!((b - expected).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_n_and_kappa() {
        let g = inverse_square();
        let mut last = f64::INFINITY;
        for k in 0..200 {
            let b = bound_gaussian(&g, 30_000 + 10_000 * k * k).unwrap();
            assert!(b <= last);
            last = b;
        }
        let mut g8 = inverse_square();
        g8.kappa = 8.0;
        let n = 1u64 << 40;
        let first = |g: &GaussianBoundInputs| g.psi.inverse((n as f64).ln() / (6.0 + g.kappa)).unwrap();
        assert!(first(&g8) > first(&g));
    }

    #[test]
    fn envelope() {
        let g = inverse_square();
        assert!((quantization_lower_envelope(&g, 55).unwrap() - (55f64.ln()).powf(-0.5)).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for n in [2u64, 10, 1000, 1 << 30, u64::MAX] {
            let v = quantization_lower_envelope(&g, n).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 0.2);
    }

    #[test]
    fn table_matches_power() {
        let ts: Vec<f64> = (0..=400).map(|k| 2f64.powf(-10.0 + k as f64 / 20.0)).collect();
        let values: Vec<f64> = ts.iter().map(|t| t.powi(-2)).collect();
        let tab = SmallBall::table(ts, values).unwrap();
        let g = GaussianBoundInputs::new(1.0, 4.0, 2.0, tab).unwrap();
        assert!((g.psi.inverse(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(g.psi.inverse(1e9).is_err());
    }

    #[test]
    fn rejects_non_doubling() {
        let bad = GaussianBoundInputs::new(1.0, 3.0, 2.0, SmallBall::Power { scale: 1.0, exponent: 2.0 });
        assert!(bad.is_err());
        let f = SmallBall::Func(Arc::new(|t: f64| (1.0 / t).ln().max(0.0) + (-t).exp()));
        assert!(GaussianBoundInputs::new(1.0, 1.01, 0.25, f).is_err());
    }
}
