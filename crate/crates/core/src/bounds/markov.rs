use serde::{Deserialize, Serialize};

use super::{check_n, check_positive, DimensionProfile, LEADING_CONSTANT};
use crate::{Error, Result};

fn default_constant() -> f64 {
    LEADING_CONSTANT
}

fn default_threshold() -> f64 {
    1.0
}

/// Chain data entering the Markov bounds.
///
/// `moments` lists pairs `(theta, M_theta)` with
/// `M_theta = ∫ d(x0, x)^theta d pi` for a fixed base point `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovBoundInputs {
    /// Decay-of-variance constant.
    pub c: f64,
    /// Decay-of-variance rate, in `[0, 1)`.
    pub lambda: f64,
    /// `‖d nu / d pi‖_r`.
    pub radon_nikodym_norm: f64,
    /// Exponent of the norm above; `f64::INFINITY` allowed.
    pub r: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default)]
    pub moments: Vec<(f64, f64)>,
    /// Numerical constant in front of the unbounded-space bound.
    #[serde(default = "default_constant")]
    pub constant: f64,
    /// Largest `C ‖d nu/d pi‖_r / ((1 - lambda) n)` for which the
    /// unbounded-space bound is asserted.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_zeta() -> f64 {
    2.0
}

impl MarkovBoundInputs {
    pub fn new(c: f64, lambda: f64, radon_nikodym_norm: f64, r: f64) -> Result<Self> {
        let m = Self {
            c,
            lambda,
            radon_nikodym_norm,
            r,
            zeta: default_zeta(),
            moments: Vec::new(),
            constant: LEADING_CONSTANT,
            threshold: default_threshold(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("C", self.c)?;
        check_positive("Radon-Nikodym norm", self.radon_nikodym_norm)?;
        check_positive("constant", self.constant)?;
        check_positive("threshold", self.threshold)?;
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda = {} must lie in [0, 1)", self.lambda)));
        }
        if !(self.r >= 1.0) {
            return Err(Error::invalid(format!("r = {} must be at least 1", self.r)));
        }
        if !(self.zeta > 1.0) {
            return Err(Error::invalid(format!("zeta = {} must exceed 1", self.zeta)));
        }
        for &(theta, m) in &self.moments {
            if !(theta > 0.0 && theta.is_finite() && m >= 0.0 && m.is_finite()) {
                return Err(Error::invalid(format!("moment M_{theta} = {m}")));
            }
        }
        Ok(())
    }

    /// `M_theta` from the moment list.
    pub fn moment(&self, theta: f64) -> Result<f64> {
        self.moments
            .iter()
            .find(|(t, _)| (t - theta).abs() <= 1e-12 * theta.max(1.0))
            .map(|&(_, m)| m)
            .ok_or_else(|| Error::invalid(format!("moment M_{theta} not supplied")))
    }

    /// `C ‖d nu/d pi‖_r / ((1 - lambda) n)`.
    pub fn mixing_ratio(&self, n: u64) -> f64 {
        self.c * self.radon_nikodym_norm / ((1.0 - self.lambda) * n as f64)
    }
}

/// `alpha (1 + 1/r)`.
pub fn effective_dimension(alpha: f64, r: f64) -> f64 {
    alpha * (1.0 + 1.0 / r)
}

/// The signed ratio `alpha' / (alpha' - 2p)` with `alpha' = alpha (1 + 1/r)`.
/// It is negative whenever the bounded-space bound applies;
/// [`bound_markov`] uses its absolute value.
pub fn markov_leading_ratio(alpha: f64, r: f64, p: f64) -> f64 {
    let a = effective_dimension(alpha, r);
    a / (a - 2.0 * p)
}

/// Bound on `E_nu W_p(L_n, pi)` for a chain on a space of diameter `d`:
/// `(64/3) |alpha'/(alpha' - 2p)| k_E^{1/alpha} d (C ‖d nu/d pi‖_r / ((1 - lambda) n))^{1/alpha'}`
/// with `alpha' = alpha (1 + 1/r)`, for `2p > alpha'`.
pub fn bound_markov(profile: &DimensionProfile, d: f64, p: f64, n: u64, inputs: &MarkovBoundInputs) -> Result<f64> {
    profile.validate()?;
    inputs.validate()?;
    check_positive("diameter", d)?;
    check_positive("p", p)?;
    check_n(n)?;
    let a = effective_dimension(profile.alpha, inputs.r);
    if 2.0 * p <= a {
        return Err(Error::InapplicableRegime(format!("2p = {} must exceed alpha(1 + 1/r) = {a}", 2.0 * p)));
    }
    let ratio = markov_leading_ratio(profile.alpha, inputs.r, p);
    if ratio < 0.0 {
        log::debug!("leading ratio {ratio} is negative; using its absolute value");
    }
    Ok(LEADING_CONSTANT
        * ratio.abs()
        * profile.k_e.powf(1.0 / profile.alpha)
        * d
        * inputs.mixing_ratio(n).powf(1.0 / a))
}

/// Exponent `1 / (alpha (1 + 1/r) (1 + 1/zeta))` of the unbounded-space bound.
pub fn markov_unbounded_exponent(alpha: f64, r: f64, zeta: f64) -> f64 {
    1.0 / (effective_dimension(alpha, r) * (1.0 + 1.0 / zeta))
}

/// The moment constant `K(zeta)`, the largest of
/// `M_zeta / M_p^{zeta/p}`, `M_{zeta+2p} / M_p^{1+zeta/p}` and
/// `k_E^{(1+1/r)/2p} (2p/alpha') M_p^{alpha'/(2p^2)}`.
pub fn moment_constant(profile: &DimensionProfile, p: f64, inputs: &MarkovBoundInputs) -> Result<f64> {
    let (z, a) = (inputs.zeta, effective_dimension(profile.alpha, inputs.r));
    let mp = inputs.moment(p)?;
    check_positive("M_p", mp)?;
    let t1 = inputs.moment(z)? / mp.powf(z / p);
    let t2 = inputs.moment(z + 2.0 * p)? / mp.powf(1.0 + z / p);
    let t3 = profile.k_e.powf((1.0 + 1.0 / inputs.r) / (2.0 * p)) * (2.0 * p / a) * mp.powf(a / (2.0 * p * p));
    Ok(t1.max(t2).max(t3))
}

/// Unbounded-space Markov bound `constant K(zeta) (C ‖d nu/d pi‖_r / ((1 - lambda) n))^e`
/// with `e` from [`markov_unbounded_exponent`]. The flag is false when the
/// mixing ratio exceeds `inputs.threshold`, outside the regime where the
/// bound is claimed.
pub fn bound_markov_unbounded(
    profile: &DimensionProfile,
    p: f64,
    n: u64,
    inputs: &MarkovBoundInputs,
) -> Result<(f64, bool)> {
    profile.validate()?;
    inputs.validate()?;
    check_positive("p", p)?;
    check_n(n)?;
    let e = markov_unbounded_exponent(profile.alpha, inputs.r, inputs.zeta);
    if 2.0 * p * e <= 1.0 {
        return Err(Error::InapplicableRegime(format!(
            "2p = {} must exceed alpha(1 + 1/r)(1 + 1/zeta) = {}",
            2.0 * p,
            1.0 / e
        )));
    }
    let k = moment_constant(profile, p, inputs)?;
    let ratio = inputs.mixing_ratio(n);
    Ok((inputs.constant * k * ratio.powf(e), ratio <= inputs.threshold))
}
