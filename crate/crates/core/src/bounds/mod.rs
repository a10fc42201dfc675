//! Analytic upper bounds on `E W_p(L_n, mu)`.
//!
//! - i.i.d. samples: the covering-integral bound [`bound_iid_integral`] and
//!   its power-law form [`bound_finite_dim`].
//! - Markov chains: [`bound_markov`] on bounded spaces and
//!   [`bound_markov_unbounded`] under moment conditions.
//! - Gaussian measures: [`bound_gaussian`] in terms of the small-ball
//!   function, with [`quantization_lower_envelope`] for comparison.
//!
//! Every function checks its own preconditions and returns
//! [`Error::InapplicableRegime`](crate::Error::InapplicableRegime) outside them.

mod covering;
mod gaussian;
mod iid;
mod markov;

pub use covering::CoveringCurve;
pub use gaussian::{bound_gaussian, quantization_lower_envelope, GaussianBoundInputs, SmallBall};
pub use iid::{bound_finite_dim, bound_iid_integral, minimize_iid_integral, DimensionProfile, T_GRID_POINTS};
pub use markov::{
    bound_markov, bound_markov_unbounded, effective_dimension, markov_leading_ratio, markov_unbounded_exponent,
    moment_constant, MarkovBoundInputs,
};

use crate::{Error, Result};

/// The constant `64/3` in front of the i.i.d. and Markov bounds.
pub const LEADING_CONSTANT: f64 = 64.0 / 3.0;

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} must be positive and finite")))
    }
}

pub(crate) fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be at least 1"));
    }
    Ok(())
}
