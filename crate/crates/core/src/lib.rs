//! Convergence of empirical and occupation measures in Wasserstein distance.
//!
//! The crate pairs exact small-instance transport solvers with the analytic
//! rate bounds they are checked against:
//!
//! - [`measures`]: metric point sets, discrete measures and seeded samplers.
//! - [`transport`]: exact `W_p` by network simplex, a dense LP oracle and the
//!   one-dimensional quantile coupling.
//! - [`multiscale`]: nested partitions at scales `4^{-j} s`, the tree transport
//!   bound and the feasible plan it is built from.
//! - [`bounds`]: closed-form and quadrature rate bounds (i.i.d., finite
//!   dimensional, Markov, Gaussian).
//! - [`markov`]: finite kernels, spectral gaps, variance decay, chain simulation.
//! - [`gaussian`]: truncated Karhunen-Loeve processes, small-ball estimates,
//!   concentration checks and Lloyd quantizers.
//! - [`experiments`]: Monte Carlo orchestration, rate fitting and report output.
//!
//! ```
//! use std::sync::Arc;
//! use wrates::measures::{DiscreteMeasure, MetricSpace};
//! use wrates::transport::exact_wp;
//!
//! let space = Arc::new(MetricSpace::euclidean(vec![vec![0.0], vec![1.0]]).unwrap());
//! let mu = DiscreteMeasure::new(space.clone(), vec![0], vec![1.0]).unwrap();
//! let nu = DiscreteMeasure::new(space, vec![0, 1], vec![0.5, 0.5]).unwrap();
//! let (cost, _plan) = exact_wp(&mu, &nu, 1.0).unwrap();
//! assert!((cost - 0.5).abs() < 1e-12);
//! ```

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod bounds;
mod error;
pub mod experiments;
pub mod gaussian;
pub mod markov;
pub mod measures;
pub mod multiscale;
pub mod transport;

pub use error::{Error, Result};
