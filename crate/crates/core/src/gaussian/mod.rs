//! Truncated Gaussian processes under the sup norm on a grid.
//!
//! A [`GaussianProcessModel`] is a finite sum `sum_k g_k x_k` with i.i.d.
//! standard normal `g_k`, observed on a grid. The module estimates its
//! small-ball function, checks the doubling condition, measures the
//! concentration of `W_2(L_n, mu)` and compares empirical measures with Lloyd
//! quantizers. Statements about the law itself use a large sampled
//! reference measure in its place.

mod concentration;
mod model;
mod quantizer;
mod smallball;

pub use concentration::{
    concentration_tail, reference_measure, ConcentrationReport, TailPoint, MIN_RELIABLE_REPLICATES, REFERENCE_SIZE,
};
pub use model::{brownian_kl_basis, brownian_truncation_deficit, write_paths_csv, GaussianProcessModel};
pub use quantizer::{empirical_vs_quantizer, lloyd_from, lloyd_quantizer, Quantizer, QuantizerComparison};
pub use smallball::{
    check_doubling, estimate_small_ball, small_ball_curve, small_ball_table, DoublingCheck, SmallBallEstimate,
};
