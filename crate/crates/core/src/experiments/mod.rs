//! Monte Carlo rate experiments.
//!
//! An [`ExperimentConfig`] names a scenario, the exponent `p`, a grid of
//! sample sizes and a replicate count. [`run_experiment`] estimates
//! `E W_p(L_n, mu)` at each size, evaluates the scenario's analytic bound,
//! fits the log-log slope and writes `results.csv`, `report.json`,
//! `plot.svg` and `config.json` under `outputs/<config hash>/`.
//!
//! Replicate `k` is seeded with `seed ^ k` at every grid size; the
//! reference measure and other auxiliary draws use seeds `seed ^ (2^64 - j)`
//! for small `j`.

mod config;
mod estimate;
mod run;
mod svg;

pub use config::{ExperimentConfig, GridTarget, Scenario};
pub use estimate::{estimate_mean_wp, fit_rate, MeanEstimate, RateFit, Source};
pub use run::{
    compute_report, run_experiment, run_experiment_with_jobs, write_artifacts, Constants, GaussianDetails, GaussianRow,
    GridRefinement, IidDetails, IntegralBound, MarkovDetails, RateReport, RateRow,
};
pub use svg::{loglog_svg, Series};
