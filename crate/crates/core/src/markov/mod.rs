//! Finite Markov chains: kernels, spectral gaps, decay of variance and
//! occupation measures.
//!
//! Only the decay-of-variance form `Var_pi P^n f <= C lambda^n Var_pi f` is
//! supported; weaker `L^p`-type decay conditions are not.

mod chain;
mod model;
mod spectral;

pub(crate) use chain::mean_and_stderr;
pub use chain::{occupation_deviation, occupation_measure, run_chain, OccupationDeviation, RandomWalkMetropolis};
pub use model::{
    metropolis_kernel, metropolis_on_grid, read_trajectory_csv, write_trajectory_csv, MarkovModel,
    DETAILED_BALANCE_TOLERANCE, INVARIANCE_TOLERANCE, ROW_SUM_TOLERANCE,
};
pub use spectral::{check_variance_decay, spectral_gap_finite, SpectralGap, VarianceDecay, SPECTRAL_STATE_LIMIT};
