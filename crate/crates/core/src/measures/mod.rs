//! Metric point sets, discrete measures and seeded samplers.

pub mod io;
mod measure;
mod sampler;
mod space;

pub use measure::{neumaier_sum, DiscreteMeasure, PROBABILITY_TOLERANCE};
pub use sampler::{derive_seed, rng_from_seed, sample_empirical, Rng64, Sampler, SamplerKind};
pub use space::{
    coord_distance, subset_diameter, Diameter, MetricKind, MetricSpace, EXACT_DIAMETER_LIMIT, TABLE_VALIDATION_LIMIT,
};
