use std::fmt;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gaussian::brownian_kl_basis;
use crate::{Error, Result};

use super::measure::DiscreteMeasure;
use super::space::{MetricKind, MetricSpace};

/// The generator behind every random stream in the crate: ChaCha with 8
/// rounds, seeded through `seed_from_u64`. Its output is fixed across
/// platforms and releases of `rand_chacha`.
pub type Rng64 = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of replicate `index` of an experiment seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed ^ index
}

type DrawFn = dyn Fn(&mut Rng64, &mut [f64]) + Send + Sync;

/// What a [`Sampler`] draws from.
#[derive(Clone)]
pub enum SamplerKind {
    /// Uniform law on `[0,1]^dim`, Euclidean metric.
    UniformCube { dim: usize },
    /// I.i.d. draws from a finitely supported law; samples are views of its space.
    FiniteSupport(DiscreteMeasure),
    /// Centered Gaussian with diagonal covariance, Euclidean metric.
    GaussianIid { variances: Vec<f64> },
    /// Brownian motion on `[0,1]` through its Karhunen-Loeve expansion
    /// truncated at `truncation` terms, observed at `grid` points, sup norm.
    BrownianKl { truncation: usize, grid: usize },
    /// Any point law given by a closure writing `dim` coordinates.
    Custom { dim: usize, metric: MetricKind, draw: Arc<DrawFn> },
}

impl fmt::Debug for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerKind::UniformCube { dim } => write!(f, "UniformCube({dim})"),
            SamplerKind::FiniteSupport(m) => write!(f, "FiniteSupport({} atoms)", m.len()),
            SamplerKind::GaussianIid { variances } => write!(f, "GaussianIid({variances:?})"),
            SamplerKind::BrownianKl { truncation, grid } => {
                write!(f, "BrownianKl(K={truncation}, G={grid})")
            }
            SamplerKind::Custom { dim, metric, .. } => write!(f, "Custom({dim}, {metric})"),
        }
    }
}

/// A seeded source of i.i.d. points.
///
/// Equal kind and seed give the same sample stream bit for bit. Use
/// [`with_seed`](Self::with_seed) for an independent stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl Sampler {
    pub fn new(kind: SamplerKind, seed: u64) -> Result<Self> {
        match &kind {
            SamplerKind::UniformCube { dim } | SamplerKind::Custom { dim, .. } if *dim == 0 => {
                return Err(Error::invalid("sampler dimension must be positive"));
            }
            SamplerKind::Custom { metric: MetricKind::Table, .. } => {
                return Err(Error::invalid("custom samplers need a coordinate metric"));
            }
            SamplerKind::FiniteSupport(m) if m.is_empty() || m.total_mass() <= 0.0 => {
                return Err(Error::invalid("finite-support sampler needs positive mass"));
            }
            SamplerKind::GaussianIid { variances }
                if variances.is_empty() || variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) =>
            {
                return Err(Error::invalid("variances must be finite, nonnegative and nonempty"));
            }
            SamplerKind::BrownianKl { truncation, grid } if *truncation == 0 || *grid == 0 => {
                return Err(Error::invalid("truncation and grid size must be positive"));
            }
            _ => {}
        }
        Ok(Self { kind, seed })
    }

    pub fn uniform_cube(dim: usize, seed: u64) -> Result<Self> {
        Self::new(SamplerKind::UniformCube { dim }, seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { kind: self.kind.clone(), seed }
    }

    /// Coordinate dimension of the samples; zero for table-metric laws.
    pub fn dim(&self) -> usize {
        match &self.kind {
            SamplerKind::UniformCube { dim } | SamplerKind::Custom { dim, .. } => *dim,
            SamplerKind::FiniteSupport(m) => m.space().dim(),
            SamplerKind::GaussianIid { variances } => variances.len(),
            SamplerKind::BrownianKl { grid, .. } => *grid,
        }
    }

    pub fn metric(&self) -> MetricKind {
        match &self.kind {
            SamplerKind::UniformCube { .. } | SamplerKind::GaussianIid { .. } => MetricKind::Euclidean,
            SamplerKind::FiniteSupport(m) => m.space().kind(),
            SamplerKind::BrownianKl { .. } => MetricKind::SupNorm,
            SamplerKind::Custom { metric, .. } => *metric,
        }
    }

    /// The empirical measure of `n` i.i.d. draws: `n` atoms of weight `1/n`,
    /// coincident draws kept as separate atoms.
    pub fn sample_empirical(&self, n: usize) -> Result<DiscreteMeasure> {
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let space = Arc::new(self.sample_space(n)?);
        DiscreteMeasure::new(space, (0..n).collect(), vec![1.0 / n as f64; n])
    }

    /// The `n` draws as a metric space.
    pub fn sample_space(&self, n: usize) -> Result<MetricSpace> {
        let mut rng = rng_from_seed(self.seed);
        match &self.kind {
            SamplerKind::FiniteSupport(m) => {
                let law = WeightedIndex::new(m.weights())
                    .map_err(|e| Error::invalid(format!("finite-support weights: {e}")))?;
                let map = (0..n).map(|_| m.support()[law.sample(&mut rng)]).collect();
                MetricSpace::indexed(m.space().clone(), map)
            }
            SamplerKind::UniformCube { dim } => {
                let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
                MetricSpace::from_flat(*dim, coords, MetricKind::Euclidean)
            }
            SamplerKind::GaussianIid { variances } => {
                let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
                let mut coords = Vec::with_capacity(n * sd.len());
                for _ in 0..n {
                    for s in &sd {
                        let z: f64 = rng.sample(StandardNormal);
                        coords.push(s * z);
                    }
                }
                MetricSpace::from_flat(sd.len(), coords, MetricKind::Euclidean)
            }
            SamplerKind::BrownianKl { truncation, grid } => {
                let basis = brownian_kl_basis(*truncation, *grid);
                let mut coords = vec![0.0; n * grid];
                for path in coords.chunks_mut(*grid) {
                    for row in basis.chunks(*grid) {
                        let z: f64 = rng.sample(StandardNormal);
                        for (x, b) in path.iter_mut().zip(row) {
                            *x += z * b;
                        }
                    }
                }
                MetricSpace::from_flat(*grid, coords, MetricKind::SupNorm)
            }
            SamplerKind::Custom { dim, metric, draw } => {
                let mut coords = vec![0.0; n * dim];
                for point in coords.chunks_mut(*dim) {
                    draw(&mut rng, point);
                }
                MetricSpace::from_flat(*dim, coords, *metric)
            }
        }
    }
}

/// Free-function form of [`Sampler::sample_empirical`].
pub fn sample_empirical(sampler: &Sampler, n: usize) -> Result<DiscreteMeasure> {
    sampler.sample_empirical(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::io::write_measure_csv;

    #[test]
    fn dirac_law_gives_repeated_atoms() {
        let space = Arc::new(MetricSpace::euclidean(vec![vec![0.3], vec![0.9]]).unwrap());
        let dirac = DiscreteMeasure::dirac(space, 1).unwrap();
        let s = Sampler::new(SamplerKind::FiniteSupport(dirac), 1).unwrap();
        let m = s.sample_empirical(5).unwrap();
        assert_eq!(m.len(), 5);
        for i in 0..5 {
            assert_eq!(m.atom(i), &[0.9]);
            assert_eq!(m.weights()[i], 0.2);
        }
    }

    #[test]
    fn uniform_cube_reproducible() {
        let s = Sampler::uniform_cube(1, 77).unwrap();
        let a = s.sample_empirical(3).unwrap();
        let b = s.sample_empirical(3).unwrap();
        for i in 0..3 {
            assert!((0.0..=1.0).contains(&a.atom(i)[0]));
            assert_eq!(a.atom(i)[0].to_bits(), b.atom(i)[0].to_bits());
            assert_eq!(a.weights()[i], 1.0 / 3.0);
        }
        let c = s.with_seed(78).sample_empirical(3).unwrap();
        assert_ne!(a.atom(0), c.atom(0));
    }

    #[test]
    fn uniform_square_mean() {
        let n = 10_000;
        let m = Sampler::uniform_cube(2, 2024).unwrap().sample_empirical(n).unwrap();
        let mean = (0..n).map(|i| m.atom(i)[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn zero_sample_size_is_rejected() {
        let s = Sampler::uniform_cube(1, 0).unwrap();
        assert!(matches!(s.sample_empirical(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn serialized_samples_are_byte_identical() {
        let kinds = vec![
            SamplerKind::UniformCube { dim: 3 },
            SamplerKind::GaussianIid { variances: vec![1.0, 4.0] },
            SamplerKind::BrownianKl { truncation: 8, grid: 16 },
        ];
        for kind in kinds {
            let s = Sampler::new(kind, 9).unwrap();
            let mut a = Vec::new();
            let mut b = Vec::new();
            let m = s.sample_empirical(40).unwrap();
            m.validate().unwrap();
            assert!(m.is_probability());
            write_measure_csv(&m, &mut a).unwrap();
            write_measure_csv(&s.sample_empirical(40).unwrap(), &mut b).unwrap();
            assert_eq!(a, b);
        }
    }
}
