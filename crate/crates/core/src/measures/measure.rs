use std::collections::HashSet;
use std::sync::Arc;

use crate::{Error, Result};

use super::space::MetricSpace;

/// Tolerance on the total mass of a probability measure.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Compensated (Neumaier) sum.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A finitely supported measure on a [`MetricSpace`].
///
/// `support[i]` indexes a point of `space` carrying mass `weights[i]`.
/// Support indices are distinct; repeated atoms live as distinct points of
/// the space (see [`MetricSpace::indexed`]).
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    space: Arc<MetricSpace>,
    support: Vec<usize>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl DiscreteMeasure {
    /// A finite measure with nonnegative weights.
    pub fn new(space: Arc<MetricSpace>, support: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::invalid("support and weights differ in length"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!("weight {w} is not a finite nonnegative number")));
        }
        if let Some(&i) = support.iter().find(|&&i| i >= space.len()) {
            return Err(Error::invalid(format!("support index {i} out of range")));
        }
        let mut seen = HashSet::with_capacity(support.len());
        if let Some(&i) = support.iter().find(|&&i| !seen.insert(i)) {
            return Err(Error::invalid(format!("support index {i} repeated")));
        }
        let total_mass = neumaier_sum(weights.iter().copied());
        Ok(Self { space, support, weights, total_mass })
    }

    /// A probability measure: like [`new`](Self::new), and the weights must sum
    /// to one within [`PROBABILITY_TOLERANCE`].
    pub fn probability(space: Arc<MetricSpace>, support: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(space, support, weights)?;
        if (m.total_mass - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {}, not 1", m.total_mass)));
        }
        Ok(m)
    }

    /// Uniform probability over every point of `space`.
    pub fn uniform(space: Arc<MetricSpace>) -> Result<Self> {
        let n = space.len();
        if n == 0 {
            return Err(Error::invalid("uniform measure on an empty space"));
        }
        Self::new(space, (0..n).collect(), vec![1.0 / n as f64; n])
    }

    /// Dirac mass at point `i`.
    pub fn dirac(space: Arc<MetricSpace>, i: usize) -> Result<Self> {
        Self::new(space, vec![i], vec![1.0])
    }

    /// A measure given by a dense weight vector over all points of `space`;
    /// zero entries are left out of the support.
    pub fn from_dense(space: Arc<MetricSpace>, dense: &[f64]) -> Result<Self> {
        if dense.len() != space.len() {
            return Err(Error::invalid("dense weight vector does not match the space"));
        }
        let (support, weights) = dense.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(i, &w)| (i, w)).unzip();
        Self::new(space, support, weights)
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass - 1.0).abs() <= PROBABILITY_TOLERANCE
    }

    /// Coordinates of atom `i`.
    pub fn atom(&self, i: usize) -> &[f64] {
        self.space.point(self.support[i])
    }

    /// Distance between atom `i` of `self` and atom `j` of `other`.
    #[inline]
    pub fn atom_distance(&self, i: usize, other: &DiscreteMeasure, j: usize) -> f64 {
        self.space.cross_distance(self.support[i], &other.space, other.support[j])
    }

    /// Dense weight vector over all points of the space.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.space.len()];
        for (&i, &w) in self.support.iter().zip(&self.weights) {
            dense[i] = w;
        }
        dense
    }

    /// Re-checks every invariant.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.space.clone(), self.support.clone(), self.weights.clone()).map(|_| ())
    }

    /// The same measure scaled to total mass `mass`.
    pub fn rescaled(&self, mass: f64) -> Result<Self> {
        if self.total_mass <= 0.0 {
            return Err(Error::invalid("cannot rescale a zero measure"));
        }
        let f = mass / self.total_mass;
        Self::new(self.space.clone(), self.support.clone(), self.weights.iter().map(|w| w * f).collect())
    }

    /// Merges atoms at identical coordinates (or identical underlying points
    /// for table metrics), summing their weights, in order of first appearance.
    pub fn merge_coincident(&self) -> Result<Self> {
        let mut index = std::collections::HashMap::new();
        let mut reps = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (&s, &w) in self.support.iter().zip(&self.weights) {
            let key: Vec<u64> = if self.space.has_coordinates() {
                self.space.point(s).iter().map(|c| (c + 0.0).to_bits()).collect()
            } else {
                vec![self.space.resolve(s).1 as u64]
            };
            match index.get(&key) {
                Some(&k) => weights[k] += w,
                None => {
                    index.insert(key, reps.len());
                    reps.push(s);
                    weights.push(w);
                }
            }
        }
        Self::new(self.space.clone(), reps, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::euclidean((0..n).map(|i| vec![i as f64]).collect()).unwrap())
    }

    #[test]
    fn rejects_negative_and_repeated() {
        let s = line(3);
        assert!(DiscreteMeasure::new(s.clone(), vec![0, 1], vec![1.0, -0.1]).is_err());
        assert!(DiscreteMeasure::new(s.clone(), vec![0, 0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(s.clone(), vec![3], vec![1.0]).is_err());
        assert!(DiscreteMeasure::probability(s, vec![0, 1], vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn sub_probability_keeps_total_mass() {
        let m = DiscreteMeasure::new(line(3), vec![0, 2], vec![0.25, 0.5]).unwrap();
        assert_eq!(m.total_mass(), 0.75);
        assert!(!m.is_probability());
        assert_eq!(m.to_dense(), vec![0.25, 0.0, 0.5]);
    }

    #[test]
    fn compensated_sum_of_many_small_weights() {
        let n = 1_000_003;
        let m = DiscreteMeasure::uniform(line(n)).unwrap();
        assert!((m.total_mass() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn merge_sums_coincident_atoms() {
        let s = Arc::new(MetricSpace::euclidean(vec![vec![1.0], vec![2.0], vec![1.0]]).unwrap());
        let m = DiscreteMeasure::uniform(s).unwrap().merge_coincident().unwrap();
        assert_eq!(m.support(), &[0, 1]);
        assert!((m.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
    }
}
