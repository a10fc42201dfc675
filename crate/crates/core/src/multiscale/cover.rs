use crate::measures::MetricSpace;
use crate::{Error, Result};

/// Farthest-point (Gonzalez) ordering of a point subset.
///
/// `centers[k]` is the `k`-th selected point (a space index) and
/// `radii[k]` the covering radius of the first `k + 1` centers, so `radii`
/// is nonincreasing. Greedy covers at every radius are prefixes of this
/// order.
#[derive(Debug, Clone)]
pub struct GreedyPermutation {
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
}

impl GreedyPermutation {
    /// Runs the farthest-point rule from `subset[0]` until the covering
    /// radius is at most `stop` (use `0.0` for the full order).
    pub fn new(space: &MetricSpace, subset: &[usize], stop: f64) -> Result<Self> {
        let Some(&first) = subset.first() else {
            return Err(Error::invalid("greedy cover of an empty subset"));
        };
        let mut dist: Vec<f64> = subset.iter().map(|&x| space.distance(first, x)).collect();
        let mut centers = vec![first];
        let mut radii = Vec::new();
        loop {
            let (far, r) = dist
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &d)| if d > best.1 { (k, d) } else { best });
            radii.push(r.max(0.0));
            if r <= stop || r <= 0.0 {
                break;
            }
            let c = subset[far];
            centers.push(c);
            for (d, &x) in dist.iter_mut().zip(subset) {
                let e = space.distance(c, x);
                if e < *d {
                    *d = e;
                }
            }
        }
        Ok(Self { centers, radii })
    }

    /// Number of greedy centers needed for radius `delta`, `N̂(delta)`.
    pub fn count(&self, delta: f64) -> usize {
        self.radii.partition_point(|&r| r > delta) + 1
    }

    /// Greedy centers for radius `delta`.
    pub fn cover(&self, delta: f64) -> &[usize] {
        &self.centers[..self.count(delta).min(self.centers.len())]
    }
}

/// Centers within `delta` of every subset point, by the farthest-point rule.
///
/// `|centers|` bounds the covering number `N(X, delta)` from above and is at
/// most `N(X, delta / 2)`, since the centers are `delta`-separated.
pub fn greedy_cover(space: &MetricSpace, subset: &[usize], delta: f64) -> Result<Vec<usize>> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("cover radius {delta} must be positive")));
    }
    let perm = GreedyPermutation::new(space, subset, delta)?;
    Ok(perm.cover(delta).to_vec())
}

/// Smallest number of balls of radius `delta` centered at subset points
/// that cover the subset, by exhaustive search. Only for tiny sets.
pub fn brute_force_cover_count(space: &MetricSpace, subset: &[usize], delta: f64) -> Result<usize> {
    let n = subset.len();
    if n == 0 || n > 20 {
        return Err(Error::SizeLimit(format!("brute-force cover on {n} points (1..=20 allowed)")));
    }
    let balls: Vec<u32> = subset
        .iter()
        .map(|&c| {
            subset
                .iter()
                .enumerate()
                .filter(|&(_, &x)| space.distance(c, x) <= delta)
                .fold(0u32, |acc, (k, _)| acc | (1 << k))
        })
        .collect();
    let full = (1u32 << n) - 1;
    let mut reach = vec![false; 1 << n];
    reach[0] = true;
    let mut frontier = vec![0u32];
    for size in 1..=n {
        let mut next = Vec::new();
        for &set in &frontier {
            for &b in &balls {
                let s = set | b;
                if !reach[s as usize] {
                    reach[s as usize] = true;
                    next.push(s);
                }
            }
        }
        if reach[full as usize] {
            return Ok(size);
        }
        frontier = next;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: impl IntoIterator<Item = f64>) -> MetricSpace {
        MetricSpace::euclidean(xs.into_iter().map(|x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn large_radius_needs_one_center() {
        let s = line([0.0, 0.3, 1.0]);
        assert_eq!(greedy_cover(&s, &[0, 1, 2], 1.0).unwrap(), vec![0]);
        assert_eq!(greedy_cover(&s, &[0, 1, 2], 7.0).unwrap().len(), 1);
    }

    #[test]
    fn eleven_grid_points() {
        let s = line((0..=10).map(|k| k as f64 / 10.0));
        let all: Vec<usize> = (0..11).collect();
        let c = greedy_cover(&s, &all, 0.05).unwrap();
        assert!((6..=11).contains(&c.len()));
        // Balls must be centered at grid points, which isolates every point.
        assert_eq!(brute_force_cover_count(&s, &all, 0.05).unwrap(), 11);
        assert_eq!(brute_force_cover_count(&s, &all, 0.15).unwrap(), 4);
    }

    #[test]
    fn unit_interval_grid() {
        let s = line((0..1000).map(|k| k as f64 / 999.0));
        let all: Vec<usize> = (0..1000).collect();
        let c = greedy_cover(&s, &all, 0.1).unwrap();
        assert!((5..=10).contains(&c.len()), "{}", c.len());
        for x in 0..1000 {
            assert!(c.iter().any(|&k| s.distance(k, x) <= 0.1));
        }
    }

    #[test]
    fn rejects_bad_radius_and_empty_subset() {
        let s = line([0.0]);
        assert!(greedy_cover(&s, &[0], 0.0).is_err());
        assert!(greedy_cover(&s, &[0], f64::NAN).is_err());
        assert!(greedy_cover(&s, &[], 1.0).is_err());
    }

    #[test]
    fn permutation_prefixes_are_greedy_covers() {
        let s = line((0..50).map(|k| ((k * 37) % 50) as f64 / 7.0));
        let all: Vec<usize> = (0..50).collect();
        let perm = GreedyPermutation::new(&s, &all, 0.0).unwrap();
        assert!(perm.radii.windows(2).all(|w| w[0] >= w[1]));
        for delta in [0.05, 0.2, 0.5, 1.0, 3.0, 10.0] {
            assert_eq!(perm.cover(delta), greedy_cover(&s, &all, delta).unwrap().as_slice());
        }
    }
}
