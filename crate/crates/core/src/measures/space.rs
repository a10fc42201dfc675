use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Point sets above this size get a pivot-based diameter upper bound instead
/// of the exact pairwise maximum.
pub const EXACT_DIAMETER_LIMIT: usize = 20_000;

/// Distance tables above this size are not checked for the triangle inequality.
pub const TABLE_VALIDATION_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    SupNorm,
    /// Distances read from an explicit symmetric table.
    Table,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::SupNorm => "sup_norm",
            MetricKind::Table => "table",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "euclidean" => Ok(MetricKind::Euclidean),
            "sup_norm" | "sup" | "supnorm" => Ok(MetricKind::SupNorm),
            "table" | "custom" | "custom-distance-table" => Ok(MetricKind::Table),
            other => Err(Error::Parse(format!("unknown metric kind `{other}`"))),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Diameter of a point set, exact or an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diameter {
    pub value: f64,
    /// False when `value` is the pivot upper bound `2 max_x d(x0, x)`.
    pub exact: bool,
}

/// Distance between two coordinate vectors under a coordinate metric.
#[inline]
pub fn coord_distance(kind: MetricKind, a: &[f64], b: &[f64]) -> f64 {
    match kind {
        MetricKind::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        MetricKind::SupNorm => a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
        MetricKind::Table => panic!("table metrics have no coordinate distance"),
    }
}

enum Backing {
    Coords(Vec<f64>),
    Table(Vec<f64>),
    /// Point `i` is point `map[i]` of `parent`; repeats are allowed.
    Indexed {
        parent: Arc<MetricSpace>,
        map: Vec<usize>,
    },
}

/// A finite metric space: coordinate points under a norm, an explicit
/// distance table, or an indexed view of another space.
///
/// Immutable after construction. The diameter is computed on first use and
/// cached.
pub struct MetricSpace {
    kind: MetricKind,
    dim: usize,
    len: usize,
    backing: Backing,
    diameter: OnceLock<Diameter>,
}

impl fmt::Debug for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricSpace")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("len", &self.len)
            .field("indexed", &matches!(self.backing, Backing::Indexed { .. }))
            .finish()
    }
}

impl MetricSpace {
    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_points(points, MetricKind::Euclidean)
    }

    pub fn from_points(points: Vec<Vec<f64>>, kind: MetricKind) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("points must all have the same dimension"));
        }
        let coords = points.into_iter().flatten().collect();
        Self::from_flat(dim, coords, kind)
    }

    /// Builds a coordinate space from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>, kind: MetricKind) -> Result<Self> {
        if kind == MetricKind::Table {
            return Err(Error::invalid("use MetricSpace::from_table for table metrics"));
        }
        if dim == 0 {
            return Err(Error::invalid("coordinate dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid("coordinate buffer is not a multiple of the dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        Ok(Self { kind, dim, len: coords.len() / dim, backing: Backing::Coords(coords), diameter: OnceLock::new() })
    }

    /// Builds a space from a dense `n x n` distance table (row-major).
    ///
    /// Symmetry, zero diagonal and nonnegativity are always checked; the
    /// triangle inequality only for at most [`TABLE_VALIDATION_LIMIT`] points.
    pub fn from_table(n: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != n * n {
            return Err(Error::invalid("distance table must be n x n"));
        }
        for i in 0..n {
            if table[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("d({i},{i}) must be zero")));
            }
            for j in 0..n {
                let d = table[i * n + j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::invalid(format!("d({i},{j}) must be finite and nonnegative")));
                }
                if d != table[j * n + i] {
                    return Err(Error::invalid(format!("distance table is not symmetric at ({i},{j})")));
                }
            }
        }
        if n <= TABLE_VALIDATION_LIMIT {
            for i in 0..n {
                for j in 0..n {
                    let dij = table[i * n + j];
                    let slack = 1e-12 * (1.0 + dij);
                    for k in 0..n {
                        if dij > table[i * n + k] + table[k * n + j] + slack {
                            return Err(Error::invalid(format!("triangle inequality fails on ({i},{k},{j})")));
                        }
                    }
                }
            }
        } else {
            log::warn!("distance table with {n} points trusted without triangle check");
        }
        Ok(Self { kind: MetricKind::Table, dim: 0, len: n, backing: Backing::Table(table), diameter: OnceLock::new() })
    }

    /// A view whose point `i` is point `map[i]` of `parent`.
    ///
    /// Used to hold repeated atoms (for instance i.i.d. draws from a finitely
    /// supported law) as distinct points.
    pub fn indexed(parent: Arc<MetricSpace>, map: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = map.iter().find(|&&i| i >= parent.len()) {
            return Err(Error::invalid(format!("index {bad} out of range for parent space")));
        }
        // Flatten chains of views so lookups stay one level deep.
        let (parent, map) = match &parent.backing {
            Backing::Indexed { parent: grand, map: inner } => (grand.clone(), map.iter().map(|&i| inner[i]).collect()),
            _ => (parent, map),
        };
        Ok(Self {
            kind: parent.kind,
            dim: parent.dim,
            len: map.len(),
            backing: Backing::Indexed { parent, map },
            diameter: OnceLock::new(),
        })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Coordinate dimension; zero for table metrics.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn has_coordinates(&self) -> bool {
        self.kind != MetricKind::Table
    }

    /// Coordinates of point `i`. Empty for table metrics.
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        match &self.backing {
            Backing::Coords(c) => &c[i * self.dim..(i + 1) * self.dim],
            Backing::Table(_) => &[],
            Backing::Indexed { parent, map } => parent.point(map[i]),
        }
    }

    /// The underlying space and index of point `i`, looking through views.
    #[inline]
    pub fn resolve(&self, i: usize) -> (&MetricSpace, usize) {
        match &self.backing {
            Backing::Indexed { parent, map } => (parent, map[i]),
            _ => (self, i),
        }
    }

    /// The underlying space, looking through views.
    pub fn root(&self) -> &MetricSpace {
        match &self.backing {
            Backing::Indexed { parent, .. } => parent,
            _ => self,
        }
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.backing {
            Backing::Coords(_) => coord_distance(self.kind, self.point(i), self.point(j)),
            Backing::Table(t) => t[i * self.len + j],
            Backing::Indexed { parent, map } => parent.distance(map[i], map[j]),
        }
    }

    /// Whether distances between points of `self` and `other` are defined.
    pub fn compatible(&self, other: &MetricSpace) -> bool {
        let (a, b) = (self.root(), other.root());
        std::ptr::eq(a, b) || (a.has_coordinates() && a.kind == b.kind && a.dim == b.dim)
    }

    /// Distance from point `i` of `self` to point `j` of `other`.
    ///
    /// Only meaningful when [`compatible`](Self::compatible) holds.
    #[inline]
    pub fn cross_distance(&self, i: usize, other: &MetricSpace, j: usize) -> f64 {
        let (a, ia) = self.resolve(i);
        let (b, jb) = other.resolve(j);
        if std::ptr::eq(a, b) {
            a.distance(ia, jb)
        } else {
            coord_distance(a.kind, a.point(ia), b.point(jb))
        }
    }

    /// Diameter of the whole point set, cached after the first call.
    pub fn diameter(&self) -> Diameter {
        *self.diameter.get_or_init(|| {
            let all: Vec<usize> = (0..self.len).collect();
            if all.is_empty() {
                Diameter { value: 0.0, exact: true }
            } else {
                subset_diameter(self, &all).expect("nonempty subset")
            }
        })
    }
}

/// Diameter of a subset of points.
///
/// Exact maximum over all pairs for at most [`EXACT_DIAMETER_LIMIT`] points;
/// above that, `2 max_x d(x0, x)` for the first point `x0`, flagged inexact.
pub fn subset_diameter(space: &MetricSpace, subset: &[usize]) -> Result<Diameter> {
    let Some(&pivot) = subset.first() else {
        return Err(Error::invalid("diameter of an empty subset"));
    };
    if subset.len() > EXACT_DIAMETER_LIMIT {
        let far = subset.iter().map(|&j| space.distance(pivot, j)).fold(0.0, f64::max);
        return Ok(Diameter { value: 2.0 * far, exact: false });
    }
    let mut best = 0.0f64;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            best = best.max(space.distance(i, j));
        }
    }
    Ok(Diameter { value: best, exact: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_space(kind: MetricKind, n: usize, dim: usize, seed: u64) -> MetricSpace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        MetricSpace::from_flat(dim, coords, kind).unwrap()
    }

    #[test]
    fn single_point_has_zero_diameter() {
        let s = MetricSpace::euclidean(vec![vec![0.3, 0.7]]).unwrap();
        assert_eq!(subset_diameter(&s, &[0]).unwrap().value, 0.0);
    }

    #[test]
    fn unit_segment_diameter() {
        let s = MetricSpace::euclidean(vec![vec![0.0], vec![1.0]]).unwrap();
        let d = subset_diameter(&s, &[0, 1]).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(d.exact);
    }

    #[test]
    fn empty_subset_is_rejected() {
        let s = MetricSpace::euclidean(vec![vec![0.0]]).unwrap();
        assert!(matches!(subset_diameter(&s, &[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn diameter_matches_brute_force_pairs() {
        let s = random_space(MetricKind::Euclidean, 100, 2, 11);
        let mut brute = 0.0f64;
        let mut pairs = 0;
        for i in 0..100 {
            for j in (i + 1)..100 {
                let (a, b) = (s.point(i), s.point(j));
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                brute = brute.max(d);
                pairs += 1;
            }
        }
        assert_eq!(pairs, 4950);
        assert_eq!(s.diameter().value, brute);
    }

    #[test]
    fn large_subsets_get_flagged_upper_bound() {
        let s = random_space(MetricKind::SupNorm, EXACT_DIAMETER_LIMIT + 1, 1, 3);
        let d = s.diameter();
        assert!(!d.exact);
        assert!(d.value <= 2.0 && d.value >= 1.0);
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let euc = random_space(MetricKind::Euclidean, n, 3, 1);
        let sup = random_space(MetricKind::SupNorm, n, 3, 2);
        let mut table = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                table[i * n + j] = euc.distance(i, j);
            }
        }
        let tab = MetricSpace::from_table(n, table).unwrap();
        for space in [&euc, &sup, &tab] {
            for _ in 0..10_000 {
                let (x, y, z) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                assert_eq!(space.distance(x, x), 0.0);
                assert_eq!(space.distance(x, y), space.distance(y, x));
                assert!(space.distance(x, z) <= space.distance(x, y) + space.distance(y, z) + 1e-12);
            }
        }
    }

    #[test]
    fn table_rejects_triangle_violation() {
        let t = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        assert!(MetricSpace::from_table(3, t).is_err());
    }

    #[test]
    fn cross_distance_between_coordinate_spaces() {
        let a = MetricSpace::euclidean(vec![vec![0.0, 0.0]]).unwrap();
        let b = MetricSpace::euclidean(vec![vec![3.0, 4.0]]).unwrap();
        assert!(a.compatible(&b));
        assert_eq!(a.cross_distance(0, &b, 0), 5.0);
        let c = MetricSpace::from_points(vec![vec![3.0, 4.0]], MetricKind::SupNorm).unwrap();
        assert!(!a.compatible(&c));
    }

    #[test]
    fn indexed_views_share_parent_distances() {
        let t = vec![0.0, 2.0, 2.0, 0.0];
        let parent = Arc::new(MetricSpace::from_table(2, t).unwrap());
        let view = MetricSpace::indexed(parent.clone(), vec![1, 1, 0]).unwrap();
        assert_eq!(view.len(), 3);
        assert_eq!(view.distance(0, 1), 0.0);
        assert_eq!(view.distance(0, 2), 2.0);
        assert!(view.compatible(&parent));
        assert_eq!(view.cross_distance(2, &parent, 1), 2.0);
        let nested = Arc::new(view);
        let again = MetricSpace::indexed(nested, vec![2]).unwrap();
        assert_eq!(again.resolve(0).1, 0);
        assert!(MetricSpace::indexed(parent, vec![5]).is_err());
    }
}
