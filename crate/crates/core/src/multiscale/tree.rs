use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::measures::{subset_diameter, MetricSpace};
use crate::{Error, Result};

use super::cover::GreedyPermutation;

/// Relative slack allowed on diameter checks.
const DIAMETER_SLACK: f64 = 1e-12;

/// One partition of the point set at scale `4^-j s`.
#[derive(Debug, Clone, Serialize)]
pub struct Level {
    pub j: i32,
    /// Cells as lists of space indices, in construction order.
    pub cells: Vec<Vec<usize>>,
    /// A member of each cell.
    pub centers: Vec<usize>,
    /// Index of the enclosing cell one level up; empty at the coarsest level.
    pub parents: Vec<usize>,
    pub diameters: Vec<f64>,
    /// Greedy cover size at radius `4^-j s`.
    pub greedy_count: usize,
}

/// Nested partitions `X_{j,l}` for `u <= j <= v`, coarse to fine.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionTree {
    #[serde(skip)]
    space: Arc<MetricSpace>,
    pub points: Vec<usize>,
    pub base_scale: f64,
    pub u: i32,
    pub v: i32,
    pub diameter: f64,
    /// `levels[k]` is level `u + k`.
    pub levels: Vec<Level>,
    #[serde(skip)]
    leaf_of: HashMap<usize, usize>,
}

/// `4^-j s`, rejecting results that overflow or underflow.
pub fn scale_radius(s: f64, j: i32) -> Result<f64> {
    let r = s * 4f64.powi(-j);
    if r.is_finite() && r.is_normal() {
        Ok(r)
    } else {
        Err(Error::ScaleRange(format!("4^-{j} * {s} is not a normal float")))
    }
}

/// For every point, the first ball (in center order) within `radius`.
fn first_ball(space: &MetricSpace, points: &[usize], centers: &[usize], radius: f64) -> Vec<usize> {
    points
        .iter()
        .map(|&x| centers.iter().position(|&c| space.distance(c, x) <= radius).expect("greedy balls cover every point"))
        .collect()
}

impl PartitionTree {
    /// Builds the partitions by greedy ball covers at radii `4^-j s`.
    ///
    /// The finest level assigns each point to the first ball containing it;
    /// each coarser cell `l` collects the finer cells that meet ball `l` and
    /// were not taken by an earlier ball. Empty cells are dropped.
    pub fn build(space: Arc<MetricSpace>, subset: &[usize], s: f64, u: i32, v: i32) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::invalid("partition tree needs at least one point"));
        }
        if u >= v {
            return Err(Error::invalid(format!("levels need u < v (got u = {u}, v = {v})")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("base scale {s} must be positive")));
        }
        scale_radius(s, u)?;
        let finest = scale_radius(s, v)?;
        if let Some(&bad) = subset.iter().find(|&&i| i >= space.len()) {
            return Err(Error::invalid(format!("point {bad} outside the space")));
        }
        let points = subset.to_vec();
        let mut leaf_of = HashMap::with_capacity(points.len());
        for (k, &x) in points.iter().enumerate() {
            if leaf_of.insert(x, k).is_some() {
                return Err(Error::invalid(format!("point {x} repeated in subset")));
            }
        }
        let diameter = subset_diameter(&space, &points)?.value;
        let perm = GreedyPermutation::new(&space, &points, finest)?;

        // Cell membership as point positions; start at the finest level.
        let n_levels = (v - u + 1) as usize;
        let mut levels_rev: Vec<(i32, Vec<Vec<usize>>, Vec<usize>, Vec<usize>, usize)> = Vec::with_capacity(n_levels);
        let balls = perm.cover(finest);
        let owner = first_ball(&space, &points, balls, finest);
        let mut cells = group(&owner, balls.len());
        let mut ball_of_cell = nonempty_labels(&owner, balls.len());
        let centers = ball_of_cell.iter().map(|&b| balls[b]).collect();
        levels_rev.push((v, cells.clone(), centers, Vec::new(), balls.len()));

        for j in (u..v).rev() {
            let r = scale_radius(s, j)?;
            let balls = perm.cover(r);
            let point_ball = first_ball(&space, &points, balls, r);
            let cell_ball: Vec<usize> = cells.iter().map(|c| c.iter().map(|&k| point_ball[k]).min().unwrap()).collect();
            let parent_cells = group(&cell_ball, balls.len());
            ball_of_cell = nonempty_labels(&cell_ball, balls.len());
            // Relabel the finer level's parents to the surviving coarse cells.
            let mut relabel = vec![usize::MAX; balls.len()];
            for (new, &b) in ball_of_cell.iter().enumerate() {
                relabel[b] = new;
            }
            levels_rev.last_mut().unwrap().3 = cell_ball.iter().map(|&b| relabel[b]).collect();
            let merged: Vec<Vec<usize>> = parent_cells
                .iter()
                .map(|kids| {
                    let mut m: Vec<usize> = kids.iter().flat_map(|&c| cells[c].iter().copied()).collect();
                    m.sort_unstable();
                    m
                })
                .collect();
            let centers = merged
                .iter()
                .zip(&ball_of_cell)
                .map(|(members, &b)| {
                    let c = balls[b];
                    let inside = members.iter().any(|&k| points[k] == c);
                    if inside {
                        c
                    } else {
                        // Nearest member to the ball center, lowest index on ties.
                        let k = *members
                            .iter()
                            .min_by(|&&a, &&b| space.distance(c, points[a]).total_cmp(&space.distance(c, points[b])))
                            .unwrap();
                        points[k]
                    }
                })
                .collect();
            levels_rev.push((j, merged.clone(), centers, Vec::new(), balls.len()));
            cells = merged;
        }

        let mut levels = Vec::with_capacity(n_levels);
        for (j, cells, centers, parents, greedy_count) in levels_rev.into_iter().rev() {
            let cells: Vec<Vec<usize>> =
                cells.into_iter().map(|c| c.into_iter().map(|k| points[k]).collect()).collect();
            let diameters =
                cells.iter().map(|c| subset_diameter(&space, c).map(|d| d.value)).collect::<Result<Vec<f64>>>()?;
            levels.push(Level { j, cells, centers, parents, diameters, greedy_count });
        }
        let leaves = levels.last().unwrap();
        for (c, cell) in leaves.cells.iter().enumerate() {
            for x in cell {
                leaf_of.insert(*x, c);
            }
        }
        Ok(Self { space, points, base_scale: s, u, v, diameter, levels, leaf_of })
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn leaves(&self) -> &Level {
        self.levels.last().unwrap()
    }

    /// The level with index `j`.
    pub fn level(&self, j: i32) -> Option<&Level> {
        usize::try_from(j - self.u).ok().and_then(|k| self.levels.get(k))
    }

    /// Leaf cell holding the space point `x`, if it is one of the tree points.
    pub fn leaf_of(&self, x: usize) -> Option<usize> {
        self.leaf_of.get(&x).copied()
    }

    /// Cell counts `m(j)` from coarse to fine.
    pub fn cell_counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.cells.len()).collect()
    }

    /// Checks the partition, diameter and nesting conditions, that centers
    /// lie in their cells and that `m(j)` does not exceed the greedy count.
    /// Diameters are recomputed, not read from the cache.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Numeric(format!("partition tree: {msg}")));
        let n = self.points.len();
        let pos: HashMap<usize, usize> = self.points.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let perm = GreedyPermutation::new(&self.space, &self.points, 0.0)?;
        let mut prev_owner: Option<Vec<usize>> = None;
        for level in &self.levels {
            let mut owner = vec![usize::MAX; n];
            for (c, cell) in level.cells.iter().enumerate() {
                if cell.is_empty() {
                    return fail(format!("empty cell {c} at level {}", level.j));
                }
                for x in cell {
                    let Some(&k) = pos.get(x) else {
                        return fail(format!("foreign point {x} at level {}", level.j));
                    };
                    if owner[k] != usize::MAX {
                        return fail(format!("point {x} in two cells at level {}", level.j));
                    }
                    owner[k] = c;
                }
                if !cell.contains(&level.centers[c]) {
                    return fail(format!("center outside cell {c} at level {}", level.j));
                }
                let diam = subset_diameter(&self.space, cell)?;
                let limit = self.base_scale * 4f64.powi(1 - level.j);
                let measured = if diam.exact { diam.value } else { exact_diameter(&self.space, cell) };
                if measured > limit * (1.0 + DIAMETER_SLACK) {
                    return fail(format!("cell {c} at level {} has diameter {measured} > {limit}", level.j));
                }
            }
            if owner.contains(&usize::MAX) {
                return fail(format!("level {} does not cover every point", level.j));
            }
            if level.cells.len() > level.greedy_count {
                return fail(format!("level {} has more cells than greedy balls", level.j));
            }
            let recount = perm.count(self.base_scale * 4f64.powi(-level.j));
            if level.cells.len() > recount {
                return fail(format!("level {} exceeds the greedy cover count {recount}", level.j));
            }
            if let Some(up) = &prev_owner {
                if level.parents.len() != level.cells.len() {
                    return fail(format!("level {} parent links missing", level.j));
                }
                for (c, cell) in level.cells.iter().enumerate() {
                    if cell.iter().any(|x| up[pos[x]] != level.parents[c]) {
                        return fail(format!("cell {c} at level {} leaves its parent", level.j));
                    }
                }
            }
            prev_owner = Some(owner);
        }
        Ok(())
    }

    /// Writes the levels, cells, centers and parent links as JSON.
    pub fn write_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn exact_diameter(space: &MetricSpace, cell: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for (a, &i) in cell.iter().enumerate() {
        for &j in &cell[a + 1..] {
            best = best.max(space.distance(i, j));
        }
    }
    best
}

/// Groups item positions by label; labels without items are skipped.
fn group(labels: &[usize], n_labels: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n_labels];
    for (k, &l) in labels.iter().enumerate() {
        groups[l].push(k);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Labels in use, in increasing order; the `k`-th is the `k`-th group.
fn nonempty_labels(labels: &[usize], n_labels: usize) -> Vec<usize> {
    let mut used = vec![false; n_labels];
    for &l in labels {
        used[l] = true;
    }
    (0..n_labels).filter(|&l| used[l]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn cloud(n: usize, dim: usize, seed: u64) -> Arc<MetricSpace> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Arc::new(
            MetricSpace::from_flat(
                dim,
                (0..n * dim).map(|_| rng.random()).collect(),
                crate::measures::MetricKind::Euclidean,
            )
            .unwrap(),
        )
    }

    #[test]
    fn single_point() {
        let s = cloud(1, 2, 0);
        let t = PartitionTree::build(s, &[0], 1.0, 0, 5).unwrap();
        assert_eq!(t.cell_counts(), vec![1; 6]);
        t.validate().unwrap();
    }

    #[test]
    fn two_points_split_at_the_fine_level() {
        let s = Arc::new(MetricSpace::euclidean(vec![vec![0.0], vec![1.0]]).unwrap());
        let t = PartitionTree::build(s, &[0, 1], 1.0, 1, 2).unwrap();
        t.validate().unwrap();
        assert_eq!(t.leaves().cells.len(), 2);
        assert_eq!(t.level(1).unwrap().cells.len(), 2);
    }

    #[test]
    fn uniform_square_counts_grow() {
        let s = cloud(200, 2, 3);
        let all: Vec<usize> = (0..200).collect();
        let d = s.diameter().value;
        let t = PartitionTree::build(s, &all, d, 1, 4).unwrap();
        t.validate().unwrap();
        let m = t.cell_counts();
        assert!(m.windows(2).all(|w| w[0] <= w[1]), "{m:?}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = cloud(3, 1, 0);
        assert!(matches!(PartitionTree::build(s.clone(), &[], 1.0, 0, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(PartitionTree::build(s.clone(), &[0], 1.0, 2, 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(PartitionTree::build(s.clone(), &[0, 0], 1.0, 0, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(PartitionTree::build(s, &[0, 1], 1.0, 0, 600), Err(Error::ScaleRange(_))));
    }

    #[test]
    fn validator_catches_broken_trees() {
        let s = cloud(60, 2, 8);
        let all: Vec<usize> = (0..60).collect();
        let t = PartitionTree::build(s, &all, 2.0, 0, 3).unwrap();
        t.validate().unwrap();
        let mut bad = t.clone();
        let moved = bad.levels[3].cells[0].pop().unwrap();
        bad.levels[3].cells[1].push(moved);
        assert!(bad.validate().is_err());
        let mut bad = t.clone();
        bad.base_scale = 0.01;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_dump_lists_levels() {
        let s = cloud(20, 2, 1);
        let all: Vec<usize> = (0..20).collect();
        let t = PartitionTree::build(s, &all, 1.5, 1, 3).unwrap();
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["levels"].as_array().unwrap().len(), 3);
        assert_eq!(v["levels"][2]["j"], 3);
    }
}
