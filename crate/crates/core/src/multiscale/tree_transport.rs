use serde::Serialize;

use crate::measures::{neumaier_sum, DiscreteMeasure};
use crate::transport::{PlanEntry, TransportPlan, MASS_TOLERANCE};
use crate::{Error, Result};

use super::tree::PartitionTree;

/// The tree upper bound on `W_p` and its ingredients.
///
/// Level terms are `2 * 4^(2 - j) * d * TV_j^(1/p)` with
/// `TV_j = 1/2 sum_l |m_j - n_j|` for the measures coarsened to level `j`.
/// The coarsest level also pays for matching across its cells, so its
/// coefficient is at least `d`. `derived` evaluates the same sum in the form
/// `2^(1 - 1/p) * 4^(2 - j) * d * (sum_l |m_j - n_j|)^(1/p)`.
#[derive(Debug, Clone, Serialize)]
pub struct TreeBound {
    pub value: f64,
    pub derived: f64,
    pub per_level: Vec<f64>,
    pub tv: Vec<f64>,
    /// `(sum w * d(atom, leaf center)^p)^(1/p)` for each measure.
    pub slack_mu: f64,
    pub slack_nu: f64,
    /// `value + slack_mu + slack_nu`, a bound for the unsnapped measures.
    pub total: f64,
}

/// Leaf cell of every atom and its distance to the leaf center.
///
/// Atoms that are tree points go to their own leaf; any other atom goes to
/// the nearest leaf center (lowest index on ties).
pub fn snap_to_leaves(m: &DiscreteMeasure, tree: &PartitionTree) -> Result<Vec<(usize, f64)>> {
    let space = m.space();
    let tspace = tree.space();
    let same = std::ptr::eq(space.as_ref(), tspace.as_ref());
    if !same && !space.compatible(tspace) {
        return Err(Error::invalid("measure and tree live on incompatible spaces"));
    }
    let centers = &tree.leaves().centers;
    Ok(m.support()
        .iter()
        .map(|&x| {
            if same {
                if let Some(leaf) = tree.leaf_of(x) {
                    return (leaf, space.distance(x, centers[leaf]));
                }
            }
            centers
                .iter()
                .enumerate()
                .map(|(leaf, &c)| (leaf, space.cross_distance(x, tspace, c)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        })
        .collect())
}

/// Masses of the coarsened measures at levels `u..=j` (index 0 is `u`),
/// from masses on the cells of level `j`.
pub fn coarsen(tree: &PartitionTree, j: i32, masses: &[f64]) -> Result<Vec<Vec<f64>>> {
    let top = level_index(tree, j)?;
    if masses.len() != tree.levels[top].cells.len() {
        return Err(Error::invalid("one mass per cell expected"));
    }
    let mut out = vec![masses.to_vec()];
    for k in (1..=top).rev() {
        let level = &tree.levels[k];
        let mut up = vec![0.0; tree.levels[k - 1].cells.len()];
        for (c, &w) in out.last().unwrap().iter().enumerate() {
            up[level.parents[c]] += w;
        }
        out.push(up);
    }
    out.reverse();
    Ok(out)
}

/// The surplus measures on level `j - 1`: each parent receives
/// `sum (m_j - n_j)_+` and `sum (n_j - m_j)_+` over its children.
pub fn surplus_measures(tree: &PartitionTree, j: i32, m_j: &[f64], n_j: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = level_index(tree, j)?;
    if k == 0 {
        return Err(Error::invalid("the coarsest level has no parent level"));
    }
    let level = &tree.levels[k];
    if m_j.len() != level.cells.len() || n_j.len() != level.cells.len() {
        return Err(Error::invalid("one mass per cell expected"));
    }
    let width = tree.levels[k - 1].cells.len();
    let (mut tm, mut tn) = (vec![0.0; width], vec![0.0; width]);
    for (c, (&a, &b)) in m_j.iter().zip(n_j).enumerate() {
        tm[level.parents[c]] += (a - b).max(0.0);
        tn[level.parents[c]] += (b - a).max(0.0);
    }
    Ok((tm, tn))
}

/// `1/2 sum |a - b|`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * neumaier_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

fn level_index(tree: &PartitionTree, j: i32) -> Result<usize> {
    if j < tree.u || j > tree.v {
        return Err(Error::invalid(format!("level {j} outside {}..={}", tree.u, tree.v)));
    }
    Ok((j - tree.u) as usize)
}

struct Snapped {
    leaves: Vec<(usize, f64)>,
    weights: Vec<f64>,
}

fn prepare(m: &DiscreteMeasure, n: &DiscreteMeasure, tree: &PartitionTree, p: f64) -> Result<(Snapped, Snapped)> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p = {p} must be a finite real >= 1")));
    }
    let (ma, mb) = (m.total_mass(), n.total_mass());
    let tolerance = MASS_TOLERANCE * ma.max(mb).max(1.0);
    if (ma - mb).abs() > tolerance {
        return Err(Error::MassMismatch { left: ma, right: mb, tolerance });
    }
    let scale = if mb > 0.0 { ma / mb } else { 1.0 };
    let sm = Snapped { leaves: snap_to_leaves(m, tree)?, weights: m.weights().to_vec() };
    let sn = Snapped { leaves: snap_to_leaves(n, tree)?, weights: n.weights().iter().map(|w| w * scale).collect() };
    Ok((sm, sn))
}

fn leaf_masses(s: &Snapped, n_leaves: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_leaves];
    for (&(leaf, _), &w) in s.leaves.iter().zip(&s.weights) {
        out[leaf] += w;
    }
    out
}

fn slack(s: &Snapped, p: f64) -> f64 {
    neumaier_sum(s.leaves.iter().zip(&s.weights).map(|(&(_, d), &w)| w * d.powf(p))).powf(1.0 / p)
}

/// The multiscale upper bound on `W_p(m, n)` for measures on the tree.
///
/// `d` must bound the diameter of the tree points and be at least the
/// tree's base scale.
pub fn tree_transport_bound(
    m: &DiscreteMeasure,
    n: &DiscreteMeasure,
    tree: &PartitionTree,
    p: f64,
    d: f64,
) -> Result<TreeBound> {
    let (sm, sn) = prepare(m, n, tree, p)?;
    if !(d >= tree.diameter * (1.0 - 1e-12)) {
        return Err(Error::invalid(format!("d = {d} is below the diameter {}", tree.diameter)));
    }
    if tree.base_scale > d * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("d = {d} is below the tree base scale {}", tree.base_scale)));
    }
    let leaves = tree.leaves().cells.len();
    let ms = coarsen(tree, tree.v, &leaf_masses(&sm, leaves))?;
    let ns = coarsen(tree, tree.v, &leaf_masses(&sn, leaves))?;
    let mut per_level = Vec::with_capacity(ms.len());
    let mut derived = Vec::with_capacity(ms.len());
    let mut tv = Vec::with_capacity(ms.len());
    for (k, (a, b)) in ms.iter().zip(&ns).enumerate() {
        let j = tree.u + k as i32;
        let t = total_variation(a, b);
        let l1 = 2.0 * t;
        let mut coef = 2.0 * 4f64.powi(2 - j) * d;
        let mut coef_derived = 2f64.powf(1.0 - 1.0 / p) * 4f64.powi(2 - j) * d;
        if k == 0 {
            coef = coef.max(d);
            coef_derived = coef_derived.max(d * 0.5f64.powf(1.0 / p));
        }
        per_level.push(coef * t.powf(1.0 / p));
        derived.push(coef_derived * l1.powf(1.0 / p));
        tv.push(t);
    }
    let value = neumaier_sum(per_level.iter().copied());
    let (slack_mu, slack_nu) = (slack(&sm, p), slack(&sn, p));
    Ok(TreeBound {
        value,
        derived: neumaier_sum(derived),
        per_level,
        tv,
        slack_mu,
        slack_nu,
        total: value + slack_mu + slack_nu,
    })
}

/// The coupling that matches mass in place and sends the surplus of each
/// cell to its parent, level by level, then matches what reaches the
/// coarsest level across cells.
///
/// Entries refer to atom positions of `m` and `n`, with true distances, so
/// the cost is at most [`TreeBound::total`].
pub fn tree_transport_plan(
    m: &DiscreteMeasure,
    n: &DiscreteMeasure,
    tree: &PartitionTree,
    p: f64,
) -> Result<TransportPlan> {
    let (sm, sn) = prepare(m, n, tree, p)?;
    let eps = 1e-15 * m.total_mass().max(f64::MIN_POSITIVE);
    let leaves = tree.leaves().cells.len();
    type Pieces = Vec<(usize, f64)>;
    let mut src: Vec<Pieces> = vec![Vec::new(); leaves];
    let mut dst: Vec<Pieces> = vec![Vec::new(); leaves];
    for (i, (&(leaf, _), &w)) in sm.leaves.iter().zip(&sm.weights).enumerate() {
        if w > 0.0 {
            src[leaf].push((i, w));
        }
    }
    for (i, (&(leaf, _), &w)) in sn.leaves.iter().zip(&sn.weights).enumerate() {
        if w > 0.0 {
            dst[leaf].push((i, w));
        }
    }
    let mut pairs = Vec::new();
    let mut emit = |a: &mut Pieces, b: &mut Pieces| {
        match_pieces(a, b, eps, &mut |i, j, q| {
            pairs.push(PlanEntry { src: i, dst: j, mass: q, distance: m.atom_distance(i, n, j) });
        })
    };
    for k in (0..tree.levels.len()).rev() {
        for c in 0..src.len() {
            let (mut a, mut b) = (std::mem::take(&mut src[c]), std::mem::take(&mut dst[c]));
            emit(&mut a, &mut b);
            src[c] = a;
            dst[c] = b;
        }
        if k == 0 {
            break;
        }
        let level = &tree.levels[k];
        let width = tree.levels[k - 1].cells.len();
        let (mut up_src, mut up_dst): (Vec<Pieces>, Vec<Pieces>) = (vec![Vec::new(); width], vec![Vec::new(); width]);
        for (c, (a, b)) in src.into_iter().zip(dst).enumerate() {
            up_src[level.parents[c]].extend(a);
            up_dst[level.parents[c]].extend(b);
        }
        src = up_src;
        dst = up_dst;
    }
    let mut a: Pieces = src.into_iter().flatten().collect();
    let mut b: Pieces = dst.into_iter().flatten().collect();
    emit(&mut a, &mut b);
    Ok(TransportPlan::from_pairs(pairs, p))
}

/// Greedily matches two piece lists in order; leftovers stay in the lists.
fn match_pieces(
    a: &mut Vec<(usize, f64)>,
    b: &mut Vec<(usize, f64)>,
    eps: f64,
    out: &mut impl FnMut(usize, usize, f64),
) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let q = a[i].1.min(b[j].1);
        out(a[i].0, b[j].0, q);
        a[i].1 -= q;
        b[j].1 -= q;
        if a[i].1 <= eps {
            i += 1;
        }
        if b[j].1 <= eps {
            j += 1;
        }
    }
    a.drain(..i);
    b.drain(..j);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MetricSpace;
    use std::sync::Arc;

    fn line_tree(xs: &[f64], s: f64, u: i32, v: i32) -> PartitionTree {
        let space = Arc::new(MetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap());
        let all: Vec<usize> = (0..xs.len()).collect();
        PartitionTree::build(space, &all, s, u, v).unwrap()
    }

    #[test]
    fn equal_measures_cost_nothing() {
        let t = line_tree(&[0.0, 0.1, 0.7, 1.0], 1.0, 1, 3);
        let m = DiscreteMeasure::uniform(t.space().clone()).unwrap();
        let b = tree_transport_bound(&m, &m, &t, 2.0, 1.0).unwrap();
        assert_eq!(b.value, 0.0);
        let plan = tree_transport_plan(&m, &m, &t, 2.0).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert!(plan.pairs.iter().all(|e| e.src == e.dst));
    }

    #[test]
    fn single_level_diracs_cost_eight_d() {
        let t = line_tree(&[0.0, 1.0], 1.0, 1, 2);
        let sp = t.space().clone();
        let (a, b) = (DiscreteMeasure::dirac(sp.clone(), 0).unwrap(), DiscreteMeasure::dirac(sp, 1).unwrap());
        let bound = tree_transport_bound(&a, &b, &t, 1.5, 1.0).unwrap();
        // The level-1 term alone is 2 * 4 * d * TV^(1/p) with TV = 1.
        assert!((bound.per_level[0] - 8.0).abs() < 1e-15);
        assert!((bound.value - bound.derived).abs() < 1e-12 * bound.value);
        let plan = tree_transport_plan(&a, &b, &t, 1.5).unwrap();
        assert!((plan.cost - 1.0).abs() < 1e-15);
        assert!(plan.cost <= 8.0);
    }

    #[test]
    fn siblings_route_through_the_parent() {
        let t = line_tree(&[0.0, 0.05, 0.9], 1.0, 1, 3);
        let sp = t.space().clone();
        let (a, b) = (DiscreteMeasure::dirac(sp.clone(), 0).unwrap(), DiscreteMeasure::dirac(sp, 1).unwrap());
        let plan = tree_transport_plan(&a, &b, &t, 1.0).unwrap();
        assert_eq!(plan.pairs.len(), 1);
        assert!((plan.cost - 0.05).abs() < 1e-15);
        assert!(plan.cost <= tree_transport_bound(&a, &b, &t, 1.0, 1.0).unwrap().value);
    }

    #[test]
    fn rejects_small_d_and_mass_mismatch() {
        let t = line_tree(&[0.0, 1.0], 1.0, 1, 2);
        let sp = t.space().clone();
        let a = DiscreteMeasure::dirac(sp.clone(), 0).unwrap();
        let b = DiscreteMeasure::new(sp, vec![1], vec![0.5]).unwrap();
        assert!(matches!(tree_transport_bound(&a, &a, &t, 1.0, 0.5), Err(Error::InvalidArgument(_))));
        assert!(matches!(tree_transport_bound(&a, &b, &t, 1.0, 1.0), Err(Error::MassMismatch { .. })));
        assert!(matches!(tree_transport_plan(&a, &b, &t, 1.0), Err(Error::MassMismatch { .. })));
    }

    #[test]
    fn off_tree_atoms_add_slack() {
        let t = line_tree(&[0.0, 1.0], 1.0, 1, 2);
        let other = Arc::new(MetricSpace::euclidean(vec![vec![0.1], vec![0.8]]).unwrap());
        let a = DiscreteMeasure::dirac(other.clone(), 0).unwrap();
        let b = DiscreteMeasure::dirac(other, 1).unwrap();
        let bound = tree_transport_bound(&a, &b, &t, 1.0, 1.0).unwrap();
        assert!((bound.slack_mu - 0.1).abs() < 1e-15);
        assert!((bound.slack_nu - 0.2).abs() < 1e-15);
        let plan = tree_transport_plan(&a, &b, &t, 1.0).unwrap();
        assert!((plan.cost - 0.7).abs() < 1e-15);
        assert!(plan.cost <= bound.total);
    }
}
