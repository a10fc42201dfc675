//! Transportation problems on top of the network simplex core.
//!
//! Costs are scaled by `COST_RESOLUTION / max_cost` and rounded to integers,
//! so the returned plan is optimal for costs perturbed by at most
//! `max_cost / (2 COST_RESOLUTION)` per unit of mass.
//!
//! Small instances get every arc up front. Larger ones start from nearest
//! neighbour arcs and add columns with negative reduced cost, priced exactly
//! over all pairs, until none is left; the final basis is then optimal for
//! the full problem.

use crate::{Error, Result};

use super::ground::Ground;
use super::network_simplex::NetworkSimplex;

pub const COST_RESOLUTION: f64 = 1e9;

/// Instances with at most this many arcs are solved densely.
pub const DENSE_ARC_LIMIT: usize = 40_000;

const KNN_PER_ROW: usize = 5;
const KNN_PER_COL: usize = 3;
const PRICED_PER_ROW: usize = 8;
const MAX_PIVOTS: u64 = 1 << 40;

/// Statistics of one solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub arcs: usize,
    pub rounds: usize,
    pub pivots: u64,
}

#[inline]
fn scaled(cost: f64, scale: f64) -> i64 {
    (cost * scale + 0.5) as i64
}

/// Min-cost coupling of `a` (rows) and `b` (columns) for the ground cost `g`.
///
/// `b` must already carry the total mass of `a`. Returns the positive
/// entries `(i, j, mass)` of the optimal plan.
pub fn solve_transport<G: Ground>(a: &[f64], b: &[f64], g: &G) -> Result<(Vec<(usize, usize, f64)>, SolveStats)> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 || g.rows() != m || g.cols() != n {
        return Err(Error::invalid("transport between empty or mismatched supports"));
    }
    if m == 1 || n == 1 {
        let plan = if m == 1 {
            b.iter().enumerate().map(|(j, &w)| (0, j, w)).collect()
        } else {
            a.iter().enumerate().map(|(i, &w)| (i, 0, w)).collect()
        };
        return Ok((plan, SolveStats { arcs: m * n, ..Default::default() }));
    }

    let dense = m.saturating_mul(n) <= DENSE_ARC_LIMIT;
    let mut knn = if dense { None } else { Some(Knn::new(m, n)) };
    let mut keys = vec![0.0; n];
    let mut max_key = 0.0f64;
    for i in 0..m {
        g.fill_row(i, &mut keys);
        for (j, &k) in keys.iter().enumerate() {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::Numeric(format!("cost({i},{j}) is {k}")));
            }
            max_key = max_key.max(k);
        }
        if let Some(knn) = knn.as_mut() {
            knn.offer_row(i, &keys);
        }
    }
    let max_cost = max_key;
    if max_cost == 0.0 {
        return Ok((north_west_corner(a, b), SolveStats::default()));
    }
    let scale = COST_RESOLUTION / max_cost;

    let mut supply = Vec::with_capacity(m + n);
    supply.extend_from_slice(a);
    supply.extend(b.iter().map(|w| -w));
    let mut ns = NetworkSimplex::new(&supply, COST_RESOLUTION as i64);
    let mut stats = SolveStats::default();

    match knn {
        None => {
            for i in 0..m {
                for j in 0..n {
                    ns.add_arc(i, m + j, scaled(g.cost(i, j), scale));
                }
            }
            stats.rounds = 1;
            if !ns.solve(MAX_PIVOTS) {
                return Err(Error::Numeric("network simplex did not terminate".into()));
            }
        }
        Some(knn) => {
            let pairs = knn.into_pairs();
            for (i, j) in pairs {
                ns.add_arc(i, m + j, scaled(g.cost(i, j), scale));
            }
            let mut candidates: Vec<(i64, usize)> = Vec::new();
            let mut col_best = vec![(0i64, usize::MAX, false); n];
            let mut v = vec![0.0; n];
            loop {
                stats.rounds += 1;
                let ok = ns.solve(MAX_PIVOTS);
                if !ok {
                    return Err(Error::Numeric("network simplex did not terminate".into()));
                }
                for (j, vj) in v.iter_mut().enumerate() {
                    *vj = ns.potential(m + j) as f64;
                }
                let mut added = 0;
                col_best.iter_mut().for_each(|c| *c = (0, usize::MAX, false));
                for i in 0..m {
                    candidates.clear();
                    let ui = ns.potential(i);
                    let uf = ui as f64;
                    g.fill_row(i, &mut keys);
                    for j in 0..n {
                        // rc < 0 needs scaled(cost) + u_i < v_j.
                        if keys[j] * scale + uf < v[j] {
                            let rc = scaled(keys[j], scale) + ui - ns.potential(m + j);
                            if rc < 0 {
                                candidates.push((rc, j));
                                if rc < col_best[j].0 {
                                    col_best[j] = (rc, i, false);
                                }
                            }
                        }
                    }
                    if candidates.len() > PRICED_PER_ROW {
                        candidates.select_nth_unstable(PRICED_PER_ROW);
                        candidates.truncate(PRICED_PER_ROW);
                    }
                    for &(_, j) in &candidates {
                        if col_best[j].1 == i {
                            col_best[j].2 = true;
                        }
                        ns.add_arc(i, m + j, scaled(g.cost(i, j), scale));
                    }
                    added += candidates.len();
                }
                for (j, &(_, i, done)) in col_best.iter().enumerate() {
                    if i != usize::MAX && !done {
                        ns.add_arc(i, m + j, scaled(g.cost(i, j), scale));
                        added += 1;
                    }
                }
                if added == 0 {
                    break;
                }
            }
        }
    }
    stats.arcs = ns.real_arcs().len();
    stats.pivots = ns.pivots;
    let total: f64 = a.iter().sum();
    if ns.artificial_flow() > 1e-9 * total {
        return Err(Error::Numeric("flow left on artificial arcs".into()));
    }

    let plan = ns
        .real_arcs()
        .filter_map(|e| {
            let (s, t, f) = ns.arc(e);
            (f > 0.0).then_some((s, t - m, f))
        })
        .collect();
    Ok((plan, stats))
}

/// The north-west corner coupling, optimal when all costs vanish.
pub fn north_west_corner(a: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut plan = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a.first().copied().unwrap_or(0.0), b.first().copied().unwrap_or(0.0));
    while i < a.len() && j < b.len() {
        let q = ra.min(rb);
        if q > 0.0 {
            plan.push((i, j, q));
        }
        ra -= q;
        rb -= q;
        if ra <= 0.0 {
            i += 1;
            ra = a.get(i).copied().unwrap_or(0.0);
        } else {
            j += 1;
            rb = b.get(j).copied().unwrap_or(0.0);
        }
    }
    plan
}

/// Nearest neighbours along rows and columns, gathered in one pass.
struct Knn {
    n: usize,
    rows: Vec<(f64, usize)>,
    row_len: Vec<usize>,
    cols: Vec<(f64, usize)>,
    col_len: Vec<usize>,
    col_worst: Vec<f64>,
}

impl Knn {
    fn new(m: usize, n: usize) -> Self {
        Self {
            n,
            rows: vec![(f64::INFINITY, 0); m * KNN_PER_ROW],
            row_len: vec![0; m],
            cols: vec![(f64::INFINITY, 0); n * KNN_PER_COL],
            col_len: vec![0; n],
            col_worst: vec![f64::INFINITY; n],
        }
    }

    #[inline]
    fn insert(slots: &mut [(f64, usize)], len: &mut usize, c: f64, idx: usize) {
        let k = slots.len();
        if *len == k && c >= slots[k - 1].0 {
            return;
        }
        let mut pos = (*len).min(k - 1);
        while pos > 0 && slots[pos - 1].0 > c {
            slots[pos] = slots[pos - 1];
            pos -= 1;
        }
        slots[pos] = (c, idx);
        if *len < k {
            *len += 1;
        }
    }

    fn offer_row(&mut self, i: usize, keys: &[f64]) {
        let (rows, row_len) = (&mut self.rows, &mut self.row_len);
        let slots = &mut rows[i * KNN_PER_ROW..(i + 1) * KNN_PER_ROW];
        for (j, &k) in keys.iter().enumerate() {
            if k < self.col_worst[j] {
                let len = &mut self.col_len[j];
                let cs = &mut self.cols[j * KNN_PER_COL..(j + 1) * KNN_PER_COL];
                Self::insert(cs, len, k, i);
                if *len == KNN_PER_COL {
                    self.col_worst[j] = cs[KNN_PER_COL - 1].0;
                }
            }
            if row_len[i] < KNN_PER_ROW || k < slots[KNN_PER_ROW - 1].0 {
                Self::insert(slots, &mut row_len[i], k, j);
            }
        }
    }

    fn into_pairs(self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.rows.len() + self.cols.len());
        for (i, len) in self.row_len.iter().enumerate() {
            for &(_, j) in &self.rows[i * KNN_PER_ROW..i * KNN_PER_ROW + len] {
                pairs.push((i, j));
            }
        }
        for j in 0..self.n {
            for &(_, i) in &self.cols[j * KNN_PER_COL..j * KNN_PER_COL + self.col_len[j]] {
                pairs.push((i, j));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::super::ground::MatrixGround;
    use super::*;

    fn plan_cost(plan: &[(usize, usize, f64)], costs: &[f64], n: usize) -> f64 {
        plan.iter().map(|&(i, j, f)| f * costs[i * n + j]).sum()
    }

    #[test]
    fn north_west_corner_is_feasible() {
        let a = [0.5, 0.25, 0.25];
        let b = [0.25, 0.25, 0.5];
        let plan = north_west_corner(&a, &b);
        let mut ra = [0.0; 3];
        let mut rb = [0.0; 3];
        for &(i, j, f) in &plan {
            ra[i] += f;
            rb[j] += f;
        }
        assert_eq!(ra, a);
        assert_eq!(rb, b);
    }

    #[test]
    fn assignment_on_a_line() {
        let xs = [0.0f64, 1.0, 2.0, 3.0];
        let ys = [3.1f64, 0.1, 2.1, 1.1];
        let costs: Vec<f64> = xs.iter().flat_map(|x| ys.iter().map(move |y| (x - y).abs())).collect();
        let a = [0.25; 4];
        let (plan, _) = solve_transport(&a, &a, &MatrixGround { costs: &costs, cols: 4 }).unwrap();
        assert!((plan_cost(&plan, &costs, 4) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn column_generation_matches_dense_solve() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let (m, n) = (150, 400);
        assert!(m * n > DENSE_ARC_LIMIT);
        let xs: Vec<[f64; 2]> = (0..m).map(|_| [rng.random(), rng.random()]).collect();
        let ys: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let costs: Vec<f64> = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()))
            .collect();
        let a = vec![1.0 / m as f64; m];
        let b = vec![1.0 / n as f64; n];
        let (sparse, stats) = solve_transport(&a, &b, &MatrixGround { costs: &costs, cols: n }).unwrap();
        assert!(stats.arcs < m * n);
        assert!(stats.rounds > 1);

        let mut supply: Vec<f64> = a.clone();
        supply.extend(b.iter().map(|w| -w));
        let max_cost = costs.iter().cloned().fold(0.0, f64::max);
        let scale = COST_RESOLUTION / max_cost;
        let mut ns = NetworkSimplex::new(&supply, COST_RESOLUTION as i64);
        for i in 0..m {
            for j in 0..n {
                ns.add_arc(i, m + j, scaled(costs[i * n + j], scale));
            }
        }
        assert!(ns.solve(MAX_PIVOTS));
        let dense: Vec<_> =
            ns.real_arcs().map(|e| ns.arc(e)).filter(|a| a.2 > 0.0).map(|(s, t, f)| (s, t - m, f)).collect();
        let (cs, cd) = (plan_cost(&sparse, &costs, n), plan_cost(&dense, &costs, n));
        assert!((cs - cd).abs() <= 1e-9 * cd, "{cs} vs {cd}");
    }
}
