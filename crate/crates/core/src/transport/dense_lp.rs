//! Dense two-phase simplex for tiny transportation problems, with Bland's rule.
//!
//! Only meant as an independent oracle: `O(rows * cols)` per pivot on a full
//! tableau, no scaling.

use crate::{Error, Result};

const EPS: f64 = 1e-12;

/// Minimizes `sum cost[i][j] x_ij` over couplings of `a` and `b`.
///
/// Returns the optimal value. `b` must carry the total mass of `a`.
pub fn transport_lp(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> Result<f64> {
    let (m, n) = (a.len(), b.len());
    let vars = m * n;
    let rows = m + n;
    // Columns: x (vars), artificials (rows), then the right-hand side.
    let width = vars + rows + 1;
    let rhs = width - 1;
    let mut t = vec![vec![0.0; width]; rows];
    for i in 0..m {
        for j in 0..n {
            t[i][i * n + j] = 1.0;
            t[m + j][i * n + j] = 1.0;
        }
    }
    for (r, row) in t.iter_mut().enumerate() {
        row[vars + r] = 1.0;
        row[rhs] = if r < m { a[r] } else { b[r - m] };
    }
    let mut basis: Vec<usize> = (vars..vars + rows).collect();

    // Phase one: minimize the sum of artificials.
    let mut phase1 = vec![0.0; width];
    phase1[vars..vars + rows].fill(1.0);
    run_simplex(&mut t, &mut basis, &phase1, vars + rows)?;
    let infeasibility: f64 = basis.iter().enumerate().filter(|(_, &c)| c >= vars).map(|(r, _)| t[r][rhs]).sum();
    if infeasibility > 1e-9 {
        return Err(Error::Numeric(format!("transport LP infeasible ({infeasibility})")));
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= vars {
            match (0..vars).find(|&c| t[r][c].abs() > EPS) {
                Some(c) => pivot(&mut t, &mut basis, r, c),
                None => {
                    t.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut phase2 = vec![0.0; width];
    for i in 0..m {
        for j in 0..n {
            phase2[i * n + j] = cost[i][j];
        }
    }
    run_simplex(&mut t, &mut basis, &phase2, vars)?;
    let mut value = 0.0;
    for (r, &c) in basis.iter().enumerate() {
        value += phase2[c] * t[r][rhs];
    }
    Ok(value)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let pv = t[r][c];
    t[r].iter_mut().for_each(|x| *x /= pv);
    let row = t[r].clone();
    for (i, ti) in t.iter_mut().enumerate() {
        let f = ti[c];
        if i != r && f != 0.0 {
            for (x, &y) in ti.iter_mut().zip(&row) {
                *x -= f * y;
            }
        }
    }
    basis[r] = c;
}

/// Minimizes `obj` with entering columns restricted to `0..allowed`.
fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], obj: &[f64], allowed: usize) -> Result<()> {
    let rhs = obj.len() - 1;
    for _ in 0..100_000 {
        // Reduced cost of column c: obj[c] - sum_r obj[basis[r]] t[r][c].
        let entering = (0..allowed).find(|&c| {
            if basis.contains(&c) {
                return false;
            }
            let z: f64 = basis.iter().enumerate().map(|(r, &b)| obj[b] * t[r][c]).sum();
            obj[c] - z < -EPS
        });
        let Some(c) = entering else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..t.len() {
            if t[r][c] > EPS {
                let ratio = t[r][rhs] / t[r][c];
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - EPS || (ratio <= lratio + EPS && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::Numeric("transport LP unbounded".into()));
        };
        pivot(t, basis, r, c);
    }
    Err(Error::Numeric("dense simplex iteration limit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_by_hand() {
        // Moving 0 -> 1 and 1 -> 2 costs 1/2 + 1/2 for squared distances.
        let xs = [0.0, 1.0];
        let ys = [1.0, 2.0];
        let cost: Vec<Vec<f64>> = xs.iter().map(|x| ys.iter().map(|y| (x - y) * (x - y)).collect()).collect();
        let v = transport_lp(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let cost = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        let v = transport_lp(&[0.3, 0.7], &[0.3, 0.7], &cost).unwrap();
        assert_eq!(v, 0.0);
    }
}
