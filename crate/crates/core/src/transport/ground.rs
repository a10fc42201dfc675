//! Ground costs `d(x_i, y_j)^p` between two point lists.
//!
//! Costs are produced a whole row at a time so that coordinate metrics can
//! use tight, vectorizable loops.

use crate::measures::{DiscreteMeasure, MetricKind};

use super::plan::pow_p;

pub trait Ground {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn cost(&self, i: usize, j: usize) -> f64;
    /// Fills `out[j] = cost(i, j)` for every column, bit-identical to
    /// [`cost`](Self::cost).
    fn fill_row(&self, i: usize, out: &mut [f64]);
}

/// Coordinates under the Euclidean or sup norm, columns stored
/// dimension-major so row scans vectorize.
pub struct CoordGround {
    dim: usize,
    kind: MetricKind,
    p: f64,
    xs: Vec<f64>,
    ys_rows: Vec<f64>,
    ys_cols: Vec<f64>,
    n: usize,
}

impl CoordGround {
    pub fn new(kind: MetricKind, dim: usize, p: f64, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = ys.len() / dim;
        let mut ys_cols = vec![0.0; ys.len()];
        for j in 0..n {
            for k in 0..dim {
                ys_cols[k * n + j] = ys[j * dim + k];
            }
        }
        Self { dim, kind, p, xs, ys_rows: ys, ys_cols, n }
    }

    #[inline]
    fn key_to_cost(&self, key: f64) -> f64 {
        match self.kind {
            MetricKind::Euclidean if self.p == 2.0 => key,
            MetricKind::Euclidean if self.p == 1.0 => key.sqrt(),
            MetricKind::Euclidean => key.sqrt().powf(self.p),
            _ => pow_p(key, self.p),
        }
    }

    /// Squared distance (Euclidean) or sup distance, summed in the same order
    /// as [`Ground::fill_row`].
    #[inline]
    fn key(&self, i: usize, j: usize) -> f64 {
        let x = &self.xs[i * self.dim..(i + 1) * self.dim];
        let y = &self.ys_rows[j * self.dim..(j + 1) * self.dim];
        match self.kind {
            MetricKind::Euclidean => x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b)),
            _ => x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
        }
    }
}

impl Ground for CoordGround {
    fn rows(&self) -> usize {
        self.xs.len() / self.dim
    }

    fn cols(&self) -> usize {
        self.n
    }

    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        self.key_to_cost(self.key(i, j))
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        let x = &self.xs[i * self.dim..(i + 1) * self.dim];
        let euclid = self.kind == MetricKind::Euclidean;
        out.fill(0.0);
        for (k, &xk) in x.iter().enumerate() {
            let col = &self.ys_cols[k * self.n..(k + 1) * self.n];
            if euclid {
                for (acc, &y) in out.iter_mut().zip(col) {
                    let d = xk - y;
                    *acc += d * d;
                }
            } else {
                for (acc, &y) in out.iter_mut().zip(col) {
                    *acc = acc.max((xk - y).abs());
                }
            }
        }
        match (euclid, self.p) {
            (true, 2.0) | (false, 1.0) => {}
            (true, 1.0) => out.iter_mut().for_each(|c| *c = c.sqrt()),
            _ => out.iter_mut().for_each(|c| *c = self.key_to_cost(*c)),
        }
    }
}

/// Distances looked up through the measures' spaces (table metrics).
pub struct MeasureGround<'a> {
    pub mu: &'a DiscreteMeasure,
    pub nu: &'a DiscreteMeasure,
    pub rows: &'a [usize],
    pub cols: &'a [usize],
    pub p: f64,
}

impl Ground for MeasureGround<'_> {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.cols.len()
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        pow_p(self.mu.atom_distance(self.rows[i], self.nu, self.cols[j]), self.p)
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        for (j, c) in out.iter_mut().enumerate() {
            *c = self.cost(i, j);
        }
    }
}

/// A dense cost matrix; used by tests and small callers.
pub struct MatrixGround<'a> {
    pub costs: &'a [f64],
    pub cols: usize,
}

impl Ground for MatrixGround<'_> {
    fn rows(&self) -> usize {
        self.costs.len() / self.cols
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.cols + j]
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.costs[i * self.cols..(i + 1) * self.cols]);
    }
}
