use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::measures::{DiscreteMeasure, MetricSpace};
use crate::{Error, Result};

/// Row sums of a kernel must be 1 within this.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// `max |pi P - pi|` allowed for an invariant law.
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;
/// `max |pi_i P_ij - pi_j P_ji|` allowed for a reversible model.
pub const DETAILED_BALANCE_TOLERANCE: f64 = 1e-12;

/// A finite-state Markov chain on the points of a metric space.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    space: Arc<MetricSpace>,
    kernel: DMatrix<f64>,
    pi: Vec<f64>,
    nu: Vec<f64>,
    reversible: bool,
}

impl MarkovModel {
    /// Checks the kernel and invariant law. When `pi` is `None` it is solved
    /// for; `nu` defaults to `pi`. With `reversible` set, detailed balance is
    /// checked too.
    pub fn new(
        space: Arc<MetricSpace>,
        kernel: DMatrix<f64>,
        pi: Option<Vec<f64>>,
        nu: Option<Vec<f64>>,
        reversible: bool,
    ) -> Result<Self> {
        let n = space.len();
        if n == 0 || kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::invalid(format!(
                "kernel is {}x{} on a space of {n} points",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        if kernel.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::invalid("kernel entries must be finite and nonnegative"));
        }
        for (i, row) in kernel.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::invalid(format!("kernel row {i} sums to {s}")));
            }
        }
        let pi = match pi {
            Some(pi) => pi,
            None => stationary(&kernel)?,
        };
        check_law("invariant law", &pi, n)?;
        let drift = (DVector::from_row_slice(&pi).transpose() * &kernel)
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if drift > INVARIANCE_TOLERANCE {
            return Err(Error::invalid(format!("pi is not invariant: max |pi P - pi| = {drift:e}")));
        }
        let nu = nu.unwrap_or_else(|| pi.clone());
        check_law("initial law", &nu, n)?;
        let model = Self { space, kernel, pi, nu, reversible };
        if reversible {
            let gap = model.detailed_balance_defect();
            if gap > DETAILED_BALANCE_TOLERANCE {
                return Err(Error::invalid(format!("detailed balance fails by {gap:e}")));
            }
        }
        Ok(model)
    }

    /// Kernel from row vectors.
    pub fn from_rows(space: Arc<MetricSpace>, rows: &[Vec<f64>], reversible: bool) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("kernel rows must form a square matrix"));
        }
        let kernel = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(space, kernel, None, None, reversible)
    }

    /// Two states at 0 and 1 with `P(0 -> 1) = a`, `P(1 -> 0) = b`.
    pub fn two_state(a: f64, b: f64) -> Result<Self> {
        if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a + b > 0.0) {
            return Err(Error::invalid(format!("two-state rates a = {a}, b = {b}")));
        }
        let space = Arc::new(MetricSpace::euclidean(vec![vec![0.0], vec![1.0]])?);
        let kernel = DMatrix::from_row_slice(2, 2, &[1.0 - a, a, b, 1.0 - b]);
        Self::new(space, kernel, Some(vec![b / (a + b), a / (a + b)]), None, true)
    }

    /// The chain whose every step is an independent draw from `pi`.
    pub fn iid(space: Arc<MetricSpace>, pi: Vec<f64>) -> Result<Self> {
        let n = space.len();
        check_law("law", &pi, n)?;
        let kernel = DMatrix::from_fn(n, n, |_, j| pi[j]);
        Self::new(space, kernel, Some(pi), None, true)
    }

    pub fn with_initial(mut self, nu: Vec<f64>) -> Result<Self> {
        check_law("initial law", &nu, self.len())?;
        self.nu = nu;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn invariant_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_dense(self.space.clone(), &self.pi)
    }

    pub fn initial_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_dense(self.space.clone(), &self.nu)
    }

    /// `max_ij |pi_i P_ij - pi_j P_ji|`.
    pub fn detailed_balance_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.pi[i] * self.kernel[(i, j)] - self.pi[j] * self.kernel[(j, i)]).abs());
            }
        }
        worst
    }

    /// `‖d nu / d pi‖_{L^r(pi)}`; `r = ∞` gives the largest ratio.
    pub fn radon_nikodym_norm(&self, r: f64) -> Result<f64> {
        if !(r >= 1.0) {
            return Err(Error::invalid(format!("r = {r} must be at least 1")));
        }
        let mut acc = 0.0;
        let mut worst = 0.0f64;
        for (&p, &q) in self.pi.iter().zip(&self.nu) {
            if q == 0.0 {
                continue;
            }
            if p == 0.0 {
                return Err(Error::invalid("initial law is not absolutely continuous w.r.t. pi"));
            }
            let ratio = q / p;
            worst = worst.max(ratio);
            if r.is_finite() {
                acc += p * ratio.powf(r);
            }
        }
        Ok(if r.is_finite() { acc.powf(1.0 / r) } else { worst })
    }

    /// Dense CSV: one line per kernel row, then a line holding `pi`.
    pub fn write_kernel_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        for row in self.kernel.row_iter() {
            w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(to_io)?;
        }
        w.write_record(self.pi.iter().map(|x| format!("{x:e}"))).map_err(to_io)?;
        w.flush()?;
        Ok(())
    }

    /// Reads [`write_kernel_csv`](Self::write_kernel_csv) output for the
    /// states of `space`; the initial law is set to `pi`.
    pub fn read_kernel_csv(input: impl std::io::Read, space: Arc<MetricSpace>, reversible: bool) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("kernel CSV line {}: {e}", line + 1)))?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("kernel CSV line {}: bad number {f:?}", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let Some(pi) = rows.pop() else {
            return Err(Error::Parse("empty kernel CSV".into()));
        };
        let n = rows.len();
        if pi.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(format!("kernel CSV needs {n} rows of {n} values plus a pi row")));
        }
        let kernel = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(space, kernel, Some(pi), None, reversible)
    }
}

fn check_law(name: &str, w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::invalid(format!("{name} has {} entries for {n} states", w.len())));
    }
    if w.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::invalid(format!("{name} has a negative or non-finite entry")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// Solves `pi (P - I) = 0`, `sum pi = 1`.
fn stationary(kernel: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = kernel.nrows();
    let mut a = kernel.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or_else(|| Error::Numeric("no unique invariant law (reducible kernel?)".into()))?;
    let x: Vec<f64> = x.iter().map(|&v| if v < 0.0 && v > -1e-12 { 0.0 } else { v }).collect();
    let s: f64 = x.iter().sum();
    Ok(x.into_iter().map(|v| v / s).collect())
}

/// Random-walk Metropolis kernel on the states of `space`, taken in index
/// order.
///
/// From state `i` the proposal is uniform on `i - h ..= i + h` with
/// `h = proposal_scale` (so it holds with probability `1/(2h+1)`); proposals
/// outside the grid are rejected, and a move to `j` is accepted with
/// probability `min(1, density[j] / density[i])`. The kernel is reversible
/// for the normalised density.
pub fn metropolis_kernel(space: Arc<MetricSpace>, density: &[f64], proposal_scale: usize) -> Result<MarkovModel> {
    let n = space.len();
    if density.len() != n {
        return Err(Error::invalid(format!("density has {} values for {n} states", density.len())));
    }
    if density.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
        return Err(Error::invalid("target density must be positive and finite"));
    }
    if proposal_scale == 0 {
        return Err(Error::invalid("proposal scale must be at least 1"));
    }
    let total: f64 = density.iter().sum();
    let pi: Vec<f64> = density.iter().map(|d| d / total).collect();
    let q = 1.0 / (2 * proposal_scale + 1) as f64;
    let mut kernel = DMatrix::zeros(n, n);
    for i in 0..n {
        let lo = i.saturating_sub(proposal_scale);
        let hi = (i + proposal_scale).min(n - 1);
        let mut moved = 0.0;
        for j in lo..=hi {
            if j != i {
                let p = q * (density[j] / density[i]).min(1.0);
                kernel[(i, j)] = p;
                moved += p;
            }
        }
        kernel[(i, i)] = 1.0 - moved;
    }
    MarkovModel::new(space, kernel, Some(pi), None, true)
}

/// [`metropolis_kernel`] on `m` equispaced points of `[0, 1]`.
pub fn metropolis_on_grid(m: usize, density: impl Fn(f64) -> f64, proposal_scale: usize) -> Result<MarkovModel> {
    if m < 2 {
        return Err(Error::invalid("grid needs at least two points"));
    }
    let xs: Vec<f64> = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
    let dens: Vec<f64> = xs.iter().map(|&x| density(x)).collect();
    let space = Arc::new(MetricSpace::euclidean(xs.into_iter().map(|x| vec![x]).collect())?);
    metropolis_kernel(space, &dens, proposal_scale)
}

/// Reads a one-column integer trajectory CSV with header `state`.
pub fn read_trajectory_csv(input: impl BufRead) -> Result<Vec<usize>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    r.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec.map_err(|e| Error::Parse(format!("trajectory line {}: {e}", line + 2)))?;
            rec[0].parse::<usize>().map_err(|_| Error::Parse(format!("trajectory line {}: bad state", line + 2)))
        })
        .collect()
}

pub fn write_trajectory_csv(trajectory: &[usize], mut out: impl Write) -> Result<()> {
    writeln!(out, "state")?;
    for s in trajectory {
        writeln!(out, "{s}")?;
    }
    Ok(())
}
