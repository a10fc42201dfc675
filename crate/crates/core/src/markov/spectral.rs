use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::MarkovModel;
use crate::{Error, Result};

/// Largest chain handled by the dense eigensolver.
pub const SPECTRAL_STATE_LIMIT: usize = 5000;

#[derive(Debug, Clone, Serialize)]
pub struct SpectralGap {
    /// Poincaré constant `C_P = 1 / (1 - lambda)`; infinite when `lambda = 1`.
    pub c_p: f64,
    /// Second largest eigenvalue of `P^2`.
    pub lambda: f64,
    /// Eigenvalue of `P` of largest modulus after the top one.
    pub second_eigenvalue: f64,
    /// Spectrum of `P`, in decreasing order.
    pub eigenvalues: Vec<f64>,
}

/// Spectral gap of a reversible finite chain from the symmetrised kernel
/// `D^{1/2} P D^{-1/2}`, `D = diag(pi)`.
pub fn spectral_gap_finite(model: &MarkovModel) -> Result<SpectralGap> {
    if !model.is_reversible() {
        return Err(Error::Unsupported(
            "spectral gap needs a reversible kernel; use check_variance_decay instead".into(),
        ));
    }
    let n = model.len();
    if n > SPECTRAL_STATE_LIMIT {
        return Err(Error::SizeLimit(format!("{n} states (at most {SPECTRAL_STATE_LIMIT})")));
    }
    let pi = model.pi();
    if pi.iter().any(|&p| p <= 0.0) {
        return Err(Error::Unsupported("spectral gap needs pi > 0 on every state".into()));
    }
    let root: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let k = model.kernel();
    let mut s = DMatrix::from_fn(n, n, |i, j| root[i] * k[(i, j)] / root[j]);
    s = (&s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(s.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if (ev[0] - 1.0).abs() > 1e-9 {
        return Err(Error::Numeric(format!("top eigenvalue {} is not 1", ev[0])));
    }
    let second = ev[1..].iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let lambda = (second * second).min(1.0);
    if n <= 500 {
        let sq = SymmetricEigen::try_new(&s * &s, 1e-15, 10_000)
            .ok_or_else(|| Error::Numeric("eigensolver failed on P^2".into()))?;
        let mut ev2: Vec<f64> = sq.eigenvalues.iter().copied().collect();
        ev2.sort_by(|a, b| b.total_cmp(a));
        let direct = ev2.get(1).copied().unwrap_or(0.0).max(0.0);
        if (direct - lambda).abs() > 1e-9 {
            return Err(Error::Numeric(format!("lambda_2(P^2) = {direct} but second eigenvalue squared = {lambda}")));
        }
    }
    let c_p = if lambda < 1.0 { 1.0 / (1.0 - lambda) } else { f64::INFINITY };
    Ok(SpectralGap { c_p, lambda, second_eigenvalue: second, eigenvalues: ev })
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceDecay {
    /// `Var_pi(P^n f)` for `n = 0, 1, ...` until it drops below
    /// `1e-18 Var_pi f` or `n_max` is reached.
    pub variances: Vec<f64>,
    /// Asymptotic decay rate, the last ratio of consecutive variances.
    pub lambda: f64,
    /// Smallest `C` with `Var P^n f <= C lambda^n Var f` on the computed range.
    pub c: f64,
    /// Smallest rate that works with `C = 1`.
    pub lambda_unit_c: f64,
    /// Spectral `lambda` for reversible models.
    pub spectral_lambda: Option<f64>,
}

const VARIANCE_FLOOR: f64 = 1e-18;

/// Exact `Var_pi(P^n f)` by repeated multiplication and the fitted decay.
/// For reversible models, `Var P^n f <= lambda^n Var f` with the spectral
/// `lambda` is checked and a violation is a numerical error.
pub fn check_variance_decay(model: &MarkovModel, f: &[f64], n_max: usize) -> Result<VarianceDecay> {
    let n = model.len();
    if f.len() != n {
        return Err(Error::invalid(format!("function has {} values for {n} states", f.len())));
    }
    let pi = DVector::from_row_slice(model.pi());
    let var = |g: &DVector<f64>| {
        let m = pi.dot(g);
        pi.iter().zip(g.iter()).map(|(p, x)| p * (x - m) * (x - m)).sum::<f64>()
    };
    let mean = pi.dot(&DVector::from_row_slice(f));
    let mut g = DVector::from_iterator(n, f.iter().map(|x| x - mean));
    let v0 = var(&g);
    let scale = pi.iter().zip(f).map(|(p, x)| p * x * x).sum::<f64>();
    if !(v0 > 1e-15 * scale) {
        return Err(Error::DegenerateFunction);
    }
    let mut variances = vec![v0];
    for _ in 0..n_max {
        g = model.kernel() * g;
        let v = var(&g);
        if v <= VARIANCE_FLOOR * v0 {
            variances.push(v.max(0.0));
            break;
        }
        variances.push(v);
    }
    let usable = variances.iter().rposition(|&v| v > VARIANCE_FLOOR * v0).unwrap_or(0);
    let lambda = match usable {
        0 => variances.get(1).map_or(0.0, |v| v / v0),
        k => variances[k] / variances[k - 1],
    };
    let c = variances[..=usable]
        .iter()
        .enumerate()
        .map(|(k, v)| if lambda > 0.0 { v / (v0 * lambda.powi(k as i32)) } else { 1.0 })
        .fold(1.0, f64::max);
    let lambda_unit_c =
        variances[1..].iter().enumerate().map(|(k, v)| (v / v0).powf(1.0 / (k + 1) as f64)).fold(0.0, f64::max);
    let spectral_lambda = if model.is_reversible() && n <= SPECTRAL_STATE_LIMIT {
        let lam = spectral_gap_finite(model)?.lambda;
        for (k, v) in variances.iter().enumerate() {
            if *v > v0 * lam.powi(k as i32) * (1.0 + 1e-8) + 1e-15 * v0 {
                return Err(Error::Numeric(format!("Var P^{k} f = {v} exceeds lambda^{k} Var f")));
            }
        }
        Some(lam)
    } else {
        None
    };
    Ok(VarianceDecay { variances, lambda, c, lambda_unit_c, spectral_lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_gaps() {
        let g = spectral_gap_finite(&MarkovModel::two_state(0.5, 0.5).unwrap()).unwrap();
        assert!(g.lambda.abs() < 1e-15 && (g.c_p - 1.0).abs() < 1e-12);
        let g = spectral_gap_finite(&MarkovModel::two_state(0.1, 0.1).unwrap()).unwrap();
        assert!((g.second_eigenvalue - 0.8).abs() < 1e-12);
        assert!((g.lambda - 0.64).abs() < 1e-12);
        assert!((g.c_p - 1.0 / 0.36).abs() < 1e-9);
    }

    #[test]
    fn lazier_chain_mixes_slower() {
        let mut last = -1.0;
        for a in [0.5, 0.4, 0.3, 0.2, 0.1, 0.05] {
            let l = spectral_gap_finite(&MarkovModel::two_state(a, a).unwrap()).unwrap().lambda;
            assert!(l > last);
            last = l;
        }
    }

    #[test]
    fn two_state_variance_decay_exact() {
        let m = MarkovModel::two_state(0.1, 0.1).unwrap();
        let r = check_variance_decay(&m, &[0.0, 1.0], 50).unwrap();
        for (k, v) in r.variances.iter().enumerate() {
            assert!((v - 0.25 * 0.64f64.powi(k as i32)).abs() <= 1e-14 * 0.64f64.powi(k as i32));
        }
        assert!((r.lambda - 0.64).abs() < 1e-12);
        assert!((r.c - 1.0).abs() < 1e-9);
        assert_eq!(r.spectral_lambda.map(|l| (l - 0.64).abs() < 1e-12), Some(true));
    }

    #[test]
    fn constant_function_is_degenerate() {
        let m = MarkovModel::two_state(0.1, 0.1).unwrap();
        assert!(matches!(check_variance_decay(&m, &[2.0, 2.0], 10), Err(Error::DegenerateFunction)));
    }

    #[test]
    fn iid_kernel_kills_variance() {
        let m = MarkovModel::two_state(0.3, 0.7).unwrap();
        let r = check_variance_decay(&m, &[1.0, -1.0], 10).unwrap();
        assert!(r.variances[1] <= 1e-30);
        assert_eq!(r.lambda, r.variances[1] / r.variances[0]);
        assert!(r.lambda < 1e-15);
    }

    #[test]
    fn rejects_non_reversible() {
        let space = std::sync::Arc::new(
            crate::measures::MetricSpace::euclidean(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap(),
        );
        let rows = vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]];
        let m = MarkovModel::from_rows(space, &rows, false).unwrap();
        assert!(matches!(spectral_gap_finite(&m), Err(Error::Unsupported(_))));
        let r = check_variance_decay(&m, &[1.0, 0.0, 0.0], 200).unwrap();
        assert!(r.spectral_lambda.is_none());
        // Circulant kernel: the nontrivial eigenvalues have modulus 1/2.
        assert!((r.lambda - 0.25).abs() < 1e-9, "{}", r.lambda);
    }
}
