//! Active-set non-negative least squares (Lawson–Hanson) with Tikhonov regularization.
//!
//! Minimizes `‖D·x − t‖² + λ‖x‖²` subject to `x ≥ 0`. The solver works on the normal equations
//! `H = DᵀD + λI`, `g = Dᵀt`, so each active-set step is a Cholesky solve of the size of the
//! free set.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnlsOptions {
    /// KKT tolerance, relative to `max(1, ‖g‖∞)`.
    pub kkt_tol: f64,
    /// Outer iteration cap as a multiple of the number of unknowns.
    pub max_iter_factor: usize,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        Self { kkt_tol: 1e-8, max_iter_factor: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Largest KKT violation of the returned point, in gradient units.
    pub kkt_residual: f64,
}

pub fn nnls_solve(design: &DMatrix<f64>, target: &DVector<f64>, lambda: f64) -> Result<NnlsSolution> {
    nnls_solve_with(design, target, lambda, &NnlsOptions::default())
}

pub fn nnls_solve_with(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    lambda: f64,
    opts: &NnlsOptions,
) -> Result<NnlsSolution> {
    if design.ncols() == 0 {
        return Err(invalid("design matrix has no columns"));
    }
    if design.nrows() != target.len() {
        return Err(invalid(format!("design has {} rows but target has {}", design.nrows(), target.len())));
    }
    let (h, g) = normal_equations(design, target, lambda)?;
    nnls_gram(&h, &g, None, opts)
}

/// `(DᵀD + λI, Dᵀt)`
pub fn normal_equations(design: &DMatrix<f64>, target: &DVector<f64>, lambda: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid("regularization must be finite and non-negative"));
    }
    let mut h = design.tr_mul(design);
    for i in 0..h.nrows() {
        h[(i, i)] += lambda;
    }
    Ok((h, design.tr_mul(target)))
}

/// Largest violation of `x ≥ 0`, `∇ ≥ 0` on zero coordinates and `∇ = 0` on positive ones, where
/// `∇ = H·x − g`.
pub fn kkt_residual(h: &DMatrix<f64>, g: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let grad = h * x - g;
    x.iter().zip(grad.iter()).fold(0.0, |acc: f64, (&xi, &gi)| {
        let v = if xi > 0.0 { gi.abs() } else { (-gi).max(0.0).max(-xi) };
        acc.max(v)
    })
}

fn solve_subset(h: &DMatrix<f64>, g: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |r, c| h[(idx[r], idx[c])]);
    let rhs = DVector::from_fn(k, |r, _| g[idx[r]]);
    match Cholesky::new(sub.clone()) {
        Some(ch) => ch.solve(&rhs),
        None => sub
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .unwrap_or_else(|_| DVector::zeros(k)),
    }
}

/// Minimizes `½xᵀHx − gᵀx` over `x ≥ 0` for symmetric positive semidefinite `H`.
///
/// `initial_free` seeds the free set; the default is the empty set.
pub fn nnls_gram(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    initial_free: Option<&[bool]>,
    opts: &NnlsOptions,
) -> Result<NnlsSolution> {
    let n = g.len();
    if n == 0 || h.nrows() != n || h.ncols() != n {
        return Err(invalid("Hessian and gradient sizes disagree"));
    }
    let tol = opts.kkt_tol * g.amax().max(1.0);
    let max_iter = opts.max_iter_factor * n;
    let mut x = DVector::zeros(n);
    let mut free = match initial_free {
        Some(f) if f.len() == n => f.to_vec(),
        Some(_) => return Err(invalid("initial free set has the wrong length")),
        None => vec![false; n],
    };
    let mut blocked = vec![false; n];
    let mut iterations = 0;
    let mut pending = free.iter().any(|&f| f);

    loop {
        if !pending {
            let grad = h * &x - g;
            let entering = (0..n)
                .filter(|&i| !free[i] && !blocked[i] && -grad[i] > tol)
                .max_by(|&a, &b| (-grad[a]).total_cmp(&-grad[b]));
            let Some(j) = entering else { break };
            if iterations >= max_iter {
                return Err(Error::IterationCap { iterations, best: x });
            }
            iterations += 1;
            free[j] = true;
        }
        pending = false;

        // Inner loop: move towards the unconstrained optimum on the free set, dropping
        // coordinates that would turn negative.
        for _ in 0..=n {
            let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
            if idx.is_empty() {
                break;
            }
            let z = solve_subset(h, g, &idx);
            if z.iter().all(|&v| v > 0.0) {
                let changed = idx.iter().zip(z.iter()).any(|(&i, &v)| x[i] != v);
                for (&i, &v) in idx.iter().zip(z.iter()) {
                    x[i] = v;
                }
                if changed {
                    blocked.iter_mut().for_each(|b| *b = false);
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (&i, &v) in idx.iter().zip(z.iter()) {
                if v <= 0.0 {
                    let denom = x[i] - v;
                    let a = if denom > 0.0 { x[i] / denom } else { 0.0 };
                    alpha = alpha.min(a);
                }
            }
            let mut moved = false;
            for (&i, &v) in idx.iter().zip(z.iter()) {
                let next = x[i] + alpha * (v - x[i]);
                moved |= next != x[i];
                x[i] = next;
            }
            let mut dropped = false;
            for (&i, &v) in idx.iter().zip(z.iter()) {
                if x[i] < 0.0 || (v <= 0.0 && x[i] <= f64::EPSILON * z.amax().max(1.0)) {
                    x[i] = 0.0;
                    free[i] = false;
                    dropped = true;
                    if !moved {
                        blocked[i] = true;
                    }
                }
            }
            if moved {
                blocked.iter_mut().for_each(|b| *b = false);
            }
            if !dropped {
                break;
            }
        }
    }

    let kkt = kkt_residual(h, g, &x);
    Ok(NnlsSolution { x, iterations, kkt_residual: kkt })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_negative_coordinate() {
        let s = nnls_solve(&DMatrix::identity(2, 2), &DVector::from_vec(vec![-1.0, 2.0]), 0.0).unwrap();
        assert_eq!(s.x.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn interior_optimum_equals_ridge_solution() {
        let d = DMatrix::from_row_slice(4, 3, &[2.0, 0.1, 0.0, 0.3, 1.5, 0.2, 0.0, 0.4, 1.0, 0.5, 0.5, 0.5]);
        let t = DVector::from_vec(vec![2.0, 1.8, 1.4, 1.5]);
        let lambda = 0.1;
        let s = nnls_solve(&d, &t, lambda).unwrap();
        let (h, g) = normal_equations(&d, &t, lambda).unwrap();
        let ridge = h.cholesky().unwrap().solve(&g);
        assert!(ridge.iter().all(|&v| v > 0.0));
        assert!((s.x - ridge).amax() < 1e-10);
    }

    #[test]
    fn warm_start_agrees() {
        let d = DMatrix::from_fn(12, 6, |r, c| ((r * 7 + c * 3) % 11) as f64 - 5.0);
        let t = DVector::from_fn(12, |r, _| (r as f64 * 0.7).sin());
        let (h, g) = normal_equations(&d, &t, 0.1).unwrap();
        let cold = nnls_gram(&h, &g, None, &NnlsOptions::default()).unwrap();
        let warm = nnls_gram(&h, &g, Some(&[true; 6]), &NnlsOptions::default()).unwrap();
        assert!((cold.x - warm.x).amax() < 1e-10);
    }

    #[test]
    fn iteration_cap_returns_best_iterate() {
        let d = DMatrix::identity(3, 3);
        let t = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let opts = NnlsOptions { kkt_tol: 1e-8, max_iter_factor: 0 };
        match nnls_solve_with(&d, &t, 0.0, &opts) {
            Err(Error::IterationCap { iterations: 0, best }) => assert_eq!(best, DVector::zeros(3)),
            other => panic!("expected iteration cap, got {other:?}"),
        }
        // Already optimal at the origin: no iteration needed.
        let s = nnls_solve_with(&d, &(t * -1.0), 0.0, &opts).unwrap();
        assert_eq!(s.x, DVector::zeros(3));
    }

    #[test]
    fn shape_errors() {
        assert!(nnls_solve(&DMatrix::zeros(2, 0), &DVector::zeros(2), 0.0).is_err());
        assert!(nnls_solve(&DMatrix::zeros(2, 2), &DVector::zeros(3), 0.0).is_err());
        assert!(nnls_solve(&DMatrix::zeros(2, 2), &DVector::zeros(2), -1.0).is_err());
    }
}
