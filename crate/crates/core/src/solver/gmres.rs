//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.
//!
//! Convergence is decided on the true residual `‖b − A x‖₂`, recomputed at
//! every restart; the Givens estimate only ends an inner cycle early.

use thiserror::Error;

use crate::assembly::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig {
    /// Relative residual target in the 2-norm.
    pub tol: f64,
    /// Krylov dimension per cycle.
    pub restart: usize,
    /// Budget of inner iterations over all cycles.
    pub max_iter: usize,
    /// Right Jacobi preconditioning.
    pub jacobi: bool,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 30,
            max_iter: 2000,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresReport {
    pub x: Vec<f64>,
    /// Achieved `‖b − A x‖₂ / ‖b‖₂` (0 when `b = 0`).
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmresError {
    #[error("GMRES did not reach tolerance within {iterations} iterations (best relative residual {best})")]
    NotConverged { iterations: usize, best: f64 },
    #[error("GMRES needs a square system, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("zero diagonal entry in row {0}; Jacobi preconditioner unavailable")]
    ZeroDiagonal(usize),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn residual_norm(a: &SparseMatrix, rhs: &[f64], x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    norm(&rhs.iter().zip(&ax).map(|(b, y)| b - y).collect::<Vec<_>>())
}

pub fn gmres(a: &SparseMatrix, rhs: &[f64], x0: &[f64], cfg: &LinearConfig) -> Result<GmresReport, GmresError> {
    if !a.is_square() {
        return Err(GmresError::NotSquare {
            rows: a.n_rows,
            cols: a.n_cols,
        });
    }
    let n = a.n_rows;
    assert_eq!(rhs.len(), n);
    assert_eq!(x0.len(), n);
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok(GmresReport {
            x: vec![0.0; n],
            residual: 0.0,
            iterations: 0,
        });
    }
    let inv_diag: Option<Vec<f64>> = if cfg.jacobi {
        let mut d = Vec::with_capacity(n);
        for r in 0..n {
            let v = a.diagonal(r);
            if v == 0.0 {
                return Err(GmresError::ZeroDiagonal(r));
            }
            d.push(1.0 / v);
        }
        Some(d)
    } else {
        None
    };
    let precond = |v: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(d) => v.iter().zip(d).map(|(x, s)| x * s).collect(),
            None => v.to_vec(),
        }
    };

    let target = cfg.tol * bnorm;
    let m = cfg.restart.max(1).min(n.max(1));
    let mut x = x0.to_vec();
    let mut total = 0usize;
    let mut best = f64::INFINITY;

    loop {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, y)| b - y).collect();
        let beta = norm(&r);
        best = best.min(beta / bnorm);
        if beta <= target {
            return Ok(GmresReport {
                x,
                residual: beta / bnorm,
                iterations: total,
            });
        }
        if total >= cfg.max_iter {
            return Err(GmresError::NotConverged {
                iterations: total,
                best,
            });
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // hess[j] holds column j of the Hessenberg matrix (length j + 2)
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs = Vec::<f64>::with_capacity(m);
        let mut sn = Vec::<f64>::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < cfg.max_iter {
            total += 1;
            let z = precond(&basis[k]);
            let mut w = a.mul_vec(&z);
            let mut h = vec![0.0; k + 2];
            for (j, vj) in basis.iter().enumerate() {
                let hj = dot(vj, &w);
                h[j] = hj;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hj * vi;
                }
            }
            let wn = norm(&w);
            h[k + 1] = wn;
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            let rho = h[k].hypot(h[k + 1]);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (h[k] / rho, h[k + 1] / rho) };
            cs.push(c);
            sn.push(s);
            h[k] = rho;
            h[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            hess.push(h);
            k += 1;
            if g[k].abs() <= 0.5 * target || wn <= 1e-300 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // back substitution on the k×k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[j][i] * y[j];
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (yj, vj) in y.iter().zip(&basis) {
            for (u, v) in update.iter_mut().zip(vj) {
                *u += yj * v;
            }
        }
        for (xi, ui) in x.iter_mut().zip(precond(&update)) {
            *xi += ui;
        }
    }
}
