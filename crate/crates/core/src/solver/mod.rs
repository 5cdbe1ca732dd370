//! Per-step nonlinear solve: semi-smooth Newton (policy iteration) over the
//! finite control set, with restarted GMRES for the frozen-policy systems.
//!
//! At time level k the interior unknowns solve
//!
//! ```text
//! F_ℓ(v) = (v_ℓ − v⁺_ℓ)/h + max_α [Ŝ_I^α v + Ŝ_E^α v⁺ − Ŝ_C^α]_ℓ = 0
//! ```
//!
//! where `v⁺` is the previous (later in time) level. For a fixed policy F is
//! affine, so each Newton step is one linear solve with the policy's rows.

mod gmres;

use thiserror::Error;

pub use gmres::{gmres, residual_norm, GmresError, GmresReport, LinearConfig};

use crate::assembly::SparseMatrix;
use crate::control::SplitOperators;

/// Multiple of machine epsilon (relative to the size of the terms of `F`)
/// below which a residual counts as converged.
pub const NOISE_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Max-norm residual target relative to the step's initial residual.
    pub rel_res_tol: f64,
    /// Max-norm bound on the last update.
    pub inc_tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rel_res_tol: 5e-8,
            inc_tol: 5e-9,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e}, last update {increment:e})")]
    NewtonNotConverged {
        iterations: usize,
        residual: f64,
        increment: f64,
    },
    #[error(transparent)]
    Linear(#[from] GmresError),
}

/// Hooks into the Newton loop; all methods default to no-ops.
pub trait NewtonMonitor {
    fn on_policy(&mut self, _iteration: usize, _policy: &[usize]) {}
    fn on_linear_solve(&mut self, _matrix: &SparseMatrix, _rhs: &[f64], _report: &GmresReport) {}
}

/// Monitor that ignores everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoMonitor;

impl NewtonMonitor for NoMonitor {}

/// `q^α = Ŝ_E^α v⁺ − Ŝ_C^α` for every control.
pub fn explicit_terms(ops: &SplitOperators, v_prev: &[f64]) -> Vec<Vec<f64>> {
    ops.controls
        .iter()
        .map(|op| {
            let mut q = op.explicit.mul_vec(v_prev);
            for (qi, ci) in q.iter_mut().zip(&op.source) {
                *qi -= ci;
            }
            q
        })
        .collect()
}

/// Row-wise maximum of `Ŝ_I^α v + q^α` and its first maximizing control.
fn hamiltonian(v: &[f64], ops: &SplitOperators, q_expl: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let n = ops.n_rows();
    let kv = ops.k_hat.mul_vec(v);
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut arg = vec![0usize; n];
    for (i, (op, q)) in ops.controls.iter().zip(q_expl).enumerate() {
        let s = op.implicit.apply(&kv, v);
        for r in 0..n {
            let val = s[r] + q[r];
            // strict comparison keeps the earliest control on ties
            if val > best[r] {
                best[r] = val;
                arg[r] = i;
            }
        }
    }
    (arg, best)
}

/// Maximizing control per interior row; ties go to the smallest index.
pub fn policy(v: &[f64], ops: &SplitOperators, q_expl: &[Vec<f64>]) -> Vec<usize> {
    hamiltonian(v, ops, q_expl).0
}

/// Residual `F(v)` over interior rows together with the active policy.
pub fn residual(v: &[f64], v_prev: &[f64], h: f64, ops: &SplitOperators, q_expl: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let (pol, mut f) = hamiltonian(v, ops, q_expl);
    for (r, &node) in ops.row_nodes().iter().enumerate() {
        f[r] += (v[node] - v_prev[node]) / h;
    }
    (f, pol)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Jacobian of `F` for a frozen policy, restricted to the interior unknowns.
pub fn policy_matrix(ops: &SplitOperators, pol: &[usize], h: f64) -> SparseMatrix {
    let n = ops.n_rows();
    let mut unknown_of = vec![usize::MAX; ops.n_nodes()];
    for (r, &node) in ops.row_nodes().iter().enumerate() {
        unknown_of[node] = r;
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(ops.k_hat.nnz());
    let mut values = Vec::with_capacity(ops.k_hat.nnz());
    row_offsets.push(0);
    let mut row: Vec<(usize, f64)> = Vec::new();
    for r in 0..n {
        row.clear();
        row.push((r, 1.0 / h));
        ops.controls[pol[r]].implicit.for_row(&ops.k_hat, r, |c, v| {
            let u = unknown_of[c];
            if u != usize::MAX {
                row.push((u, v));
            }
        });
        row.sort_by_key(|e| e.0);
        for &(c, v) in row.iter() {
            if col_indices.len() > *row_offsets.last().unwrap() && *col_indices.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
            }
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix {
        n_rows: n,
        n_cols: n,
        row_offsets,
        col_indices,
        values,
        diag_cols: (0..n).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    /// Full nodal vector at the new time level.
    pub v: Vec<f64>,
    /// Number of linear solves, including the one confirming convergence.
    pub iterations: usize,
    pub initial_residual: f64,
    pub residual: f64,
    pub policy: Vec<usize>,
}

/// Solves `F(v) = 0`. `v_start` carries the new level's boundary values and
/// the initial guess on interior nodes; only interior entries change.
pub fn newton_solve<M: NewtonMonitor + ?Sized>(
    v_prev: &[f64],
    v_start: Vec<f64>,
    ops: &SplitOperators,
    h: f64,
    cfg: &NewtonConfig,
    lin_cfg: &LinearConfig,
    monitor: &mut M,
) -> Result<NewtonOutcome, SolverError> {
    let q = explicit_terms(ops, v_prev);
    let rows = ops.row_nodes();
    let mut v = v_start;
    let (mut f, mut pol) = residual(&v, v_prev, h, ops, &q);
    let f0 = max_abs(&f);
    // Residuals below the rounding level of the terms of F cannot be
    // resolved; without this floor a step that starts at the discrete
    // steady state (F(v⁰) ≈ ε) never meets the relative target.
    let scale = max_abs(v_prev) / h + q.iter().map(|qa| max_abs(qa)).fold(0.0, f64::max);
    let target = (cfg.rel_res_tol * f0.max(1e-300)).max(NOISE_FACTOR * f64::EPSILON * scale);
    let mut iterations = 0;
    let mut inc = f64::INFINITY;
    loop {
        if iterations >= cfg.max_iter {
            return Err(SolverError::NewtonNotConverged {
                iterations,
                residual: max_abs(&f),
                increment: inc,
            });
        }
        monitor.on_policy(iterations, &pol);
        let m = policy_matrix(ops, &pol, h);
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let rep = gmres(&m, &rhs, &vec![0.0; rhs.len()], lin_cfg)?;
        monitor.on_linear_solve(&m, &rhs, &rep);
        inc = max_abs(&rep.x);
        for (&node, d) in rows.iter().zip(&rep.x) {
            v[node] += d;
        }
        iterations += 1;
        (f, pol) = residual(&v, v_prev, h, ops, &q);
        if max_abs(&f) <= target && inc <= cfg.inc_tol {
            break;
        }
    }
    Ok(NewtonOutcome {
        v,
        iterations,
        initial_residual: f0,
        residual: max_abs(&f),
        policy: pol,
    })
}

/// Newton iteration counts over a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonStats {
    pub iters_per_step: Vec<usize>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Number of interior unknowns (size of each linear system).
    pub n_systems: usize,
}

impl NewtonStats {
    pub fn new(iters_per_step: Vec<usize>, n_systems: usize) -> Self {
        let n = iters_per_step.len();
        let (mean, std) = if n == 0 {
            (0.0, 0.0)
        } else {
            let mean = iters_per_step.iter().sum::<usize>() as f64 / n as f64;
            let var = iters_per_step.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / n as f64;
            (mean, var.sqrt())
        };
        Self {
            iters_per_step,
            mean,
            std,
            n_systems,
        }
    }
}
