//! Backward-in-time induction from the final condition with boundary
//! interpolation and per-step CFL validation.

use log::{debug, warn};
use thiserror::Error;

use crate::assembly::DiffusionProfile;
use crate::control::{HJBProblem, OperatorBuilder, SplitError, SplitOperators, SplittingPolicy};
use crate::mesh::{Mesh, P1Geometry};
use crate::solver::{newton_solve, LinearConfig, NewtonConfig, NewtonMonitor, NewtonStats, SolverError};

/// Relative slack on the CFL bound, absorbing rounding in `h = T / n`.
const CFL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtLaw {
    /// `h = ratio · Δx`
    Linear,
    /// `h = ratio · Δx²`
    Quadratic,
}

impl std::str::FromStr for DtLaw {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(DtLaw::Linear),
            "quadratic" => Ok(DtLaw::Quadratic),
            other => Err(format!("unknown dt law '{other}' (expected linear or quadratic)")),
        }
    }
}

impl std::fmt::Display for DtLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DtLaw::Linear => "linear",
            DtLaw::Quadratic => "quadratic",
        })
    }
}

/// Uniform grid `s_k = k·h`, `k = 0..=n_steps`, with `n_steps·h = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub h: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn with_steps(horizon: f64, n_steps: usize) -> Self {
        assert!(horizon > 0.0 && n_steps > 0);
        Self {
            horizon,
            h: horizon / n_steps as f64,
            n_steps,
        }
    }

    /// Largest uniform step not exceeding `h_target` (up to rounding).
    pub fn from_step(horizon: f64, h_target: f64) -> Self {
        assert!(h_target > 0.0);
        let n = (horizon / h_target * (1.0 - 1e-12)).ceil().max(1.0);
        Self::with_steps(horizon, n as usize)
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.horizon
        } else {
            k as f64 * self.h
        }
    }
}

pub fn make_time_grid(horizon: f64, dx: f64, ratio: f64, law: DtLaw) -> TimeGrid {
    assert!(ratio > 0.0, "dt ratio must be positive");
    let h = match law {
        DtLaw::Linear => ratio * dx,
        DtLaw::Quadratic => ratio * dx * dx,
    };
    TimeGrid::from_step(horizon, h)
}

/// `1 / max_{α,ℓ} diag_ℓ(Ŝ_E^α)`; `+∞` when no diagonal is positive.
pub fn cfl_max_step(ops: &SplitOperators) -> f64 {
    let mut dmax: f64 = 0.0;
    for op in &ops.controls {
        for r in 0..op.explicit.n_rows {
            dmax = dmax.max(op.explicit.diagonal(r));
        }
    }
    if dmax > 0.0 {
        1.0 / dmax
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// One value per mesh vertex, boundary included.
    pub values: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("CFL violation at step {step} (t = {t}): h = {h} exceeds h_max = {h_max}")]
    Cfl { step: usize, t: f64, h: f64, h_max: f64 },
    #[error("operator assembly failed at step {step}: {source}")]
    Split { step: usize, source: SplitError },
    #[error("step {step} (t = {t}): {source}")]
    Solver { step: usize, t: f64, source: SolverError },
    #[error("non-finite value in the solution at step {step}")]
    NonFinite { step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveConfig {
    pub newton: NewtonConfig,
    pub linear: LinearConfig,
    pub splitting: SplittingPolicy,
}

/// Hooks into the time loop. Steps are numbered by the time level being
/// computed (`k = n_steps − 1` first, down to `0`).
pub trait SolveObserver: NewtonMonitor {
    fn on_step(&mut self, _step: usize, _t: f64) {}
    fn on_operators(&mut self, _step: usize, _h: f64, _ops: &SplitOperators) {}
    /// Every time level, `t = T` first.
    fn on_snapshot(&mut self, _step: usize, _snapshot: &Snapshot) {}
}

/// Observer that ignores everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl NewtonMonitor for NoObserver {}
impl SolveObserver for NoObserver {}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// `v(0, ·)`.
    pub initial: Snapshot,
    pub stats: NewtonStats,
    /// Control-aggregated diffusion profile per assembled operator set, as
    /// `(step, profile)`; a single entry for autonomous problems.
    pub profiles: Vec<(usize, DiffusionProfile)>,
    /// Newton policy of the last step (`k = 0`).
    pub final_policy: Vec<usize>,
    /// Smallest CFL bound met along the run.
    pub min_h_max: f64,
}

/// Interpolates `g(·, t)` into the boundary entries of `v`.
fn set_boundary(problem: &HJBProblem, mesh: &Mesh, t: f64, v: &mut [f64]) {
    for b in mesh.boundary_nodes() {
        v[b] = (problem.boundary)(mesh.vertices()[b], t);
    }
}

pub fn final_condition(problem: &HJBProblem, mesh: &Mesh) -> Vec<f64> {
    mesh.vertices().iter().map(|&p| (problem.final_data)(p)).collect()
}

pub fn backward_solve(
    problem: &HJBProblem,
    mesh: &Mesh,
    geom: &P1Geometry,
    grid: &TimeGrid,
    cfg: &SolveConfig,
) -> Result<SolveOutput, StepError> {
    backward_solve_observed(problem, mesh, geom, grid, cfg, &mut NoObserver)
}

pub fn backward_solve_observed<O: SolveObserver + ?Sized>(
    problem: &HJBProblem,
    mesh: &Mesh,
    geom: &P1Geometry,
    grid: &TimeGrid,
    cfg: &SolveConfig,
    observer: &mut O,
) -> Result<SolveOutput, StepError> {
    let builder = OperatorBuilder::new(mesh, geom);
    let h = grid.h;
    let mut v_next = final_condition(problem, mesh);
    if v_next.iter().any(|x| !x.is_finite()) {
        return Err(StepError::NonFinite { step: grid.n_steps });
    }
    observer.on_snapshot(
        grid.n_steps,
        &Snapshot {
            t: grid.horizon,
            values: v_next.clone(),
        },
    );

    let mut iters = Vec::with_capacity(grid.n_steps);
    let mut profiles = Vec::new();
    let mut min_h_max = f64::INFINITY;
    let mut cached: Option<SplitOperators> = None;
    let mut final_policy = Vec::new();

    for k in (0..grid.n_steps).rev() {
        let t = grid.time(k);
        observer.on_step(k, t);
        if cached.is_none() || !problem.autonomous {
            // explicit part at the known level s^{k+1}, implicit at s^k
            let ops = builder
                .build(problem, grid.time(k + 1), t, cfg.splitting)
                .map_err(|source| StepError::Split { step: k, source })?;
            let h_max = cfl_max_step(&ops);
            min_h_max = min_h_max.min(h_max);
            if h > h_max * (1.0 + CFL_SLACK) {
                return Err(StepError::Cfl { step: k, t, h, h_max });
            }
            profiles.push((k, ops.aggregated_profile()));
            cached = Some(ops);
        }
        let ops = cached.as_ref().expect("operators assembled above");
        observer.on_operators(k, h, ops);

        let mut start = v_next.clone();
        set_boundary(problem, mesh, t, &mut start);
        let out = newton_solve(&v_next, start, ops, h, &cfg.newton, &cfg.linear, observer)
            .map_err(|source| StepError::Solver { step: k, t, source })?;
        if out.v.iter().any(|x| !x.is_finite()) {
            return Err(StepError::NonFinite { step: k });
        }
        debug!("step {k}: t = {t}, {} Newton iterations", out.iterations);
        iters.push(out.iterations);
        final_policy = out.policy;
        v_next = out.v;
        observer.on_snapshot(
            k,
            &Snapshot {
                t,
                values: v_next.clone(),
            },
        );
    }

    Ok(SolveOutput {
        initial: Snapshot { t: 0.0, values: v_next },
        stats: NewtonStats::new(iters, mesh.n_interior()),
        profiles,
        final_policy,
        min_h_max,
    })
}

/// Smallest CFL bound over `samples + 1` equispaced explicit evaluation
/// times in `[0, T]` (one evaluation for autonomous problems).
pub fn cfl_dry_run(
    problem: &HJBProblem,
    mesh: &Mesh,
    geom: &P1Geometry,
    splitting: SplittingPolicy,
    samples: usize,
) -> Result<f64, SplitError> {
    let builder = OperatorBuilder::new(mesh, geom);
    let n = if problem.autonomous { 0 } else { samples.max(1) };
    let mut h_max = f64::INFINITY;
    for i in 0..=n {
        let t = if n == 0 { problem.horizon } else { problem.horizon * i as f64 / n as f64 };
        let ops = builder.build(problem, t, t, splitting)?;
        h_max = h_max.min(cfl_max_step(&ops));
    }
    Ok(h_max)
}

/// `h = safety · h_max` from a dry run, then verified step by step: if a
/// step time between the samples has a tighter bound, the grid is refined.
pub fn auto_time_grid(
    problem: &HJBProblem,
    mesh: &Mesh,
    geom: &P1Geometry,
    splitting: SplittingPolicy,
    safety: f64,
) -> Result<TimeGrid, SplitError> {
    let h_max = cfl_dry_run(problem, mesh, geom, splitting, 64)?;
    if !h_max.is_finite() {
        warn!("no explicit diffusion: CFL bound is infinite, using 64 steps");
        return Ok(TimeGrid::with_steps(problem.horizon, 64));
    }
    let mut grid = TimeGrid::from_step(problem.horizon, safety * h_max);
    if problem.autonomous {
        return Ok(grid);
    }
    let builder = OperatorBuilder::new(mesh, geom);
    loop {
        let mut worst = f64::INFINITY;
        for k in 1..=grid.n_steps {
            let ops = builder.build(problem, grid.time(k), grid.time(k - 1), splitting)?;
            worst = worst.min(cfl_max_step(&ops));
        }
        if grid.h <= worst {
            return Ok(grid);
        }
        grid = TimeGrid::from_step(problem.horizon, safety * worst);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{unit_circle_controls, Coefficients};
    use crate::mesh::{p1_geometry, refine_times};
    use crate::testutil::hexagon;
    use std::sync::Arc;

    #[test]
    fn grid_examples() {
        let g = make_time_grid(1.0, 0.5, 0.1, DtLaw::Linear);
        assert_eq!(g.n_steps, 20);
        assert!((g.h - 0.05).abs() < 1e-15);
        let g = make_time_grid(1.0, 0.5, 0.4, DtLaw::Quadratic);
        assert_eq!(g.n_steps, 10);
        assert!((g.h - 0.1).abs() < 1e-15);
        let g = make_time_grid(0.009, 0.25, 0.01, DtLaw::Quadratic);
        assert!(g.n_steps >= 1);
        assert!((g.h * g.n_steps as f64 - 0.009).abs() <= 1e-12 * 0.009);
        assert_eq!(g.time(g.n_steps), 0.009);
        // a step larger than the horizon still gives one step
        assert_eq!(TimeGrid::from_step(1.0, 5.0).n_steps, 1);
    }

    fn transport(n_beta: usize, autonomous: bool) -> HJBProblem {
        HJBProblem {
            controls: unit_circle_controls(n_beta).unwrap(),
            coeff: Arc::new(|c, _p, _t| Coefficients {
                a: 0.0,
                b: c.direction.unwrap().vector,
                c: 0.0,
                d: 1.0,
            }),
            boundary: Arc::new(|_, _| 0.0),
            final_data: Arc::new(|_| 0.0),
            horizon: 1.0,
            autonomous,
        }
    }

    #[test]
    fn cfl_scales_linearly_with_dx() {
        let p = transport(16, true);
        let m0 = refine_times(&hexagon(1.0), 2);
        let m1 = refine_times(&hexagon(1.0), 3);
        let h0 = cfl_dry_run(&p, &m0, &p1_geometry(&m0), SplittingPolicy::default(), 1).unwrap();
        let h1 = cfl_dry_run(&p, &m1, &p1_geometry(&m1), SplittingPolicy::default(), 1).unwrap();
        let ratio = h1 / h0;
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut p = transport(8, true);
        p.coeff = Arc::new(|c, _p, _t| Coefficients {
            a: 0.1,
            b: c.direction.unwrap().vector,
            c: 0.0,
            d: 0.0,
        });
        let m = refine_times(&hexagon(1.0), 2);
        let g = p1_geometry(&m);
        let grid = auto_time_grid(&p, &m, &g, SplittingPolicy::default(), 0.9).unwrap();
        let out = backward_solve(&p, &m, &g, &grid, &SolveConfig::default()).unwrap();
        assert!(out.initial.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cfl_violation_is_reported() {
        let p = transport(8, true);
        let m = refine_times(&hexagon(1.0), 2);
        let g = p1_geometry(&m);
        let grid = TimeGrid::with_steps(1.0, 1);
        match backward_solve(&p, &m, &g, &grid, &SolveConfig::default()) {
            Err(StepError::Cfl { step, h, h_max, .. }) => {
                assert_eq!(step, 0);
                assert!(h > h_max);
            }
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[derive(Default)]
    struct Recorder {
        snapshots: Vec<(usize, f64)>,
        steps: Vec<usize>,
    }
    impl NewtonMonitor for Recorder {}
    impl SolveObserver for Recorder {
        fn on_step(&mut self, step: usize, _t: f64) {
            self.steps.push(step);
        }
        fn on_snapshot(&mut self, step: usize, s: &Snapshot) {
            self.snapshots.push((step, s.t));
        }
    }

    #[test]
    fn each_level_visited_once_backwards() {
        let p = transport(8, true);
        let m = refine_times(&hexagon(1.0), 1);
        let g = p1_geometry(&m);
        let grid = auto_time_grid(&p, &m, &g, SplittingPolicy::default(), 0.9).unwrap();
        let mut rec = Recorder::default();
        backward_solve_observed(&p, &m, &g, &grid, &SolveConfig::default(), &mut rec).unwrap();
        let expect: Vec<usize> = (0..grid.n_steps).rev().collect();
        assert_eq!(rec.steps, expect);
        assert_eq!(rec.snapshots.len(), grid.n_steps + 1);
        assert_eq!(rec.snapshots[0], (grid.n_steps, 1.0));
        assert_eq!(rec.snapshots.last().unwrap(), &(0, 0.0));
    }

    #[test]
    fn distance_like_solution_is_bounded_and_positive() {
        let p = transport(16, true);
        let m = refine_times(&hexagon(1.0), 2);
        let g = p1_geometry(&m);
        let grid = auto_time_grid(&p, &m, &g, SplittingPolicy::default(), 0.9).unwrap();
        let out = backward_solve(&p, &m, &g, &grid, &SolveConfig::default()).unwrap();
        // inradius of the unit hexagon
        let inradius = 3f64.sqrt() / 2.0;
        for &x in &out.initial.values {
            assert!(x >= 0.0 && x <= inradius + 1e-10, "{x}");
        }
        assert!(out.initial.values.iter().cloned().fold(0.0, f64::max) > 0.5 * inradius);
    }

    #[test]
    fn monotone_in_final_data() {
        let base = transport(8, true);
        let m = refine_times(&hexagon(1.0), 1);
        let g = p1_geometry(&m);
        let grid = auto_time_grid(&base, &m, &g, SplittingPolicy::default(), 0.9).unwrap();
        let bump_node = m.interior_nodes()[3];
        let bump = m.vertices()[bump_node];
        let mut raised = base.clone();
        raised.final_data = Arc::new(move |p| if p == bump { 0.3 } else { 0.0 });
        let lo = backward_solve(&base, &m, &g, &grid, &SolveConfig::default()).unwrap();
        let hi = backward_solve(&raised, &m, &g, &grid, &SolveConfig::default()).unwrap();
        for (a, b) in lo.initial.values.iter().zip(&hi.initial.values) {
            assert!(b >= &(a - 1e-10));
        }
    }
}
