//! The three benchmarks, their oracles, error norms and refinement studies.

mod eikonal;
mod fullynl;
mod triangle;

use thiserror::Error;

pub use eikonal::{
    eikonal_problem, eikonal_problem_with_horizon, has_reflex_vertex, lattice_domain, polygon_distance, PolygonOracle,
    DEFAULT_SIDE_ROWS,
};
pub use fullynl::{fully_nonlinear_problem, g_aux, source as fully_nonlinear_source, ALPHA0, ALPHA1};
pub use fullynl::HORIZON as FULLY_NONLINEAR_HORIZON;
pub use triangle::{
    exact_gradient, exact_gradient_with_horizon, exact_solution, exact_solution_with_horizon, subdivided_triangle,
    triangle_base_mesh, triangle_coefficients, triangle_mesh, triangle_problem, triangle_problem_with_horizon,
    triangle_vertices, HORIZON as TRIANGLE_HORIZON,
};

use crate::control::{ControlError, HJBProblem, SplitError, SplittingPolicy};
use crate::mesh::{p1_geometry, refine_times, Mesh, P1Geometry, Point2};
use crate::timestepper::{
    auto_time_grid, backward_solve_observed, make_time_grid, DtLaw, NoObserver, SolveConfig, SolveObserver,
    SolveOutput, StepError, TimeGrid,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("level {level}: {source}")]
    Step { level: usize, source: StepError },
    #[error("a study needs at least {0} levels")]
    TooFewLevels(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub level: usize,
    pub n_interior: usize,
    pub dx: f64,
    pub h: f64,
    pub err_l2: f64,
    pub err_linf: f64,
    pub err_h1: f64,
}

/// Nodal max error; `L²` and `H¹` errors by edge-midpoint quadrature of the
/// piecewise-linear `values` against `exact` and its gradient.
pub fn error_norms(
    values: &[f64],
    mesh: &Mesh,
    geom: &P1Geometry,
    exact: impl Fn(Point2) -> f64,
    gradient: impl Fn(Point2) -> [f64; 2],
) -> (f64, f64, f64) {
    let linf = mesh
        .vertices()
        .iter()
        .zip(values)
        .map(|(&p, v)| (v - exact(p)).abs())
        .fold(0.0, f64::max);
    let (mut l2, mut semi) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = geom.elem_area[t];
        let grads = geom.elem_grad[t];
        let mut gh = [0.0; 2];
        for k in 0..3 {
            gh[0] += values[tri[k]] * grads[k][0];
            gh[1] += values[tri[k]] * grads[k][1];
        }
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let m = mesh.vertices()[a].midpoint(mesh.vertices()[b]);
            let e = 0.5 * (values[a] + values[b]) - exact(m);
            let g = gradient(m);
            l2 += area / 3.0 * e * e;
            semi += area / 3.0 * ((gh[0] - g[0]).powi(2) + (gh[1] - g[1]).powi(2));
        }
    }
    (l2.sqrt(), linf, (l2 + semi).sqrt())
}

/// Least-squares slope of `log err` against `log dx`; `None` for fewer than
/// two levels or non-positive data.
pub fn fit_rate(dx: &[f64], err: &[f64]) -> Option<f64> {
    if dx.len() < 2 || dx.len() != err.len() || dx.iter().chain(err).any(|&v| !(v > 0.0)) {
        return None;
    }
    let x: Vec<f64> = dx.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    /// Ordered by decreasing `dx`.
    pub reports: Vec<ErrorReport>,
    pub rate_l2: Option<f64>,
    pub rate_linf: Option<f64>,
    pub rate_h1: Option<f64>,
}

impl StudyResult {
    pub fn new(reports: Vec<ErrorReport>) -> Self {
        let dx: Vec<f64> = reports.iter().map(|r| r.dx).collect();
        let col = |f: fn(&ErrorReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
        Self {
            rate_l2: fit_rate(&dx, &col(|r| r.err_l2)),
            rate_linf: fit_rate(&dx, &col(|r| r.err_linf)),
            rate_h1: fit_rate(&dx, &col(|r| r.err_h1)),
            reports,
        }
    }
}

/// How the time step of a run is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `h = ratio·Δx` or `ratio·Δx²`.
    Law(DtLaw, f64),
    /// `h = safety · h_max` of a dry run.
    Auto(f64),
}

impl TimeStep {
    pub fn grid(
        &self,
        problem: &HJBProblem,
        mesh: &Mesh,
        geom: &P1Geometry,
        splitting: SplittingPolicy,
    ) -> Result<TimeGrid, SplitError> {
        match *self {
            TimeStep::Law(law, ratio) => Ok(make_time_grid(problem.horizon, geom.dx, ratio, law)),
            TimeStep::Auto(safety) => auto_time_grid(problem, mesh, geom, splitting, safety),
        }
    }
}

/// Everything a single benchmark run produced.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub level: usize,
    pub mesh: Mesh,
    pub geom: P1Geometry,
    pub grid: TimeGrid,
    pub output: SolveOutput,
}

pub fn run_level<O: SolveObserver + ?Sized>(
    level: usize,
    problem: &HJBProblem,
    mesh: Mesh,
    dt: TimeStep,
    cfg: &SolveConfig,
    observer: &mut O,
) -> Result<LevelRun, StudyError> {
    let geom = p1_geometry(&mesh);
    let grid = dt.grid(problem, &mesh, &geom, cfg.splitting)?;
    let output = backward_solve_observed(problem, &mesh, &geom, &grid, cfg, observer)
        .map_err(|source| StudyError::Step { level, source })?;
    Ok(LevelRun {
        level,
        mesh,
        geom,
        grid,
        output,
    })
}

/// Errors at `t = 0` against the exact solution on `(0, grid horizon)`.
pub fn triangle_error_report(run: &LevelRun) -> ErrorReport {
    let horizon = run.grid.horizon;
    let (err_l2, err_linf, err_h1) = error_norms(
        &run.output.initial.values,
        &run.mesh,
        &run.geom,
        |p| exact_solution_with_horizon(p, 0.0, horizon),
        |p| exact_gradient_with_horizon(p, 0.0, horizon),
    );
    ErrorReport {
        level: run.level,
        n_interior: run.mesh.n_interior(),
        dx: run.geom.dx,
        h: run.grid.h,
        err_l2,
        err_linf,
        err_h1,
    }
}

/// Errors at `t = 0` of the triangle benchmark on `triangle_mesh(r)` for
/// every `r` in `refines`.
pub fn triangle_study(
    refines: &[usize],
    n_beta: usize,
    dt: TimeStep,
    cfg: &SolveConfig,
) -> Result<StudyResult, StudyError> {
    if refines.is_empty() {
        return Err(StudyError::TooFewLevels(1));
    }
    let problem = triangle_problem(n_beta)?;
    let mut reports = Vec::with_capacity(refines.len());
    for &r in refines {
        let run = run_level(r, &problem, triangle_mesh(r), dt, cfg, &mut NoObserver)?;
        reports.push(triangle_error_report(&run));
    }
    Ok(StudyResult::new(reports))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EikonalReport {
    pub level: usize,
    pub n_interior: usize,
    pub avg_nu: f64,
    pub max_nu: f64,
    pub linf_solution: f64,
    pub oracle_max_distance: f64,
}

pub fn eikonal_report(run: &LevelRun, oracle_max_distance: f64) -> EikonalReport {
    let nu = run.output.profiles.first().map(|(_, p)| p.nu.clone()).unwrap_or_default();
    let n = nu.len().max(1) as f64;
    EikonalReport {
        level: run.level,
        n_interior: run.mesh.n_interior(),
        avg_nu: nu.iter().sum::<f64>() / n,
        max_nu: nu.iter().cloned().fold(0.0, f64::max),
        linf_solution: run.output.initial.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        oracle_max_distance,
    }
}

/// Eikonal runs on `refine_times(coarse, r)` for every `r` in `refines`. The
/// horizon is fixed by the domain so all levels integrate over the same time.
pub fn eikonal_study(
    coarse: &Mesh,
    refines: &[usize],
    n_beta: usize,
    dt: TimeStep,
    cfg: &SolveConfig,
) -> Result<Vec<EikonalReport>, StudyError> {
    if refines.is_empty() {
        return Err(StudyError::TooFewLevels(1));
    }
    let dmax = PolygonOracle::from_mesh(coarse).max_distance();
    let problem = eikonal_problem_with_horizon(n_beta, 2.0 * dmax)?;
    let mut out = Vec::with_capacity(refines.len());
    for &level in refines {
        let run = run_level(level, &problem, refine_times(coarse, level), dt, cfg, &mut NoObserver)?;
        out.push(eikonal_report(&run, dmax));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub level: usize,
    pub n_systems: usize,
    pub steps: usize,
    pub avg_iters: f64,
    pub std_iters: f64,
}

pub fn newton_report(run: &LevelRun) -> NewtonReport {
    let s = &run.output.stats;
    NewtonReport {
        level: run.level,
        n_systems: s.n_systems,
        steps: s.iters_per_step.len(),
        avg_iters: s.mean,
        std_iters: s.std,
    }
}

/// Newton iteration statistics of the fully nonlinear benchmark on
/// `refine_times(coarse, r)` for every `r` in `refines`.
pub fn newton_study(
    coarse: &Mesh,
    refines: &[usize],
    n_beta: usize,
    dt: TimeStep,
    cfg: &SolveConfig,
) -> Result<Vec<NewtonReport>, StudyError> {
    if refines.is_empty() {
        return Err(StudyError::TooFewLevels(1));
    }
    let problem = fully_nonlinear_problem(n_beta, 0)?;
    let mut out = Vec::with_capacity(refines.len());
    for &level in refines {
        let run = run_level(level, &problem, refine_times(coarse, level), dt, cfg, &mut NoObserver)?;
        out.push(newton_report(&run));
    }
    Ok(out)
}
