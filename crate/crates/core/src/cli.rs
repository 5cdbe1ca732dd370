//! `hjbfem solve|study|mesh`: runs the benchmarks and writes the CSV/VTK
//! artifacts consumed by the plotting scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::control::{DiffusionMode, HJBProblem, SplittingPolicy};
use crate::io;
use crate::mesh::{check_acute, load_mesh, refine_times, write_mesh, Mesh, MeshError};
use crate::numfmt::fmt_f64;
use crate::problems::{
    eikonal_problem_with_horizon, eikonal_report, fully_nonlinear_problem, lattice_domain, newton_report, run_level,
    triangle_error_report, triangle_mesh, triangle_problem_with_horizon, LevelRun, PolygonOracle, StudyError,
    StudyResult, TimeStep, DEFAULT_SIDE_ROWS, TRIANGLE_HORIZON,
};
use crate::solver::LinearConfig;
use crate::timestepper::{DtLaw, NoObserver, SolveConfig, SolveObserver, Snapshot};
use crate::solver::NewtonMonitor;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_MESH: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_NOT_ACUTE: i32 = 4;

/// Safety factor applied to the dry-run CFL bound by `--dt-auto`.
pub const AUTO_SAFETY: f64 = 0.9;

#[derive(Debug, Parser)]
#[command(name = "hjbfem", version, about = "Monotone P1 finite elements for HJB equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one benchmark backward in time and write its artifacts.
    Solve(RunArgs),
    /// Run a benchmark on successive uniform refinements.
    Study(StudyArgs),
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Triangle,
    Eikonal,
    Fullynl,
}

impl ProblemKind {
    fn name(self) -> &'static str {
        match self {
            ProblemKind::Triangle => "triangle",
            ProblemKind::Eikonal => "eikonal",
            ProblemKind::Fullynl => "fullynl",
        }
    }

    /// Refinement of the built-in coarse mesh used when `--refine` is absent.
    fn default_refine(self) -> usize {
        match self {
            ProblemKind::Triangle | ProblemKind::Fullynl => 1,
            ProblemKind::Eikonal => 0,
        }
    }

    /// Time step used when neither `--dt-ratio` nor `--dt-auto` is given.
    fn default_time_step(self) -> TimeStep {
        match self {
            ProblemKind::Triangle => TimeStep::Law(DtLaw::Quadratic, 1.0),
            ProblemKind::Eikonal => TimeStep::Auto(AUTO_SAFETY),
            ProblemKind::Fullynl => TimeStep::Law(DtLaw::Linear, 0.05),
        }
    }

    fn default_law(self) -> DtLaw {
        match self {
            ProblemKind::Triangle => DtLaw::Quadratic,
            ProblemKind::Eikonal | ProblemKind::Fullynl => DtLaw::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiffusionArg {
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Emit {
    Csv,
    Vtk,
    Trajectory,
    Diffusion,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Plain-text `key=value` file with the same keys as the flags; flags win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub problem: ProblemKind,
    /// `.mesh2` file replacing the built-in domain.
    #[arg(long, value_name = "PATH")]
    pub mesh: Option<PathBuf>,
    /// Uniform refinements of the mesh (default: 1 for triangle and fullynl, 0 for eikonal).
    #[arg(long)]
    pub refine: Option<usize>,
    /// Number of unit directions in the control set.
    #[arg(long, default_value_t = 32)]
    pub n_beta: usize,
    /// Extra interior diffusion levels for the fully nonlinear problem.
    #[arg(long, default_value_t = 0)]
    pub interior_alpha: usize,
    #[arg(long, value_enum)]
    pub dt_law: Option<LawArg>,
    #[arg(long)]
    pub dt_ratio: Option<f64>,
    /// h = 0.9 · (smallest CFL bound of a dry run); overrides --dt-ratio.
    #[arg(long)]
    pub dt_auto: bool,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv")]
    pub emit: Vec<Emit>,
    #[arg(long, value_enum, default_value = "local")]
    pub diffusion: DiffusionArg,
    /// Right Jacobi preconditioning in GMRES.
    #[arg(long)]
    pub jacobi: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of refinement levels, starting at --refine.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
}

#[derive(Debug, Subcommand)]
pub enum MeshAction {
    /// Print mesh statistics.
    Info { path: PathBuf },
    /// Write one red refinement to `<name>.r1.mesh2` next to the input.
    Refine { path: PathBuf },
    /// Exit 0 if every angle is strictly acute, 4 otherwise.
    CheckAcute { path: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("mesh is not strictly acute (max angle {0} rad)")]
    NotAcute(f64),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Mesh(_) => EXIT_MESH,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::NotAcute(_) => EXIT_NOT_ACUTE,
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Control(c) => CliError::Config(c.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

/// Turns `key=value` lines into `--key value` arguments. Blank lines and
/// `#` comments are skipped; `true`/`false` values toggle boolean flags.
pub fn config_to_args(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: invalid key '{key}'", n + 1));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_owned());
            }
        }
    }
    Ok(out)
}

/// Inserts the contents of `--config FILE` right after the subcommand so
/// that explicit flags, which come later, override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            path = args.get(i + 1).cloned();
            break;
        }
        if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_owned());
            break;
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let extra = config_to_args(&text)?;
    let pos = args
        .iter()
        .position(|a| a == "solve" || a == "study")
        .ok_or("--config is only accepted by solve and study")?;
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

/// Parses and runs; returns the process exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::command_with_overrides().try_get_matches_from(args) {
        Ok(m) => match <Cli as clap::FromArgMatches>::from_arg_matches(&m) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_CONFIG;
            }
        },
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

impl Cli {
    fn command_with_overrides() -> clap::Command {
        <Cli as clap::CommandFactory>::command()
            .args_override_self(true)
            .mut_subcommand("solve", |c| c.args_override_self(true))
            .mut_subcommand("study", |c| c.args_override_self(true))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => {
            setup_threads(a.threads)?;
            cmd_solve(&a)
        }
        Command::Study(a) => {
            setup_threads(a.run.threads)?;
            cmd_study(&a)
        }
        Command::Mesh { action } => cmd_mesh(&action),
    }
}

fn setup_threads(n: usize) -> Result<(), CliError> {
    if n > 0 {
        // a second initialization (e.g. in-process tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn read_mesh(path: &Path) -> Result<Mesh, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Mesh(format!("{}: {e}", path.display())))?;
    load_mesh(&text).map_err(|e: MeshError| CliError::Mesh(format!("{}: {e}", path.display())))
}

/// Settings resolved from flags and per-problem defaults.
struct Resolved {
    problem: HJBProblem,
    mesh: Mesh,
    refine: usize,
    dt: TimeStep,
    cfg: SolveConfig,
    /// Domain distance maximum (eikonal only).
    oracle_max: Option<f64>,
}

fn validate(a: &RunArgs) -> Result<(), CliError> {
    if let Some(r) = a.dt_ratio {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::Config(format!("--dt-ratio must be positive, got {r}")));
        }
    }
    if let Some(t) = a.t_final {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("--t-final must be positive, got {t}")));
        }
    }
    if a.n_beta < 3 {
        return Err(CliError::Config(format!("--n-beta must be at least 3, got {}", a.n_beta)));
    }
    if a.interior_alpha > 0 && a.problem != ProblemKind::Fullynl {
        return Err(CliError::Config("--interior-alpha applies to the fullynl problem only".into()));
    }
    Ok(())
}

fn coarse_mesh(a: &RunArgs) -> Result<Mesh, CliError> {
    let mesh = match (&a.mesh, a.problem) {
        (Some(p), _) => read_mesh(p)?,
        (None, ProblemKind::Triangle) => triangle_mesh(0),
        (None, _) => lattice_domain(DEFAULT_SIDE_ROWS),
    };
    let stats = check_acute(&mesh);
    if !stats.is_strictly_acute {
        return Err(CliError::Mesh(format!(
            "the scheme needs a strictly acute mesh (max angle {} rad)",
            stats.max_angle
        )));
    }
    Ok(mesh)
}

fn resolve(a: &RunArgs, refine: usize) -> Result<Resolved, CliError> {
    validate(a)?;
    let coarse = coarse_mesh(a)?;
    let mesh = refine_times(&coarse, refine);
    let (problem, oracle_max) = match a.problem {
        ProblemKind::Triangle => (
            triangle_problem_with_horizon(a.n_beta, a.t_final.unwrap_or(TRIANGLE_HORIZON)),
            None,
        ),
        ProblemKind::Eikonal => {
            let dmax = PolygonOracle::from_mesh(&coarse).max_distance();
            (eikonal_problem_with_horizon(a.n_beta, a.t_final.unwrap_or(2.0 * dmax)), Some(dmax))
        }
        ProblemKind::Fullynl => {
            let mut p = fully_nonlinear_problem(a.n_beta, a.interior_alpha);
            if let (Ok(p), Some(t)) = (p.as_mut(), a.t_final) {
                p.horizon = t;
            }
            (p, None)
        }
    };
    let problem = problem.map_err(|e| CliError::Config(e.to_string()))?;
    let law = match a.dt_law {
        Some(LawArg::Linear) => DtLaw::Linear,
        Some(LawArg::Quadratic) => DtLaw::Quadratic,
        None => a.problem.default_law(),
    };
    let dt = if a.dt_auto {
        TimeStep::Auto(AUTO_SAFETY)
    } else if let Some(r) = a.dt_ratio {
        TimeStep::Law(law, r)
    } else if a.dt_law.is_some() {
        return Err(CliError::Config("--dt-law needs --dt-ratio".into()));
    } else {
        a.problem.default_time_step()
    };
    let cfg = SolveConfig {
        linear: LinearConfig {
            jacobi: a.jacobi,
            ..Default::default()
        },
        splitting: SplittingPolicy {
            diffusion: match a.diffusion {
                DiffusionArg::Local => DiffusionMode::Local,
                DiffusionArg::Global => DiffusionMode::Global,
            },
            ..Default::default()
        },
        ..Default::default()
    };
    Ok(Resolved {
        problem,
        mesh,
        refine,
        dt,
        cfg,
        oracle_max,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn dt_description(dt: TimeStep) -> (String, String, bool) {
    match dt {
        TimeStep::Law(law, r) => (law.to_string(), fmt_f64(r), false),
        TimeStep::Auto(s) => ("auto".into(), fmt_f64(s), true),
    }
}

fn manifest(a: &RunArgs, r: &Resolved, run: &LevelRun, extra: &[(&str, String)]) -> String {
    let (law, ratio, auto) = dt_description(r.dt);
    let mut emit: Vec<&str> = a
        .emit
        .iter()
        .map(|e| match e {
            Emit::Csv => "csv",
            Emit::Vtk => "vtk",
            Emit::Trajectory => "trajectory",
            Emit::Diffusion => "diffusion",
        })
        .collect();
    emit.sort_unstable();
    emit.dedup();
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("version", env!("CARGO_PKG_VERSION").into());
    kv("problem", a.problem.name().into());
    kv(
        "mesh",
        a.mesh.as_ref().map_or_else(|| "builtin".into(), |p| p.display().to_string()),
    );
    kv("refine", r.refine.to_string());
    kv("n_beta", a.n_beta.to_string());
    kv("interior_alpha", a.interior_alpha.to_string());
    kv("n_controls", r.problem.controls.len().to_string());
    kv("diffusion", format!("{:?}", r.cfg.splitting.diffusion).to_lowercase());
    kv("dt_law", law);
    kv(if auto { "dt_auto_safety" } else { "dt_ratio" }, ratio);
    kv("t_final", fmt_f64(r.problem.horizon));
    kv("h", fmt_f64(run.grid.h));
    kv("n_steps", run.grid.n_steps.to_string());
    kv("min_cfl_h_max", fmt_f64(run.output.min_h_max));
    kv("n_vertices", run.mesh.n_vertices().to_string());
    kv("n_interior", run.mesh.n_interior().to_string());
    kv("dx", fmt_f64(run.geom.dx));
    kv("jacobi", a.jacobi.to_string());
    kv("emit", emit.join(","));
    for (k, v) in extra {
        kv(k, v.clone());
    }
    s
}

/// Writes one VTK file per recorded time level (at most ~100, evenly strided).
struct TrajectoryWriter<'a> {
    dir: PathBuf,
    mesh: &'a Mesh,
    stride: usize,
    error: Option<CliError>,
}

impl NewtonMonitor for TrajectoryWriter<'_> {}

impl SolveObserver for TrajectoryWriter<'_> {
    fn on_snapshot(&mut self, step: usize, s: &Snapshot) {
        if self.error.is_some() || !step.is_multiple_of(self.stride) {
            return;
        }
        let text = io::vtk_unstructured(self.mesh, &s.values, &format!("v at t={}", fmt_f64(s.t)));
        let path = self.dir.join(format!("step_{step:06}.vtk"));
        if let Err(e) = fs::write(&path, text) {
            self.error = Some(io_err(&path, e));
        }
    }
}

pub fn cmd_solve(a: &RunArgs) -> Result<(), CliError> {
    let refine = a.refine.unwrap_or(a.problem.default_refine());
    let r = resolve(a, refine)?;
    make_dir(&a.out_dir)?;
    let run = if a.emit.contains(&Emit::Trajectory) {
        let dir = a.out_dir.join("trajectory");
        make_dir(&dir)?;
        let geom = crate::mesh::p1_geometry(&r.mesh);
        let grid = r
            .dt
            .grid(&r.problem, &r.mesh, &geom, r.cfg.splitting)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        let mut w = TrajectoryWriter {
            dir,
            mesh: &r.mesh,
            stride: grid.n_steps.div_ceil(100).max(1),
            error: None,
        };
        let run = run_level(refine, &r.problem, r.mesh.clone(), r.dt, &r.cfg, &mut w)?;
        if let Some(e) = w.error {
            return Err(e);
        }
        run
    } else {
        run_level(refine, &r.problem, r.mesh.clone(), r.dt, &r.cfg, &mut NoObserver)?
    };

    let values = &run.output.initial.values;
    let linf = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut extra = vec![("linf_solution", fmt_f64(linf))];
    if a.problem == ProblemKind::Triangle {
        let e = triangle_error_report(&run);
        extra.push(("err_l2", fmt_f64(e.err_l2)));
        extra.push(("err_linf", fmt_f64(e.err_linf)));
        extra.push(("err_h1", fmt_f64(e.err_h1)));
    }
    if let Some(d) = r.oracle_max {
        extra.push(("oracle_max_distance", fmt_f64(d)));
    }
    let stats = &run.output.stats;
    extra.push(("newton_avg_iters", fmt_f64(stats.mean)));

    if a.emit.contains(&Emit::Csv) {
        write(&a.out_dir, "solution.csv", &io::solution_csv(&run.mesh, values))?;
        write(&a.out_dir, "newton.csv", &io::newton_steps_csv(stats, &run.grid))?;
        if a.problem == ProblemKind::Fullynl {
            write(
                &a.out_dir,
                "policy.csv",
                &io::policy_csv(&run.mesh, &r.problem.controls, &run.output.final_policy),
            )?;
        }
    }
    if a.emit.contains(&Emit::Diffusion) {
        // operators of the last assembled step (t = 0 for time-dependent data)
        if let Some((_, profile)) = run.output.profiles.last() {
            write(&a.out_dir, "diffusion.csv", &profile.to_csv(&run.mesh))?;
        }
    }
    if a.emit.contains(&Emit::Vtk) {
        write(
            &a.out_dir,
            "solution.vtk",
            &io::vtk_unstructured(&run.mesh, values, &format!("{} v at t=0", a.problem.name())),
        )?;
    }
    write(&a.out_dir, "run.txt", &manifest(a, &r, &run, &extra))?;

    println!(
        "problem={} n_interior={} steps={} h={} linf={} avg_newton={}",
        a.problem.name(),
        run.mesh.n_interior(),
        run.grid.n_steps,
        fmt_f64(run.grid.h),
        fmt_f64(linf),
        fmt_f64(stats.mean)
    );
    for (k, v) in extra.iter().filter(|(k, _)| k.starts_with("err_")) {
        println!("{k}={v}");
    }
    Ok(())
}

pub fn cmd_study(s: &StudyArgs) -> Result<(), CliError> {
    let a = &s.run;
    if s.levels < 2 {
        return Err(CliError::Config(format!("--levels must be at least 2, got {}", s.levels)));
    }
    let start = a.refine.unwrap_or(a.problem.default_refine());
    make_dir(&a.out_dir)?;
    let mut runs_manifest = String::new();
    let mut error_rows = Vec::new();
    let mut eikonal_rows = Vec::new();
    let mut newton_rows = Vec::new();
    for refine in start..start + s.levels {
        let r = resolve(a, refine)?;
        let run = run_level(refine, &r.problem, r.mesh.clone(), r.dt, &r.cfg, &mut NoObserver)?;
        let _ = writeln!(
            runs_manifest,
            "level={} n_interior={} h={} n_steps={}",
            refine,
            run.mesh.n_interior(),
            fmt_f64(run.grid.h),
            run.grid.n_steps
        );
        match a.problem {
            ProblemKind::Triangle => error_rows.push(triangle_error_report(&run)),
            ProblemKind::Eikonal => {
                eikonal_rows.push(eikonal_report(&run, r.oracle_max.expect("eikonal oracle is resolved")))
            }
            ProblemKind::Fullynl => {}
        }
        newton_rows.push(newton_report(&run));
        println!(
            "level {refine}: n_interior={} steps={} linf={}",
            run.mesh.n_interior(),
            run.grid.n_steps,
            fmt_f64(run.output.initial.values.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        );
    }
    write(&a.out_dir, "newton.csv", &io::newton_csv(&newton_rows))?;
    match a.problem {
        ProblemKind::Triangle => {
            write(&a.out_dir, "errors.csv", &io::errors_csv(&error_rows))?;
            let res = StudyResult::new(error_rows);
            let f = |r: Option<f64>| r.map_or_else(|| "n/a".into(), fmt_f64);
            println!(
                "rates: l2={} linf={} h1={}",
                f(res.rate_l2),
                f(res.rate_linf),
                f(res.rate_h1)
            );
        }
        ProblemKind::Eikonal => write(&a.out_dir, "eikonal.csv", &io::eikonal_csv(&eikonal_rows))?,
        ProblemKind::Fullynl => {}
    }
    let (law, ratio, auto) = dt_description(a_time_step(a));
    let mut m = String::new();
    let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "command=study\nproblem={}\nlevels={}\nstart_refine={start}", a.problem.name(), s.levels);
    let _ = writeln!(m, "n_beta={}\ndt_law={law}\n{}={ratio}", a.n_beta, if auto { "dt_auto_safety" } else { "dt_ratio" });
    m.push_str(&runs_manifest);
    write(&a.out_dir, "run.txt", &m)
}

fn a_time_step(a: &RunArgs) -> TimeStep {
    if a.dt_auto {
        TimeStep::Auto(AUTO_SAFETY)
    } else if let Some(r) = a.dt_ratio {
        let law = match a.dt_law {
            Some(LawArg::Linear) => DtLaw::Linear,
            Some(LawArg::Quadratic) => DtLaw::Quadratic,
            None => a.problem.default_law(),
        };
        TimeStep::Law(law, r)
    } else {
        a.problem.default_time_step()
    }
}

pub fn cmd_mesh(action: &MeshAction) -> Result<(), CliError> {
    match action {
        MeshAction::Info { path } => {
            let mesh = read_mesh(path)?;
            let st = check_acute(&mesh);
            let (lo, hi) = mesh.bounding_box();
            println!("vertices={}", st.n_vertices);
            println!("interior={}", st.n_interior);
            println!("triangles={}", st.n_triangles);
            println!("min_angle_deg={}", fmt_f64(st.min_angle.to_degrees()));
            println!("max_angle_deg={}", fmt_f64(st.max_angle.to_degrees()));
            println!("strictly_acute={}", st.is_strictly_acute);
            println!("dx={}", fmt_f64(crate::mesh::p1_geometry(&mesh).dx));
            println!("area={}", fmt_f64(mesh.total_area()));
            println!("bbox={},{},{},{}", fmt_f64(lo.x), fmt_f64(lo.y), fmt_f64(hi.x), fmt_f64(hi.y));
            Ok(())
        }
        MeshAction::Refine { path } => {
            let mesh = read_mesh(path)?;
            let refined = refine_times(&mesh, 1);
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("mesh.mesh2");
            let stem = name.strip_suffix(".mesh2").unwrap_or(name);
            let out = path.with_file_name(format!("{stem}.r1.mesh2"));
            fs::write(&out, write_mesh(&refined)).map_err(|e| io_err(&out, e))?;
            println!("{}", out.display());
            Ok(())
        }
        MeshAction::CheckAcute { path } => {
            let mesh = read_mesh(path)?;
            let st = check_acute(&mesh);
            if st.is_strictly_acute {
                println!("strictly acute (max angle {} deg)", fmt_f64(st.max_angle.to_degrees()));
                Ok(())
            } else {
                Err(CliError::NotAcute(st.max_angle))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_become_flags() {
        let args = config_to_args("# comment\nproblem = eikonal\n\ndt_auto=true\njacobi=false\nn-beta=16\n").unwrap();
        assert_eq!(args, ["--problem", "eikonal", "--dt-auto", "--n-beta", "16"]);
        assert!(config_to_args("novalue").is_err());
        assert!(config_to_args("config=x").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "problem=eikonal\nn_beta=16\n").unwrap();
        let argv: Vec<String> = ["hjbfem", "solve", "--config", cfg.to_str().unwrap(), "--n-beta", "8"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let expanded = expand_config(argv).unwrap();
        let m = Cli::command_with_overrides().try_get_matches_from(expanded).unwrap();
        let cli = <Cli as clap::FromArgMatches>::from_arg_matches(&m).unwrap();
        match cli.command {
            Command::Solve(a) => {
                assert_eq!(a.n_beta, 8);
                assert_eq!(a.problem, ProblemKind::Eikonal);
            }
            _ => panic!("expected solve"),
        }
    }
}
