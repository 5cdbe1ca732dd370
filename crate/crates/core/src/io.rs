//! CSV and legacy-VTK writers. Numbers use the shortest round-trip decimal
//! form, so identical runs give byte-identical files.

use std::fmt::Write as _;

use crate::control::ControlSet;
use crate::mesh::Mesh;
use crate::numfmt::fmt_f64;
use crate::problems::{EikonalReport, ErrorReport, NewtonReport};
use crate::solver::NewtonStats;
use crate::timestepper::TimeGrid;

/// `node,x,y,value` for every vertex.
pub fn solution_csv(mesh: &Mesh, values: &[f64]) -> String {
    let mut out = String::from("node,x,y,value\n");
    for (i, (p, v)) in mesh.vertices().iter().zip(values).enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i, fmt_f64(p.x), fmt_f64(p.y), fmt_f64(*v));
    }
    out
}

/// `node,x,y,alpha_index` for every interior vertex: the diffusion level
/// index of the selected control (the control index if it has none).
pub fn policy_csv(mesh: &Mesh, controls: &ControlSet, policy: &[usize]) -> String {
    let mut out = String::from("node,x,y,alpha_index\n");
    for (&v, &c) in mesh.interior_nodes().iter().zip(policy) {
        let p = mesh.vertices()[v];
        let idx = controls.get(c).diffusion.as_ref().map_or(c, |d| d.index);
        let _ = writeln!(out, "{},{},{},{}", v, fmt_f64(p.x), fmt_f64(p.y), idx);
    }
    out
}

/// Per-level Newton summary (`newton.csv` of a study).
pub fn newton_csv(rows: &[NewtonReport]) -> String {
    let mut out = String::from("level,n_systems,steps,avg_iters,std_iters\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.level,
            r.n_systems,
            r.steps,
            fmt_f64(r.avg_iters),
            fmt_f64(r.std_iters)
        );
    }
    out
}

/// `step,t,iterations`, one row per time step in the order computed
/// (from `t = T − h` down to `t = 0`); `newton.csv` of a single solve.
pub fn newton_steps_csv(stats: &NewtonStats, grid: &TimeGrid) -> String {
    let mut out = String::from("step,t,iterations\n");
    for (i, it) in stats.iters_per_step.iter().enumerate() {
        let k = grid.n_steps - 1 - i;
        let _ = writeln!(out, "{},{},{}", k, fmt_f64(grid.time(k)), it);
    }
    out
}

pub fn errors_csv(rows: &[ErrorReport]) -> String {
    let mut out = String::from("level,n_interior,dx,h,err_l2,err_linf,err_h1\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.level,
            r.n_interior,
            fmt_f64(r.dx),
            fmt_f64(r.h),
            fmt_f64(r.err_l2),
            fmt_f64(r.err_linf),
            fmt_f64(r.err_h1)
        );
    }
    out
}

pub fn eikonal_csv(rows: &[EikonalReport]) -> String {
    let mut out = String::from("level,n_interior,avg_nu,max_nu,linf_solution,oracle_max_distance\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.level,
            r.n_interior,
            fmt_f64(r.avg_nu),
            fmt_f64(r.max_nu),
            fmt_f64(r.linf_solution),
            fmt_f64(r.oracle_max_distance)
        );
    }
    out
}

/// Legacy ASCII VTK 3.0 unstructured grid with point scalar `v`.
pub fn vtk_unstructured(mesh: &Mesh, values: &[f64], title: &str) -> String {
    let mut out = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} 0", fmt_f64(p.x), fmt_f64(p.y));
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {} {}", nt, 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {}\nSCALARS v double 1\nLOOKUP_TABLE default", mesh.n_vertices());
    for v in values {
        let _ = writeln!(out, "{}", fmt_f64(*v));
    }
    out
}
