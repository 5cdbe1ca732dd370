//! Fully nonlinear benchmark `−v_t + sup_α(−αΔv) + |∇v| = f` with a
//! controlled diffusion coefficient and homogeneous data.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::control::{diffusion_levels, unit_circle_controls, Coefficients, ControlError, HJBProblem};
use crate::mesh::Point2;

pub const HORIZON: f64 = 0.009;
pub const ALPHA0: f64 = 0.045;
pub const ALPHA1: f64 = 0.09;

pub fn g_aux(p: Point2) -> f64 {
    PI * PI * (p.x - 0.63) * (p.y - 0.26) / 0.07
}

pub fn source(p: Point2) -> f64 {
    let g = g_aux(p);
    let s = g.sin() + 0.5 * (2.0 * g).sin() + 0.4 * (8.0 * g).sin();
    529.0 * s * s
}

/// Controls are diffusion levels × directions, diffusion-major, endpoints
/// first. `interior_alpha` extra equispaced levels are appended after the
/// endpoints (zero gives the bang-bang pair only).
pub fn fully_nonlinear_problem(n_beta: usize, interior_alpha: usize) -> Result<HJBProblem, ControlError> {
    let controls = diffusion_levels(ALPHA0, ALPHA1, interior_alpha)?.product(&unit_circle_controls(n_beta)?);
    Ok(HJBProblem {
        controls,
        coeff: Arc::new(|c, p, _t| Coefficients {
            a: c.diffusion.as_ref().map_or(0.0, |d| d.value),
            b: c.direction.as_ref().map_or([0.0, 0.0], |d| d.vector),
            c: 0.0,
            d: source(p),
        }),
        boundary: Arc::new(|_, _| 0.0),
        final_data: Arc::new(|_| 0.0),
        horizon: HORIZON,
        autonomous: true,
    })
}
