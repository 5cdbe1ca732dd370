//! Benchmark with a known exact solution on an equilateral triangle; the
//! operator degenerates at the origin.

use std::sync::Arc;

use crate::control::{unit_circle_controls, Coefficients, ControlError, HJBProblem};
use crate::mesh::{refine_times, Mesh, Point2};

pub const HORIZON: f64 = 1.0;

pub fn triangle_vertices() -> [Point2; 3] {
    let h = 3f64.sqrt() / 2.0;
    [Point2::new(0.0, -1.0), Point2::new(h, 0.5), Point2::new(-h, 0.5)]
}

/// Uniform subdivision of the triangle `abc` into `n²` congruent triangles.
pub fn subdivided_triangle([a, b, c]: [Point2; 3], n: usize) -> Mesh {
    assert!(n >= 1);
    let mut id = vec![vec![usize::MAX; n + 1]; n + 1];
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n - j {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            id[i][j] = vertices.len();
            vertices.push(Point2::new(
                a.x + s * (b.x - a.x) + t * (c.x - a.x),
                a.y + s * (b.y - a.y) + t * (c.y - a.y),
            ));
        }
    }
    let mut triangles = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n - j {
            triangles.push([id[i][j], id[i + 1][j], id[i][j + 1]]);
            if i + j + 2 <= n {
                triangles.push([id[i + 1][j], id[i + 1][j + 1], id[i][j + 1]]);
            }
        }
    }
    Mesh::new(vertices, triangles).expect("subdivided triangle is a valid mesh")
}

/// Coarsest mesh: each side cut in three, so the centroid (the origin,
/// where the operator degenerates) is a mesh node at every refinement.
pub fn triangle_base_mesh() -> Mesh {
    subdivided_triangle(triangle_vertices(), 3)
}

pub fn triangle_mesh(refine: usize) -> Mesh {
    refine_times(&triangle_base_mesh(), refine)
}

/// `τ = T − t + 1`.
fn tau(t: f64, horizon: f64) -> f64 {
    horizon - t + 1.0
}

/// `v = e^{−r} + r` with `r = |x| / √τ`, for the default horizon.
pub fn exact_solution(p: Point2, t: f64) -> f64 {
    exact_solution_with_horizon(p, t, HORIZON)
}

pub fn exact_solution_with_horizon(p: Point2, t: f64, horizon: f64) -> f64 {
    let r = p.norm() / tau(t, horizon).sqrt();
    (-r).exp() + r
}

/// Gradient of [`exact_solution`]; set to zero at the origin (cone tip).
pub fn exact_gradient(p: Point2, t: f64) -> [f64; 2] {
    exact_gradient_with_horizon(p, t, HORIZON)
}

pub fn exact_gradient_with_horizon(p: Point2, t: f64, horizon: f64) -> [f64; 2] {
    let rho = p.norm();
    if rho == 0.0 {
        return [0.0, 0.0];
    }
    let st = tau(t, horizon).sqrt();
    let r = rho / st;
    let s = (1.0 - (-r).exp()) / (rho * st);
    [s * p.x, s * p.y]
}

pub fn triangle_coefficients(beta: [f64; 2], p: Point2, t: f64, horizon: f64) -> Coefficients {
    let tau = tau(t, horizon);
    let rho = p.norm();
    Coefficients {
        a: 0.5 * rho / tau.sqrt(),
        b: [beta[0] / (2.0 * tau.sqrt()), beta[1] / (2.0 * tau.sqrt())],
        c: 0.0,
        d: -0.5 * rho / tau.powf(1.5),
    }
}

/// Controls are `n_beta` unit directions; data interpolate the exact solution.
pub fn triangle_problem(n_beta: usize) -> Result<HJBProblem, ControlError> {
    triangle_problem_with_horizon(n_beta, HORIZON)
}

/// As [`triangle_problem`] on `(0, horizon)`; the exact solution shifts with
/// the horizon through `τ = T − t + 1`.
pub fn triangle_problem_with_horizon(n_beta: usize, horizon: f64) -> Result<HJBProblem, ControlError> {
    Ok(HJBProblem {
        controls: unit_circle_controls(n_beta)?,
        coeff: Arc::new(move |c, p, t| {
            let beta = c.direction.as_ref().map_or([0.0, 0.0], |d| d.vector);
            triangle_coefficients(beta, p, t, horizon)
        }),
        boundary: Arc::new(move |p, t| exact_solution_with_horizon(p, t, horizon)),
        final_data: Arc::new(move |p| exact_solution_with_horizon(p, horizon, horizon)),
        horizon,
        autonomous: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::check_acute;

    #[test]
    fn exact_values() {
        assert_eq!(exact_solution(Point2::new(0.0, 0.0), 0.3), 1.0);
        let v = exact_solution(Point2::new(0.0, -1.0), 1.0);
        assert!((v - ((-1f64).exp() + 1.0)).abs() < 1e-15);
        assert!((v - 1.367879).abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = Point2::new(0.2, -0.1);
        let e = 1e-6;
        let g = exact_gradient(p, 0.4);
        let gx = (exact_solution(Point2::new(p.x + e, p.y), 0.4) - exact_solution(Point2::new(p.x - e, p.y), 0.4)) / (2.0 * e);
        let gy = (exact_solution(Point2::new(p.x, p.y + e), 0.4) - exact_solution(Point2::new(p.x, p.y - e), 0.4)) / (2.0 * e);
        assert!((g[0] - gx).abs() < 1e-8 && (g[1] - gy).abs() < 1e-8);
    }

    #[test]
    fn meshes_are_acute_with_origin_node() {
        for r in 0..3 {
            let m = triangle_mesh(r);
            assert!(check_acute(&m).is_strictly_acute);
            assert!(m.vertices().iter().any(|p| p.norm() == 0.0));
            let area = 3.0 * 3f64.sqrt() / 4.0;
            assert!((m.total_area() - area).abs() < 1e-12);
        }
        assert_eq!(triangle_base_mesh().n_triangles(), 9);
        assert_eq!(triangle_base_mesh().n_interior(), 1);
        // one red refinement of the ternary mesh is the 6-fold subdivision
        let refined = triangle_mesh(1);
        let direct = subdivided_triangle(triangle_vertices(), 6);
        assert_eq!(refined.n_triangles(), direct.n_triangles());
        assert_eq!(refined.n_vertices(), direct.n_vertices());
        for p in direct.vertices() {
            assert!(refined.vertices().iter().any(|q| q.dist(*p) < 1e-14));
        }
    }
}
