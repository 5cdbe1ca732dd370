//! Small meshes shared by unit tests.

use std::f64::consts::PI;

use crate::mesh::{Mesh, Point2};

/// Regular hexagon of six equilateral triangles around the origin.
pub fn hexagon(side: f64) -> Mesh {
    let mut v = vec![Point2::new(0.0, 0.0)];
    for k in 0..6 {
        let th = PI / 3.0 * k as f64;
        v.push(Point2::new(side * th.cos(), side * th.sin()));
    }
    let tris = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    Mesh::new(v, tris).unwrap()
}

/// [0,2]² on a 3×3 grid, every square cut by the diagonal through (1,1).
pub fn right_criss_cross() -> Mesh {
    let mut v = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            v.push(Point2::new(i as f64, j as f64));
        }
    }
    let id = |i: usize, j: usize| j * 3 + i;
    let mut t = Vec::new();
    for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        // diagonal touching the centre node
        if (i + j) % 2 == 0 {
            t.push([a, b, c]);
            t.push([a, c, d]);
        } else {
            t.push([a, b, d]);
            t.push([b, c, d]);
        }
    }
    Mesh::new(v, t).unwrap()
}

/// An irregular (still acute) hexagonal patch with one interior node.
pub fn skewed_patch() -> Mesh {
    let mut v = vec![Point2::new(0.08, -0.05)];
    let radii = [1.0, 0.9, 1.1, 0.95, 1.05, 0.92];
    for k in 0..6 {
        let th = PI / 3.0 * k as f64 + 0.05 * k as f64;
        v.push(Point2::new(radii[k] * th.cos(), radii[k] * th.sin()));
    }
    let tris = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    Mesh::new(v, tris).unwrap()
}
