//! Triangulations: validation, strict-acuteness check, red refinement and
//! the P1 geometry (hat-function gradients and L¹ masses) used by assembly.
//!
//! Boundary detection is topological: an edge is on the boundary when exactly
//! one triangle uses it.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use thiserror::Error;

use crate::numfmt::fmt_f64;

/// Strictness tolerance for the acute-angle test (radians).
pub const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn midpoint(&self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("triangle {triangle} references vertex {vertex}, but only {n_vertices} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        n_vertices: usize,
    },
    #[error("triangle {0} has zero area")]
    ZeroArea(usize),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("vertex {0} is not used by any triangle")]
    DanglingVertex(usize),
    #[error("boundary is not a set of simple closed loops at vertex {0}")]
    NonManifoldBoundary(usize),
}

/// A conforming triangulation with counter-clockwise triangles.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    is_boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

impl Mesh {
    /// Validates the triangulation and normalizes every triangle to CCW order.
    pub fn new(vertices: Vec<Point2>, mut triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        vertex: v,
                        n_vertices: nv,
                    });
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::ZeroArea(t));
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            let twice_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            let scale = a.dist(b).max(b.dist(c)).max(c.dist(a));
            if twice_area.abs() <= 1e-14 * scale * scale {
                return Err(MeshError::ZeroArea(t));
            }
            if twice_area < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(MeshError::DanglingVertex(i));
        }

        // Each directed edge may appear once; an interior edge appears once in
        // each direction.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if let Some(other) = directed.insert(e, t) {
                    return Err(MeshError::NonConforming(format!(
                        "edge ({}, {}) is used by triangles {} and {} with the same orientation",
                        e.0, e.1, other, t
                    )));
                }
            }
        }
        let mut is_boundary = vec![false; nv];
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                is_boundary[a] = true;
                is_boundary[b] = true;
            }
        }
        let mut interior_index = vec![None; nv];
        let mut interior_nodes = Vec::new();
        for v in 0..nv {
            if !is_boundary[v] {
                interior_index[v] = Some(interior_nodes.len());
                interior_nodes.push(v);
            }
        }
        Ok(Self {
            vertices,
            triangles,
            is_boundary,
            interior_index,
            interior_nodes,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| self.is_boundary[v])
    }

    /// Contiguous index of an interior vertex, `None` for boundary vertices.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    /// Vertex id of each interior unknown, in unknown order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Boundary edges oriented so that the domain lies to their left.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut directed = HashMap::with_capacity(3 * self.triangles.len());
        for tri in &self.triangles {
            for k in 0..3 {
                directed.insert((tri[k], tri[(k + 1) % 3]), ());
            }
        }
        let mut edges: Vec<[usize; 2]> = directed
            .keys()
            .filter(|(a, b)| !directed.contains_key(&(*b, *a)))
            .map(|&(a, b)| [a, b])
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Boundary edges chained into closed loops of vertex ids.
    pub fn boundary_loops(&self) -> Result<Vec<Vec<usize>>, MeshError> {
        let edges = self.boundary_edges();
        let mut next: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
        for &[a, b] in &edges {
            if next.insert(a, b).is_some() {
                return Err(MeshError::NonManifoldBoundary(a));
            }
        }
        let mut visited: HashMap<usize, bool> = next.keys().map(|&k| (k, false)).collect();
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut loops = Vec::new();
        for s in starts {
            if visited[&s] {
                continue;
            }
            let mut lp = vec![s];
            visited.insert(s, true);
            let mut cur = next[&s];
            while cur != s {
                match visited.get(&cur) {
                    Some(false) => {}
                    _ => return Err(MeshError::NonManifoldBoundary(cur)),
                }
                visited.insert(cur, true);
                lp.push(cur);
                cur = next[&cur];
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| signed_area(self.triangle_points(t))).sum()
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Barycentric point location by linear scan; `None` outside the mesh.
    pub fn locate(&self, p: Point2) -> Option<(usize, [f64; 3])> {
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_points(t);
            let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            let l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
            let l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
            let l0 = 1.0 - l1 - l2;
            let tol = -1e-12;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }
}

fn signed_area([a, b, c]: [Point2; 3]) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

/// Parses the `.mesh2` text format.
pub fn load_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut tokens = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = Vec::new();
        let mut col = 0usize;
        for piece in line.split(|c: char| c.is_whitespace()) {
            if !piece.is_empty() {
                fields.push((col + 1, piece));
            }
            col += piece.chars().count() + 1;
        }
        tokens.push((ln + 1, fields));
    }
    let mut lines = tokens.into_iter();
    let parse_err = |line: usize, column: usize, message: String| MeshError::Parse { line, column, message };

    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "missing `mesh2` header".into()))?;
    if header.len() != 3 || header[0].1 != "mesh2" {
        return Err(parse_err(hl, 1, "expected `mesh2 <n_vertices> <n_triangles>`".into()));
    }
    let count = |(c, s): (usize, &str)| {
        s.parse::<usize>()
            .map_err(|_| parse_err(hl, c, format!("invalid count `{s}`")))
    };
    let nv = count(header[1])?;
    let nt = count(header[2])?;

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let (ln, f) = lines
            .next()
            .ok_or_else(|| parse_err(hl, 1, format!("expected {nv} vertices, found {i}")))?;
        if f.len() != 2 {
            return Err(parse_err(ln, 1, "expected `<x> <y>`".into()));
        }
        let coord = |(c, s): (usize, &str)| {
            s.parse::<f64>()
                .map_err(|_| parse_err(ln, c, format!("invalid coordinate `{s}`")))
        };
        vertices.push(Point2::new(coord(f[0])?, coord(f[1])?));
    }
    let mut triangles = Vec::with_capacity(nt);
    for i in 0..nt {
        let (ln, f) = lines
            .next()
            .ok_or_else(|| parse_err(hl, 1, format!("expected {nt} triangles, found {i}")))?;
        if f.len() != 3 {
            return Err(parse_err(ln, 1, "expected `<i> <j> <k>`".into()));
        }
        let mut tri = [0usize; 3];
        for (slot, &(c, s)) in tri.iter_mut().zip(f.iter()) {
            *slot = s
                .parse::<usize>()
                .map_err(|_| parse_err(ln, c, format!("invalid vertex index `{s}`")))?;
        }
        triangles.push(tri);
    }
    if let Some((ln, f)) = lines.next() {
        return Err(parse_err(ln, f[0].0, "unexpected trailing content".into()));
    }
    Mesh::new(vertices, triangles)
}

/// Writes the `.mesh2` format with shortest round-trip coordinates.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mesh2 {} {}", mesh.n_vertices(), mesh.n_triangles());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {}", fmt_f64(p.x), fmt_f64(p.y));
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub min_angle: f64,
    pub max_angle: f64,
    pub is_strictly_acute: bool,
    pub n_vertices: usize,
    pub n_interior: usize,
    pub n_triangles: usize,
}

pub fn corner_angles([a, b, c]: [Point2; 3]) -> [f64; 3] {
    let angle = |p: Point2, q: Point2, r: Point2| {
        let (ux, uy) = (q.x - p.x, q.y - p.y);
        let (vx, vy) = (r.x - p.x, r.y - p.y);
        (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy)
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

pub fn check_acute(mesh: &Mesh) -> MeshStats {
    let mut min_angle = f64::INFINITY;
    let mut max_angle: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        for ang in corner_angles(mesh.triangle_points(t)) {
            min_angle = min_angle.min(ang);
            max_angle = max_angle.max(ang);
        }
    }
    MeshStats {
        min_angle,
        max_angle,
        is_strictly_acute: max_angle < FRAC_PI_2 - ANGLE_EPS,
        n_vertices: mesh.n_vertices(),
        n_interior: mesh.n_interior(),
        n_triangles: mesh.n_triangles(),
    }
}

/// Red refinement: every triangle is split into four through its edge midpoints.
pub fn uniform_refine(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point2>| {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            vertices.push(vertices[a].midpoint(vertices[b]));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    Mesh::new(vertices, triangles).expect("red refinement of a valid mesh is valid")
}

pub fn refine_times(mesh: &Mesh, times: usize) -> Mesh {
    let mut m = mesh.clone();
    for _ in 0..times {
        m = uniform_refine(&m);
    }
    m
}

/// Per-element P1 data.
#[derive(Debug, Clone)]
pub struct P1Geometry {
    pub elem_area: Vec<f64>,
    /// Constant gradient of each local hat function, per element.
    pub elem_grad: Vec<[[f64; 2]; 3]>,
    /// ‖φ_ℓ‖_{L¹} for every vertex.
    pub hat_mass: Vec<f64>,
    /// Longest edge over the mesh.
    pub dx: f64,
}

pub fn p1_geometry(mesh: &Mesh) -> P1Geometry {
    let nt = mesh.n_triangles();
    let mut elem_area = Vec::with_capacity(nt);
    let mut elem_grad = Vec::with_capacity(nt);
    let mut hat_mass = vec![0.0; mesh.n_vertices()];
    let mut dx: f64 = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let area = signed_area(p);
        let inv = 1.0 / (2.0 * area);
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let pj = p[(i + 1) % 3];
            let pk = p[(i + 2) % 3];
            grads[i] = [(pj.y - pk.y) * inv, (pk.x - pj.x) * inv];
            dx = dx.max(pj.dist(pk));
        }
        for &v in tri {
            hat_mass[v] += area / 3.0;
        }
        elem_area.push(area);
        elem_grad.push(grads);
    }
    P1Geometry {
        elem_area,
        elem_grad,
        hat_mass,
        dx,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::hexagon;
    use std::f64::consts::PI;

    fn equilateral_triangle() -> Mesh {
        let s = 3f64.sqrt() / 2.0;
        Mesh::new(
            vec![Point2::new(0.0, -1.0), Point2::new(s, 0.5), Point2::new(-s, 0.5)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn load_single_triangle() {
        let text = "# domain\nmesh2 3 1\n0 -1\n0.8660254037844386 0.5\n-0.8660254037844386 0.5\n0 1 2\n";
        let m = load_mesh(text).unwrap();
        assert_eq!(m.n_vertices(), 3);
        assert_eq!(m.n_triangles(), 1);
        assert_eq!(m.boundary_nodes().count(), 3);
        assert_eq!(m.n_interior(), 0);
    }

    #[test]
    fn repeated_triangle_is_non_conforming() {
        let text = "mesh2 3 2\n0 0\n1 0\n0 1\n0 1 2\n0 1 2\n";
        assert!(matches!(load_mesh(text), Err(MeshError::NonConforming(_))));
    }

    #[test]
    fn square_two_triangles() {
        let text = "mesh2 4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n";
        let m = load_mesh(text).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_nodes().count(), 4);
    }

    #[test]
    fn clockwise_input_is_normalized() {
        let m = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(m.total_area() > 0.0);
    }

    #[test]
    fn parse_errors_report_position() {
        match load_mesh("mesh2 3 1\n0 0\n1 zz\n0 1\n0 1 2\n") {
            Err(MeshError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_mesh("mesh3 1 1\n"), Err(MeshError::Parse { line: 1, .. })));
        assert!(matches!(
            load_mesh("mesh2 3 1\n0 0\n1 0\n0 1\n0 1 5\n"),
            Err(MeshError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_area_and_dangling() {
        assert!(matches!(
            load_mesh("mesh2 3 1\n0 0\n1 0\n2 0\n0 1 2\n"),
            Err(MeshError::ZeroArea(0))
        ));
        assert!(matches!(
            load_mesh("mesh2 4 1\n0 0\n1 0\n0 1\n5 5\n0 1 2\n"),
            Err(MeshError::DanglingVertex(3))
        ));
    }

    #[test]
    fn write_round_trips_bit_exactly() {
        let m = uniform_refine(&equilateral_triangle());
        let again = load_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(m.vertices(), again.vertices());
        assert_eq!(m.triangles(), again.triangles());
    }

    #[test]
    fn acute_checks() {
        let st = check_acute(&equilateral_triangle());
        assert!((st.min_angle - PI / 3.0).abs() < 1e-13);
        assert!((st.max_angle - PI / 3.0).abs() < 1e-13);
        assert!(st.is_strictly_acute);

        let tri = |c: Point2| {
            Mesh::new(vec![Point2::new(0.0, 0.0), Point2::new(4.0, 0.0), c], vec![[0, 1, 2]]).unwrap()
        };
        let right = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let st = check_acute(&right);
        assert!((st.max_angle - FRAC_PI_2).abs() < 1e-15);
        assert!(!st.is_strictly_acute);
        assert!(check_acute(&tri(Point2::new(2.0, 3.0))).is_strictly_acute);
        assert!(!check_acute(&tri(Point2::new(0.2, 0.2))).is_strictly_acute);
    }

    #[test]
    fn refinement_counts() {
        let r1 = uniform_refine(&equilateral_triangle());
        assert_eq!((r1.n_triangles(), r1.n_vertices()), (4, 6));
        let st = check_acute(&r1);
        assert!(st.is_strictly_acute);
        assert!((st.max_angle - PI / 3.0).abs() < 1e-13);
        let r2 = uniform_refine(&r1);
        assert_eq!(r2.n_triangles(), 16);
        assert_eq!(r2.n_vertices(), 15);
        assert_eq!(r2.boundary_nodes().count(), 12);
        assert_eq!(r2.n_interior(), 3);
    }

    #[test]
    fn p1_reference_triangle() {
        let m = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let g = p1_geometry(&m);
        assert_eq!(g.elem_area[0], 0.5);
        assert!((g.hat_mass[0] - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(g.elem_grad[0][0], [-1.0, -1.0]);
    }

    #[test]
    fn p1_hexagon_mass_and_dx() {
        let s = 0.7;
        let m = hexagon(s);
        let g = p1_geometry(&m);
        assert!((g.hat_mass[0] - 3f64.sqrt() * s * s / 2.0).abs() < 1e-14);
        let r = uniform_refine(&equilateral_triangle());
        assert!((p1_geometry(&r).dx - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_loop_of_hexagon() {
        let loops = hexagon(1.0).boundary_loops().unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_mesh() -> impl Strategy<Value = Mesh> {
            // a perturbed 3x3 grid keeps triangles positive
            proptest::collection::vec((-0.2f64..0.2, -0.2f64..0.2), 16).prop_map(|jit| {
                let mut v = Vec::new();
                for j in 0..4 {
                    for i in 0..4 {
                        let inner = (1..3).contains(&i) && (1..3).contains(&j);
                        let (dx, dy) = if inner { jit[j * 4 + i] } else { (0.0, 0.0) };
                        v.push(Point2::new(i as f64 + dx, j as f64 + dy));
                    }
                }
                let mut t = Vec::new();
                for j in 0..3 {
                    for i in 0..3 {
                        let a = j * 4 + i;
                        t.push([a, a + 1, a + 5]);
                        t.push([a, a + 5, a + 4]);
                    }
                }
                Mesh::new(v, t).unwrap()
            })
        }

        proptest! {
            #[test]
            fn refinement_preserves_area(m in random_mesh()) {
                let a0 = m.total_area();
                let a1 = uniform_refine(&m).total_area();
                prop_assert!(((a1 - a0) / a0).abs() < 1e-13);
            }

            #[test]
            fn hat_masses_sum_to_area(m in random_mesh()) {
                let g = p1_geometry(&m);
                let total: f64 = g.hat_mass.iter().sum();
                prop_assert!(((total - m.total_area()) / m.total_area()).abs() < 1e-13);
                prop_assert!(g.hat_mass.iter().all(|&h| h > 0.0));
            }

            #[test]
            fn hat_gradients_sum_to_zero(m in random_mesh()) {
                let g = p1_geometry(&m);
                for grads in &g.elem_grad {
                    let sx: f64 = grads.iter().map(|d| d[0]).sum();
                    let sy: f64 = grads.iter().map(|d| d[1]).sum();
                    prop_assert!(sx.abs() < 1e-13 && sy.abs() < 1e-13);
                }
            }
        }
    }
}
