//! Distance-function benchmark on a non-convex lattice polygon, with an
//! exact polygon-distance oracle.

use std::sync::Arc;

use crate::control::{unit_circle_controls, Coefficients, ControlError, HJBProblem};
use crate::mesh::{Mesh, MeshError, Point2};

/// Width bands of the staircase domain: `(y_top, x_min, x_max)`.
const BANDS: [(f64, f64, f64); 3] = [(1.0 / 3.0, 0.0, 1.6), (2.0 / 3.0, 0.0, 1.2), (1.0, 0.2, 0.8)];

/// Rows of the lattice in the shipped `lattice.mesh2`.
pub const DEFAULT_SIDE_ROWS: usize = 12;

fn band_for(y: f64) -> (f64, f64) {
    for &(top, lo, hi) in &BANDS {
        if y < top {
            return (lo, hi);
        }
    }
    let (_, lo, hi) = BANDS[BANDS.len() - 1];
    (lo, hi)
}

/// A staircase (L-like) polygon of unit height made of equilateral lattice
/// triangles with `side_rows` rows, side `s = 2 / (√3 · side_rows)`.
pub fn lattice_domain(side_rows: usize) -> Mesh {
    assert!(side_rows >= 4, "lattice domain needs at least 4 rows");
    let rows = side_rows;
    let s = 2.0 / (3f64.sqrt() * rows as f64);
    let x_max = BANDS.iter().map(|b| b.2).fold(0.0, f64::max);
    let cols = (x_max / s).ceil() as usize + 2;
    let pos = |i: usize, j: usize| {
        Point2::new(
            s * (i as f64 + if j % 2 == 1 { 0.5 } else { 0.0 }),
            j as f64 / rows as f64,
        )
    };
    let mut tris: Vec<[(usize, usize); 3]> = Vec::new();
    for j in 0..rows {
        let y_mid = (j as f64 + 0.5) / rows as f64;
        let (lo, hi) = band_for(y_mid);
        for i in 0..cols {
            let cand = if j % 2 == 0 {
                [[(i, j), (i + 1, j), (i, j + 1)], [(i + 1, j), (i + 1, j + 1), (i, j + 1)]]
            } else {
                [[(i, j), (i + 1, j), (i + 1, j + 1)], [(i, j), (i + 1, j + 1), (i, j + 1)]]
            };
            for t in cand {
                let cx = t.iter().map(|&(a, b)| pos(a, b).x).sum::<f64>() / 3.0;
                if cx >= lo && cx <= hi {
                    tris.push(t);
                }
            }
        }
    }
    let mut ids = std::collections::BTreeMap::new();
    let mut vertices = Vec::new();
    // number vertices row by row for a readable asset
    let mut keys: Vec<(usize, usize)> = tris.iter().flatten().copied().collect();
    keys.sort_by_key(|&(i, j)| (j, i));
    keys.dedup();
    for (i, j) in keys {
        ids.insert((i, j), vertices.len());
        vertices.push(pos(i, j));
    }
    let triangles = tris.iter().map(|t| t.map(|k| ids[&k])).collect();
    Mesh::new(vertices, triangles).expect("lattice domain is a valid mesh")
}

/// Boundary segments of a polygonal domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonOracle {
    pub segments: Vec<[Point2; 2]>,
}

fn segment_distance(p: Point2, [a, b]: [Point2; 2]) -> f64 {
    let (ex, ey) = (b.x - a.x, b.y - a.y);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * ex + (p.y - a.y) * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(Point2::new(a.x + t * ex, a.y + t * ey))
}

impl PolygonOracle {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let v = mesh.vertices();
        Self {
            segments: mesh.boundary_edges().iter().map(|&[a, b]| [v[a], v[b]]).collect(),
        }
    }

    /// Closed polygon through `points` in order.
    pub fn from_polygon(points: &[Point2]) -> Self {
        let n = points.len();
        Self {
            segments: (0..n).map(|i| [points[i], points[(i + 1) % n]]).collect(),
        }
    }

    /// Even-odd rule; points on the boundary may go either way.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for &[a, b] in &self.segments {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for seg in &self.segments {
            for p in seg {
                lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }

    /// Maximum of the distance to the boundary over the polygon's interior:
    /// grid search followed by pattern-search polishing of the best seeds.
    pub fn max_distance(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        let n = 200;
        let step = ((hi.x - lo.x).max(hi.y - lo.y)) / n as f64;
        let mut seeds: Vec<(f64, Point2)> = Vec::new();
        let mut y = lo.y + 0.5 * step;
        while y < hi.y {
            let mut x = lo.x + 0.5 * step;
            while x < hi.x {
                let p = Point2::new(x, y);
                if self.contains(p) {
                    seeds.push((polygon_distance(self, p), p));
                }
                x += step;
            }
            y += step;
        }
        seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
        seeds.truncate(16);
        let mut best: f64 = 0.0;
        for (d0, p0) in seeds {
            let (mut d, mut p) = (d0, p0);
            let mut delta = step;
            while delta > 1e-13 {
                let mut moved = false;
                for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let q = Point2::new(p.x + dx * delta, p.y + dy * delta);
                    if self.contains(q) {
                        let dq = polygon_distance(self, q);
                        if dq > d {
                            d = dq;
                            p = q;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    delta *= 0.5;
                }
            }
            best = best.max(d);
        }
        best
    }
}

/// Minimum distance from `p` to the boundary segments.
pub fn polygon_distance(oracle: &PolygonOracle, p: Point2) -> f64 {
    oracle
        .segments
        .iter()
        .map(|&s| segment_distance(p, s))
        .fold(f64::INFINITY, f64::min)
}

/// `−v_t + |∇v| = 1` with homogeneous data; the horizon is twice the largest
/// boundary distance so that `v(0, ·)` is at steady state.
pub fn eikonal_problem(mesh: &Mesh, n_beta: usize) -> Result<HJBProblem, ControlError> {
    let horizon = 2.0 * PolygonOracle::from_mesh(mesh).max_distance();
    eikonal_problem_with_horizon(n_beta, horizon)
}

pub fn eikonal_problem_with_horizon(n_beta: usize, horizon: f64) -> Result<HJBProblem, ControlError> {
    Ok(HJBProblem {
        controls: unit_circle_controls(n_beta)?,
        coeff: Arc::new(|c, _p, _t| Coefficients {
            a: 0.0,
            b: c.direction.as_ref().map_or([0.0, 0.0], |d| d.vector),
            c: 0.0,
            d: 1.0,
        }),
        boundary: Arc::new(|_, _| 0.0),
        final_data: Arc::new(|_| 0.0),
        horizon,
        autonomous: true,
    })
}

/// Whether any boundary vertex of the mesh is reflex.
pub fn has_reflex_vertex(mesh: &Mesh) -> Result<bool, MeshError> {
    let v = mesh.vertices();
    for lp in mesh.boundary_loops()? {
        let n = lp.len();
        for k in 0..n {
            let (a, b, c) = (v[lp[(k + n - 1) % n]], v[lp[k]], v[lp[(k + 1) % n]]);
            let cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
            // loops are counter-clockwise, so a right turn is reflex
            if cross < -1e-12 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Assembler;
    use crate::mesh::{check_acute, p1_geometry};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn lattice_properties() {
        for rows in [4, 7, 12] {
            let m = lattice_domain(rows);
            let st = check_acute(&m);
            assert!(st.is_strictly_acute);
            assert!((st.min_angle - PI / 3.0).abs() < 1e-9 && (st.max_angle - PI / 3.0).abs() < 1e-9);
            let (lo, hi) = m.bounding_box();
            assert!((hi.y - lo.y - 1.0).abs() < 1e-13);
            assert!(has_reflex_vertex(&m).unwrap());
            assert_eq!(m.boundary_loops().unwrap().len(), 1);
            assert!(m.n_interior() > 0);
        }
    }

    #[test]
    fn square_oracle() {
        let sq = PolygonOracle::from_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]);
        assert!((polygon_distance(&sq, Point2::new(0.5, 0.5)) - 0.5).abs() < 1e-15);
        assert!((polygon_distance(&sq, Point2::new(0.1, 0.5)) - 0.1).abs() < 1e-15);
        assert!((sq.max_distance() - 0.5).abs() < 1e-10);
        assert!(sq.contains(Point2::new(0.3, 0.7)));
        assert!(!sq.contains(Point2::new(1.3, 0.7)));
    }

    #[test]
    fn distance_matches_dense_boundary_sampling() {
        let m = lattice_domain(6);
        let oracle = PolygonOracle::from_mesh(&m);
        let mut samples = Vec::new();
        for &[a, b] in &oracle.segments {
            let k = (a.dist(b) / 1e-5).ceil() as usize;
            for i in 0..k {
                let t = i as f64 / k as f64;
                samples.push(Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            }
        }
        let (lo, hi) = m.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut n = 0;
        while n < 1000 {
            let p = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
            if !oracle.contains(p) {
                continue;
            }
            n += 1;
            let brute = samples.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
            let exact = polygon_distance(&oracle, p);
            assert!(exact <= brute + 1e-15);
            assert!(brute - exact <= 1e-6, "{p:?}: {exact} vs {brute}");
        }
    }

    #[test]
    fn oracle_max_is_at_least_every_node_distance() {
        let m = lattice_domain(8);
        let oracle = PolygonOracle::from_mesh(&m);
        let dmax = oracle.max_distance();
        for &v in m.interior_nodes() {
            assert!(polygon_distance(&oracle, m.vertices()[v]) <= dmax + 1e-12);
        }
        // the inscribed disc of the 1/3-high bands bounds the maximum below
        assert!(dmax > 1.0 / 6.0);
    }

    #[test]
    fn eikonal_sources_are_one() {
        let m = lattice_domain(4);
        let g = p1_geometry(&m);
        let p = eikonal_problem(&m, 8).unwrap();
        let asm = Assembler::new(&m, &g, Default::default());
        let ctrl = p.controls.get(0);
        let (_, d_hat) = asm
            .explicit_terms(|x| {
                let c = (p.coeff)(ctrl, x, 0.0);
                (c.b, c.c, c.d)
            })
            .unwrap();
        for d in d_hat {
            assert!((d - 1.0).abs() < 1e-14);
        }
    }
}
