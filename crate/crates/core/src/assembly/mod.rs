//! Normalized P1 operators in non-divergence form and row-wise selection of
//! nodal artificial diffusion.
//!
//! Rows are indexed by interior nodes, columns by all mesh vertices, so that
//! boundary values multiply through the retained boundary columns. Test
//! functions are the L¹-normalized hats φ̂_ℓ = φ_ℓ / ‖φ_ℓ‖_{L¹}:
//!
//! * `K̂_{ℓm} = ⟨∇φ_m, ∇φ̂_ℓ⟩`
//! * `B̂_{ℓm} = ⟨b·∇φ_m + c φ_m, φ̂_ℓ⟩`
//! * `d̂_ℓ = ⟨d, φ̂_ℓ⟩`
//!
//! The diffusion coefficient sits outside the inner product and is applied
//! as a scaling of row ℓ of `K̂`.

mod quadrature;
mod sparse;

use std::fmt::Write as _;

use thiserror::Error;

pub use quadrature::QuadratureRule;
pub use sparse::SparseMatrix;

use crate::mesh::{Mesh, P1Geometry, Point2};
use crate::numfmt::fmt_f64;

/// Entries smaller than this in magnitude are treated as rounding noise when
/// deciding whether a row can be fixed by diffusion.
pub const TOL_FIX: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("non-finite coefficient in element {element} at ({x}, {y})")]
    NonFiniteCoefficient { element: usize, x: f64, y: f64 },
    #[error("row {row}: positive off-diagonal in column {col} cannot be removed by diffusion (stiffness entry is not negative; mesh not strictly acute there)")]
    UnfixableRow { row: usize, col: usize },
    #[error("operators do not share a sparsity pattern")]
    PatternMismatch,
    #[error("negative diffusion coefficient {value} at row {row}")]
    NegativeDiffusion { row: usize, value: f64 },
    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

const NO_SLOT: usize = usize::MAX;

/// Per-mesh assembly context: the shared interior-rows sparsity pattern and
/// the element-to-slot map. Entries accumulate in element order.
#[derive(Debug, Clone)]
pub struct Assembler<'m> {
    mesh: &'m Mesh,
    geom: &'m P1Geometry,
    quad: QuadratureRule,
    pattern: SparseMatrix,
    slots: Vec<[[usize; 3]; 3]>,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m Mesh, geom: &'m P1Geometry, quad: QuadratureRule) -> Self {
        let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
        for tri in mesh.triangles() {
            for &vi in tri {
                if let Some(r) = mesh.interior_index(vi) {
                    for &vj in tri {
                        trip.push((r, vj, 0.0));
                    }
                }
            }
        }
        let pattern = SparseMatrix::from_triplets(
            mesh.n_interior(),
            mesh.n_vertices(),
            mesh.interior_nodes().to_vec(),
            &trip,
        );
        let slots = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let mut s = [[NO_SLOT; 3]; 3];
                for i in 0..3 {
                    if let Some(r) = mesh.interior_index(tri[i]) {
                        let (cols, _) = pattern.row(r);
                        for j in 0..3 {
                            let k = cols.binary_search(&tri[j]).expect("pattern covers element");
                            s[i][j] = pattern.row_offsets[r] + k;
                        }
                    }
                }
                s
            })
            .collect();
        Self {
            mesh,
            geom,
            quad,
            pattern,
            slots,
        }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn geometry(&self) -> &'m P1Geometry {
        self.geom
    }

    pub fn pattern(&self) -> &SparseMatrix {
        &self.pattern
    }

    fn normalize_rows(&self, m: &mut SparseMatrix) {
        for (r, &v) in self.mesh.interior_nodes().iter().enumerate() {
            let inv = 1.0 / self.geom.hat_mass[v];
            for x in &mut m.values[m.row_offsets[r]..m.row_offsets[r + 1]] {
                *x *= inv;
            }
        }
    }

    pub fn stiffness(&self) -> SparseMatrix {
        let mut k = self.pattern.zeros_like();
        for (t, slots) in self.slots.iter().enumerate() {
            let area = self.geom.elem_area[t];
            let g = &self.geom.elem_grad[t];
            for i in 0..3 {
                if slots[i][0] == NO_SLOT {
                    continue;
                }
                for j in 0..3 {
                    k.values[slots[i][j]] += area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        self.normalize_rows(&mut k);
        k
    }

    /// Assembles `B̂` and `d̂` in one element pass. `coeff` returns `(b, c, d)`
    /// at a physical point.
    pub fn explicit_terms<F>(&self, coeff: F) -> Result<(SparseMatrix, Vec<f64>), AssemblyError>
    where
        F: Fn(Point2) -> ([f64; 2], f64, f64),
    {
        let mut bm = self.pattern.zeros_like();
        let mut dv = vec![0.0; self.pattern.n_rows];
        for (t, slots) in self.slots.iter().enumerate() {
            let area = self.geom.elem_area[t];
            let g = &self.geom.elem_grad[t];
            let p = self.mesh.triangle_points(t);
            let tri = &self.mesh.triangles()[t];
            for (lam, w) in self.quad.points.iter().zip(&self.quad.weights) {
                let x = Point2::new(
                    lam[0] * p[0].x + lam[1] * p[1].x + lam[2] * p[2].x,
                    lam[0] * p[0].y + lam[1] * p[1].y + lam[2] * p[2].y,
                );
                let (b, c, d) = coeff(x);
                if !(b[0].is_finite() && b[1].is_finite() && c.is_finite() && d.is_finite()) {
                    return Err(AssemblyError::NonFiniteCoefficient {
                        element: t,
                        x: x.x,
                        y: x.y,
                    });
                }
                let wa = w * area;
                for i in 0..3 {
                    if slots[i][0] == NO_SLOT {
                        continue;
                    }
                    let test = wa * lam[i];
                    for j in 0..3 {
                        let trial = b[0] * g[j][0] + b[1] * g[j][1] + c * lam[j];
                        bm.values[slots[i][j]] += trial * test;
                    }
                    let r = self.mesh.interior_index(tri[i]).unwrap();
                    dv[r] += d * test;
                }
            }
        }
        self.normalize_rows(&mut bm);
        for (r, &v) in self.mesh.interior_nodes().iter().enumerate() {
            dv[r] /= self.geom.hat_mass[v];
        }
        Ok((bm, dv))
    }
}

/// `K̂` on the interior rows of `mesh`.
pub fn assemble_stiffness(mesh: &Mesh, geom: &P1Geometry) -> SparseMatrix {
    Assembler::new(mesh, geom, QuadratureRule::default()).stiffness()
}

/// `B̂` for advection `b` and reaction `c` frozen at time `t`.
pub fn assemble_advection_reaction<B, C>(
    mesh: &Mesh,
    geom: &P1Geometry,
    b: B,
    c: C,
    t: f64,
    quad: &QuadratureRule,
) -> Result<SparseMatrix, AssemblyError>
where
    B: Fn(Point2, f64) -> [f64; 2],
    C: Fn(Point2, f64) -> f64,
{
    Assembler::new(mesh, geom, quad.clone())
        .explicit_terms(|p| (b(p, t), c(p, t), 0.0))
        .map(|(m, _)| m)
}

/// `d̂` for the source `d` frozen at time `t`.
pub fn assemble_source<D>(
    mesh: &Mesh,
    geom: &P1Geometry,
    d: D,
    t: f64,
    quad: &QuadratureRule,
) -> Result<Vec<f64>, AssemblyError>
where
    D: Fn(Point2, f64) -> f64,
{
    Assembler::new(mesh, geom, quad.clone())
        .explicit_terms(|p| ([0.0, 0.0], 0.0, d(p, t)))
        .map(|(_, v)| v)
}

/// Smallest per-row ν ≥ 0 such that every off-diagonal of `ν K̂ + B̂` is
/// non-positive. Rows are independent.
pub fn min_monotone_diffusion(k_hat: &SparseMatrix, b_hat: &SparseMatrix) -> Result<Vec<f64>, AssemblyError> {
    if !k_hat.same_pattern(b_hat) {
        return Err(AssemblyError::PatternMismatch);
    }
    let mut nu = vec![0.0; k_hat.n_rows];
    for (r, nu_r) in nu.iter_mut().enumerate() {
        let d = k_hat.diag_cols[r];
        for s in k_hat.row_range(r) {
            let c = k_hat.col_indices[s];
            let bv = b_hat.values[s];
            if c == d || bv <= 0.0 {
                continue;
            }
            let kv = k_hat.values[s];
            if kv >= -TOL_FIX {
                if bv > TOL_FIX {
                    return Err(AssemblyError::UnfixableRow { row: r, col: c });
                }
                continue;
            }
            *nu_r = f64::max(*nu_r, bv / -kv);
        }
    }
    Ok(nu)
}

/// Nodal diffusion bookkeeping for one operator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffusionProfile {
    /// Physical coefficient at the node.
    pub a_physical: Vec<f64>,
    /// Artificial diffusion parameter.
    pub nu: Vec<f64>,
    /// Coefficient actually applied to the stiffness row.
    pub a_eff: Vec<f64>,
}

impl DiffusionProfile {
    pub fn new(a_physical: Vec<f64>, nu: Vec<f64>) -> Self {
        let a_eff = a_physical.iter().zip(&nu).map(|(a, n)| a.max(*n)).collect();
        Self { a_physical, nu, a_eff }
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn activated(&self, row: usize) -> bool {
        self.a_eff[row] > self.a_physical[row] + 1e-14
    }

    /// CSV with header `node,x,y,a_physical,nu,a_eff,activated`, one line per
    /// interior node.
    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut out = String::from("node,x,y,a_physical,nu,a_eff,activated\n");
        for (r, &v) in mesh.interior_nodes().iter().enumerate() {
            let p = mesh.vertices()[v];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                v,
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(self.a_physical[r]),
                fmt_f64(self.nu[r]),
                fmt_f64(self.a_eff[r]),
                u8::from(self.activated(r))
            );
        }
        out
    }
}

/// Row ℓ of the result is `a_eff[ℓ]·K̂_ℓ + B̂_ℓ` with `a_eff = max(a, ν)`.
pub fn stabilized_operator(
    k_hat: &SparseMatrix,
    b_hat: &SparseMatrix,
    a_nodal: &[f64],
    nu: &[f64],
) -> Result<(SparseMatrix, DiffusionProfile), AssemblyError> {
    if !k_hat.same_pattern(b_hat) {
        return Err(AssemblyError::PatternMismatch);
    }
    for v in [a_nodal.len(), nu.len()] {
        if v != k_hat.n_rows {
            return Err(AssemblyError::LengthMismatch {
                expected: k_hat.n_rows,
                got: v,
            });
        }
    }
    if let Some((row, &value)) = a_nodal.iter().enumerate().find(|(_, a)| !(**a >= 0.0)) {
        return Err(AssemblyError::NegativeDiffusion { row, value });
    }
    let profile = DiffusionProfile::new(a_nodal.to_vec(), nu.to_vec());
    let mut s = b_hat.clone();
    for r in 0..s.n_rows {
        let a = profile.a_eff[r];
        for k in s.row_range(r) {
            s.values[k] += a * k_hat.values[k];
        }
    }
    Ok((s, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{p1_geometry, uniform_refine, Mesh};
    use crate::testutil::{hexagon, right_criss_cross};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hexagon_stiffness_entries() {
        let m = hexagon(1.0);
        let g = p1_geometry(&m);
        let k = assemble_stiffness(&m, &g);
        assert_eq!(k.n_rows, 1);
        assert!((k.diagonal(0) - 4.0).abs() < 1e-13);
        for v in 1..7 {
            assert!((k.get(0, v) + 2.0 / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn right_criss_cross_diagonal_neighbours_vanish() {
        let m = right_criss_cross();
        let g = p1_geometry(&m);
        let k = assemble_stiffness(&m, &g);
        let centre = m.interior_nodes()[0];
        let r = m.interior_index(centre).unwrap();
        let c = m.vertices()[centre];
        for (col, val) in k.row(r).0.iter().zip(k.row(r).1) {
            let p = m.vertices()[*col];
            if (p.x - c.x).abs() > 1e-12 && (p.y - c.y).abs() > 1e-12 {
                assert!(val.abs() < 1e-15, "diagonal neighbour entry {val}");
            }
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let m = uniform_refine(&uniform_refine(&hexagon(1.0)));
        let g = p1_geometry(&m);
        let k = assemble_stiffness(&m, &g);
        let ones = vec![1.0; m.n_vertices()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn advection_reaction_basics() {
        let m = uniform_refine(&hexagon(1.0));
        let g = p1_geometry(&m);
        let q = QuadratureRule::default();
        let zero = assemble_advection_reaction(&m, &g, |_, _| [0.0, 0.0], |_, _| 0.0, 0.0, &q).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let react = assemble_advection_reaction(&m, &g, |_, _| [0.0, 0.0], |_, _| 1.0, 0.0, &q).unwrap();
        let ones = vec![1.0; m.n_vertices()];
        for s in react.mul_vec(&ones) {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    // ⟨∂_x φ_m, φ̂_0⟩ on the unit hexagon: the two triangles sharing edge 0–m
    // contribute (∇φ_m|K1 + ∇φ_m|K2)·(|K|/3) / hat_mass = e_m/3 with e_m the
    // unit vector from the centre to m.
    #[test]
    fn constant_advection_on_hexagon() {
        let m = hexagon(1.0);
        let g = p1_geometry(&m);
        let b = assemble_advection_reaction(&m, &g, |_, _| [1.0, 0.0], |_, _| 0.0, 0.0, &QuadratureRule::default())
            .unwrap();
        for v in 1..7 {
            let e = m.vertices()[v];
            assert!((b.get(0, v) - e.x / 3.0).abs() < 1e-14, "col {v}");
        }
        assert!(b.diagonal(0).abs() < 1e-14);
    }

    #[test]
    fn source_normalization() {
        let m = uniform_refine(&hexagon(1.0));
        let g = p1_geometry(&m);
        let q = QuadratureRule::default();
        let ones = assemble_source(&m, &g, |_, _| 1.0, 0.0, &q).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let zero = assemble_source(&m, &g, |_, _| 0.0, 0.0, &q).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    // The L¹-barycentre of a hat: Σ_K (|K|/3)·(centroid of φ_ℓ on K) / hat_mass,
    // where ∫_K x φ_ℓ = |K| (2 x_ℓ + x_j + x_k) / 12.
    #[test]
    fn source_linear_is_hat_barycentre() {
        let m = uniform_refine(&crate::testutil::skewed_patch());
        let g = p1_geometry(&m);
        let d = assemble_source(&m, &g, |p, _| p.x, 0.0, &QuadratureRule::default()).unwrap();
        for (r, &v) in m.interior_nodes().iter().enumerate() {
            let mut num = 0.0;
            for (t, tri) in m.triangles().iter().enumerate() {
                if let Some(i) = tri.iter().position(|&w| w == v) {
                    let p = m.triangle_points(t);
                    let xs = 2.0 * p[i].x + p[(i + 1) % 3].x + p[(i + 2) % 3].x;
                    num += g.elem_area[t] * xs / 12.0;
                }
            }
            assert!((d[r] - num / g.hat_mass[v]).abs() < 1e-14);
        }
    }

    #[test]
    fn non_finite_coefficient_is_reported() {
        let m = hexagon(1.0);
        let g = p1_geometry(&m);
        let r = assemble_source(&m, &g, |_, _| f64::NAN, 0.0, &QuadratureRule::default());
        assert!(matches!(r, Err(AssemblyError::NonFiniteCoefficient { .. })));
    }

    fn one_row(k_off: &[f64], b_off: &[f64]) -> (SparseMatrix, SparseMatrix) {
        let n = k_off.len();
        let mut kt = vec![(0, 0, -k_off.iter().sum::<f64>())];
        let mut bt = vec![(0, 0, 0.0)];
        for j in 0..n {
            kt.push((0, j + 1, k_off[j]));
            bt.push((0, j + 1, b_off[j]));
        }
        (
            SparseMatrix::from_triplets(1, n + 1, vec![0], &kt),
            SparseMatrix::from_triplets(1, n + 1, vec![0], &bt),
        )
    }

    #[test]
    fn diffusion_selection_examples() {
        let (k, b) = one_row(&[-2.0 / 3.0; 6], &[0.1, -0.2, 0.05, 0.0, -0.1, 0.02]);
        let nu = min_monotone_diffusion(&k, &b).unwrap();
        assert!((nu[0] - 0.15).abs() < 1e-15);
        let (k, b) = one_row(&[-1.0; 3], &[-0.1, 0.0, -3.0]);
        assert_eq!(min_monotone_diffusion(&k, &b).unwrap(), vec![0.0]);
        let (k, b) = one_row(&[-1.0, 0.0], &[0.0, 0.2]);
        assert_eq!(
            min_monotone_diffusion(&k, &b),
            Err(AssemblyError::UnfixableRow { row: 0, col: 2 })
        );
    }

    // Smallest ν with ν K + B ≤ 0 off the diagonal, by bisection.
    fn bisect_nu(k: &[f64], b: &[f64]) -> f64 {
        let ok = |nu: f64| k.iter().zip(b).all(|(kv, bv)| nu * kv + bv <= 0.0);
        if ok(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while !ok(hi) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn selection_is_minimal_against_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = rng.gen_range(3..9);
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..-0.01)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (km, bm) = one_row(&k, &b);
            let nu = min_monotone_diffusion(&km, &bm).unwrap()[0];
            assert!((nu - bisect_nu(&k, &b)).abs() <= 1e-12);
        }
    }

    #[test]
    fn stabilized_rows() {
        let (k, b) = one_row(&[-2.0 / 3.0; 6], &[0.1, -0.2, 0.05, 0.0, -0.1, 0.02]);
        let (s, prof) = stabilized_operator(&k, &b, &[0.0], &[0.15]).unwrap();
        assert_eq!(prof.a_eff, vec![0.15]);
        assert!(s.max_off_diagonal() <= 1e-13);
        let (s, prof) = stabilized_operator(&k, &b, &[1.0], &[0.15]).unwrap();
        assert_eq!(prof.a_eff, vec![1.0]);
        assert!(!prof.activated(0));
        for kk in 0..s.nnz() {
            assert_eq!(s.values[kk], k.values[kk] + b.values[kk]);
        }
        assert!(matches!(
            stabilized_operator(&k, &b, &[-1.0], &[0.0]),
            Err(AssemblyError::NegativeDiffusion { .. })
        ));
    }

    // Row scaling by a_eff(y_ℓ) equals assembling ⟨a_eff(y_ℓ) ∇w, ∇φ̂_ℓ⟩ directly.
    #[test]
    fn row_scaling_matches_nodal_coefficient_assembly() {
        let m = uniform_refine(&crate::testutil::skewed_patch());
        let g = p1_geometry(&m);
        let k = assemble_stiffness(&m, &g);
        let zero = k.zeros_like();
        let a: Vec<f64> = m.interior_nodes().iter().map(|&v| 0.3 + m.vertices()[v].x.powi(2)).collect();
        let (s, _) = stabilized_operator(&k, &zero, &a, &vec![0.0; a.len()]).unwrap();
        let mut trip = Vec::new();
        for (t, tri) in m.triangles().iter().enumerate() {
            for i in 0..3 {
                if let Some(r) = m.interior_index(tri[i]) {
                    let coef = a[r] / g.hat_mass[tri[i]];
                    for j in 0..3 {
                        let gi = g.elem_grad[t][i];
                        let gj = g.elem_grad[t][j];
                        trip.push((r, tri[j], coef * g.elem_area[t] * (gi[0] * gj[0] + gi[1] * gj[1])));
                    }
                }
            }
        }
        let direct = SparseMatrix::from_triplets(k.n_rows, k.n_cols, k.diag_cols.clone(), &trip);
        for r in 0..k.n_rows {
            for (c, v) in direct.row(r).0.iter().zip(direct.row(r).1) {
                assert!((s.get(r, *c) - v).abs() <= 1e-14 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn diffusion_csv_header() {
        let m: Mesh = hexagon(1.0);
        let p = DiffusionProfile::new(vec![0.0], vec![0.2]);
        let csv = p.to_csv(&m);
        assert_eq!(csv, "node,x,y,a_physical,nu,a_eff,activated\n0,0,0,0,0.2,0.2,1\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Raising ν on a row never raises an off-diagonal entry.
            #[test]
            fn off_diagonals_monotone_in_nu(
                k in proptest::collection::vec(-1.0f64..-0.01, 6),
                b in proptest::collection::vec(-1.0f64..1.0, 6),
                nu in 0.0f64..2.0,
                bump in 0.0f64..1.0,
            ) {
                let (km, bm) = one_row(&k, &b);
                let (s0, _) = stabilized_operator(&km, &bm, &[0.0], &[nu]).unwrap();
                let (s1, _) = stabilized_operator(&km, &bm, &[0.0], &[nu + bump]).unwrap();
                for j in 1..=6 {
                    prop_assert!(s1.get(0, j) <= s0.get(0, j));
                }
            }

            #[test]
            fn minimal_nu_gives_sign_pattern(
                k in proptest::collection::vec(-1.0f64..-0.01, 6),
                b in proptest::collection::vec(-1.0f64..1.0, 6),
            ) {
                let (km, bm) = one_row(&k, &b);
                let nu = min_monotone_diffusion(&km, &bm).unwrap();
                let (s, _) = stabilized_operator(&km, &bm, &[0.0], &nu).unwrap();
                prop_assert!(s.max_off_diagonal() <= 1e-13);
            }
        }
    }
}
