//! Finite control sets, the HJB problem description, and the explicit /
//! implicit operator split used by the time stepper.
//!
//! Advection and reaction are treated explicitly together with the minimal
//! artificial diffusion that makes the explicit rows monotone; whatever
//! physical diffusion remains goes into the implicit part as a row scaling of
//! the stiffness matrix.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::{
    min_monotone_diffusion, stabilized_operator, Assembler, AssemblyError, DiffusionProfile, QuadratureRule,
    SparseMatrix,
};
use crate::mesh::{Mesh, P1Geometry, Point2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("need at least 3 directions on the unit circle, got {0}")]
    TooFewDirections(usize),
    #[error("diffusion levels must satisfy 0 <= a0 < a1, got a0 = {0}, a1 = {1}")]
    BadLevels(f64, f64),
    #[error("control set is empty")]
    Empty,
    #[error("duplicate control label `{0}`")]
    DuplicateLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionLevel {
    /// Position in the diffusion list (endpoints first).
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub index: usize,
    pub vector: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    pub label: String,
    pub diffusion: Option<DiffusionLevel>,
    pub direction: Option<Direction>,
}

/// Ordered finite control list; the order is the tie-breaking order.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    controls: Vec<Control>,
}

impl ControlSet {
    pub fn new(controls: Vec<Control>) -> Result<Self, ControlError> {
        if controls.is_empty() {
            return Err(ControlError::Empty);
        }
        let mut labels: Vec<&str> = controls.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(ControlError::DuplicateLabel(w[0].to_string()));
        }
        Ok(Self { controls })
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn get(&self, i: usize) -> &Control {
        &self.controls[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Control> {
        self.controls.iter()
    }

    /// Cartesian product, `self` major and `other` minor.
    pub fn product(&self, other: &ControlSet) -> ControlSet {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.controls {
            for b in &other.controls {
                out.push(Control {
                    label: format!("{}x{}", a.label, b.label),
                    diffusion: a.diffusion.or(b.diffusion),
                    direction: a.direction.or(b.direction),
                });
            }
        }
        ControlSet { controls: out }
    }
}

/// `n` equally spaced unit directions `(cos 2πj/n, sin 2πj/n)`.
pub fn unit_circle_controls(n: usize) -> Result<ControlSet, ControlError> {
    if n < 3 {
        return Err(ControlError::TooFewDirections(n));
    }
    let controls = (0..n)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / n as f64;
            Control {
                label: format!("beta{j}"),
                diffusion: None,
                direction: Some(Direction {
                    index: j,
                    vector: [th.cos(), th.sin()],
                }),
            }
        })
        .collect();
    Ok(ControlSet { controls })
}

/// The two extreme diffusion levels `{a0, a1}`.
pub fn bang_bang_controls(a0: f64, a1: f64) -> Result<ControlSet, ControlError> {
    diffusion_levels(a0, a1, 0)
}

/// Endpoints `a0, a1` followed by `n_interior` equally spaced interior samples.
pub fn diffusion_levels(a0: f64, a1: f64, n_interior: usize) -> Result<ControlSet, ControlError> {
    if !(a0 >= 0.0 && a0 < a1) {
        return Err(ControlError::BadLevels(a0, a1));
    }
    let mut values = vec![a0, a1];
    values.extend((1..=n_interior).map(|k| a0 + (a1 - a0) * k as f64 / (n_interior + 1) as f64));
    let controls = values
        .into_iter()
        .enumerate()
        .map(|(index, value)| Control {
            label: format!("alpha{index}"),
            diffusion: Some(DiffusionLevel { index, value }),
            direction: None,
        })
        .collect();
    Ok(ControlSet { controls })
}

/// Coefficients of `L^α w = −a Δw + b·∇w + c w` and the source `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: [f64; 2],
    pub c: f64,
    pub d: f64,
}

pub type CoefficientFn = dyn Fn(&Control, Point2, f64) -> Coefficients + Send + Sync;
pub type BoundaryFn = dyn Fn(Point2, f64) -> f64 + Send + Sync;
pub type FinalFn = dyn Fn(Point2) -> f64 + Send + Sync;

/// `−v_t + sup_α (L^α v − d^α) = 0` on `(0, T) × Ω`, `v = g` on the boundary,
/// `v(T) = v_T`.
#[derive(Clone)]
pub struct HJBProblem {
    pub controls: ControlSet,
    pub coeff: Arc<CoefficientFn>,
    pub boundary: Arc<BoundaryFn>,
    pub final_data: Arc<FinalFn>,
    pub horizon: f64,
    /// Coefficients do not depend on time, so operators can be reused.
    pub autonomous: bool,
}

impl std::fmt::Debug for HJBProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HJBProblem")
            .field("n_controls", &self.controls.len())
            .field("horizon", &self.horizon)
            .field("autonomous", &self.autonomous)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffusionMode {
    /// Row-wise minimal ν at every node.
    #[default]
    Local,
    /// Every node and control gets the largest local ν of the same assembly.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingPolicy {
    pub diffusion: DiffusionMode,
    /// Lower bound on the implicit diffusion coefficient.
    pub implicit_floor: f64,
}

impl Default for SplittingPolicy {
    fn default() -> Self {
        Self {
            diffusion: DiffusionMode::Local,
            implicit_floor: 0.0,
        }
    }
}

/// Implicit operator of one control.
#[derive(Debug, Clone, PartialEq)]
pub enum ImplicitOperator {
    /// `diag(scale) · K̂`.
    Scaled(Vec<f64>),
    /// An arbitrary matrix on the same row/column layout.
    Matrix(SparseMatrix),
}

impl ImplicitOperator {
    /// Visits the entries of row `r`.
    pub fn for_row(&self, k_hat: &SparseMatrix, r: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            ImplicitOperator::Scaled(s) => {
                let (cols, vals) = k_hat.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    f(c, s[r] * v);
                }
            }
            ImplicitOperator::Matrix(m) => {
                let (cols, vals) = m.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    f(c, v);
                }
            }
        }
    }

    /// `S_I v`; `k_hat_v` is `K̂ v`, shared across scaled controls.
    pub fn apply(&self, k_hat_v: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            ImplicitOperator::Scaled(s) => s.iter().zip(k_hat_v).map(|(a, kv)| a * kv).collect(),
            ImplicitOperator::Matrix(m) => m.mul_vec(v),
        }
    }

    pub fn to_matrix(&self, k_hat: &SparseMatrix) -> SparseMatrix {
        match self {
            ImplicitOperator::Scaled(s) => {
                let mut m = k_hat.clone();
                for (r, a) in s.iter().enumerate() {
                    for k in m.row_range(r) {
                        m.values[k] *= a;
                    }
                }
                m
            }
            ImplicitOperator::Matrix(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlOperator {
    /// Stabilized explicit matrix `Ŝ_E^α`.
    pub explicit: SparseMatrix,
    /// `Ŝ_I^α`.
    pub implicit: ImplicitOperator,
    /// `Ŝ_C^α = d̂^α`.
    pub source: Vec<f64>,
    pub explicit_profile: DiffusionProfile,
    pub implicit_profile: DiffusionProfile,
}

impl ControlOperator {
    /// Physical diffusion at the implicit time level against the explicit
    /// artificial diffusion; activation means ν exceeds the physical value.
    pub fn combined_profile(&self) -> DiffusionProfile {
        DiffusionProfile::new(self.implicit_profile.a_physical.clone(), self.explicit_profile.nu.clone())
    }
}

/// Split operators of every control at one time step. Rows are interior
/// nodes, columns all mesh nodes.
#[derive(Debug, Clone)]
pub struct SplitOperators {
    pub k_hat: Arc<SparseMatrix>,
    pub controls: Vec<ControlOperator>,
}

impl SplitOperators {
    pub fn n_rows(&self) -> usize {
        self.k_hat.n_rows
    }

    pub fn n_nodes(&self) -> usize {
        self.k_hat.n_cols
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// Column of each row's diagonal, i.e. the vertex id of each unknown.
    pub fn row_nodes(&self) -> &[usize] {
        &self.k_hat.diag_cols
    }

    /// Per node, the profile of the control with the largest ν (first on ties).
    pub fn aggregated_profile(&self) -> DiffusionProfile {
        let n = self.n_rows();
        let mut a = vec![0.0; n];
        let mut nu = vec![f64::NEG_INFINITY; n];
        for op in &self.controls {
            let nu_c = &op.explicit_profile.nu;
            let a_c = &op.implicit_profile.a_physical;
            for r in 0..n {
                if nu_c[r] > nu[r] {
                    nu[r] = nu_c[r];
                    a[r] = a_c[r];
                }
            }
        }
        for v in &mut nu {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        DiffusionProfile::new(a, nu)
    }

    /// Largest entry-wise violation of the monotonicity structure:
    /// `(Id − h Ŝ_E) ≥ 0` and non-positive off-diagonals of `Ŝ_I`.
    /// Returns `(min entry of Id − h Ŝ_E, max off-diagonal of Ŝ_I)`.
    pub fn monotonicity_margins(&self, h: f64) -> (f64, f64) {
        let mut min_expl = f64::INFINITY;
        let mut max_impl_off = f64::NEG_INFINITY;
        for op in &self.controls {
            let e = &op.explicit;
            for r in 0..e.n_rows {
                let d = e.diag_cols[r];
                let (cols, vals) = e.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    let entry = if c == d { 1.0 - h * v } else { -h * v };
                    min_expl = min_expl.min(entry);
                }
                op.implicit.for_row(&self.k_hat, r, |c, v| {
                    if c != d {
                        max_impl_off = max_impl_off.max(v);
                    }
                });
            }
        }
        (min_expl, max_impl_off)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("control {control}: negative physical diffusion {value} at node {node}")]
    NegativeDiffusion { control: usize, node: usize, value: f64 },
}

/// Caches the mesh-dependent pieces (pattern, `K̂`) across time steps.
pub struct OperatorBuilder<'m> {
    assembler: Assembler<'m>,
    k_hat: Arc<SparseMatrix>,
}

impl<'m> OperatorBuilder<'m> {
    pub fn new(mesh: &'m Mesh, geom: &'m P1Geometry) -> Self {
        let assembler = Assembler::new(mesh, geom, QuadratureRule::default());
        let k_hat = Arc::new(assembler.stiffness());
        Self { assembler, k_hat }
    }

    pub fn k_hat(&self) -> &Arc<SparseMatrix> {
        &self.k_hat
    }

    /// Explicit pieces at `t_expl`, implicit diffusion at `t_impl`.
    pub fn build(
        &self,
        problem: &HJBProblem,
        t_expl: f64,
        t_impl: f64,
        policy: SplittingPolicy,
    ) -> Result<SplitOperators, SplitError> {
        let mesh = self.assembler.mesh();
        let nodes = mesh.interior_nodes();
        let k_hat = &self.k_hat;

        let explicit: Vec<(SparseMatrix, Vec<f64>, Vec<f64>)> = (0..problem.controls.len())
            .into_par_iter()
            .map(|i| {
                let ctrl = problem.controls.get(i);
                let (b_hat, d_hat) = self.assembler.explicit_terms(|p| {
                    let co = (problem.coeff)(ctrl, p, t_expl);
                    (co.b, co.c, co.d)
                })?;
                let nu = min_monotone_diffusion(k_hat, &b_hat)?;
                Ok((b_hat, d_hat, nu))
            })
            .collect::<Result<_, AssemblyError>>()?;

        let global_nu = match policy.diffusion {
            DiffusionMode::Local => None,
            DiffusionMode::Global => Some(
                explicit
                    .iter()
                    .flat_map(|(_, _, nu)| nu.iter().copied())
                    .fold(0.0, f64::max),
            ),
        };

        let controls = explicit
            .into_par_iter()
            .enumerate()
            .map(|(i, (b_hat, d_hat, mut nu))| {
                if let Some(g) = global_nu {
                    nu.iter_mut().for_each(|v| *v = g);
                }
                let ctrl = problem.controls.get(i);
                let zeros = vec![0.0; nu.len()];
                let (s_e, explicit_profile) = stabilized_operator(k_hat, &b_hat, &zeros, &nu)?;

                let mut a_phys = Vec::with_capacity(nodes.len());
                let mut a_rest = Vec::with_capacity(nodes.len());
                for (r, &v) in nodes.iter().enumerate() {
                    let a = (problem.coeff)(ctrl, mesh.vertices()[v], t_impl).a;
                    if !(a >= 0.0) {
                        return Err(SplitError::NegativeDiffusion {
                            control: i,
                            node: v,
                            value: a,
                        });
                    }
                    a_phys.push(a);
                    a_rest.push((a - nu[r]).max(0.0));
                }
                let implicit_profile = DiffusionProfile::new(a_rest, vec![policy.implicit_floor; nodes.len()]);
                let mut profile = implicit_profile.clone();
                profile.a_physical = a_phys;
                Ok(ControlOperator {
                    explicit: s_e,
                    implicit: ImplicitOperator::Scaled(implicit_profile.a_eff.clone()),
                    source: d_hat,
                    explicit_profile,
                    implicit_profile: profile,
                })
            })
            .collect::<Result<Vec<_>, SplitError>>()?;

        Ok(SplitOperators {
            k_hat: Arc::clone(k_hat),
            controls,
        })
    }
}

/// One-shot convenience over [`OperatorBuilder`].
pub fn build_split_operators(
    problem: &HJBProblem,
    mesh: &Mesh,
    geom: &P1Geometry,
    t_expl: f64,
    t_impl: f64,
    policy: SplittingPolicy,
) -> Result<SplitOperators, SplitError> {
    OperatorBuilder::new(mesh, geom).build(problem, t_expl, t_impl, policy)
}
