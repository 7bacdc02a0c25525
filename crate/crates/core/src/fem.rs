//! Vector P1 finite elements on the inner box with an explicit lumped-mass
//! leapfrog update.
//!
//! Degrees of freedom are laid out node-major: component `a` of node `i`
//! lives at `2 i + a`. All matrices are stored with rows indexed by the test
//! function and columns by the trial function, so `G E` is the discrete
//! operator applied to the coefficient vector `E`.

use crate::error::{Error, Result};
use crate::geometry::{signed_area, FeMesh, Point};
use crate::material::EpsModel;
use crate::quadrature::{midpoints, p1_gradients, GAUSS2_EDGE, MIDPOINT_BARY};
use crate::sparse::{self, Assembler, Csr};

#[inline]
pub fn dof(node: usize, component: usize) -> usize {
    2 * node + component
}

/// Where the permittivity enters the discrete operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StiffnessForm {
    /// Integrands `(1/ε)∇φ·∇φ`, `(1/ε)∇·(εφ)∇·φ`, `(1/ε)∇·φ∇·φ` with the
    /// plain lumped mass.
    InverseEps,
    /// Integrands `∇φ·∇φ`, `∇·(εφ)∇·φ`, `∇·φ∇·φ` with the lumped mass scaled
    /// by nodal `ε`. Consistent with `ε∂ₜₜE − ΔE + ∇∇·E − ∇∇·(εE)`.
    #[default]
    EpsMass,
}

impl StiffnessForm {
    fn weight(self, eps: f64) -> f64 {
        match self {
            StiffnessForm::InverseEps => 1.0 / eps,
            StiffnessForm::EpsMass => 1.0,
        }
    }
}

/// Local matrices of one triangle. Vector blocks are indexed `2 k + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub mass: [[f64; 3]; 3],
    pub lumped: [f64; 3],
    pub g1: [[f64; 6]; 6],
    pub g2: [[f64; 6]; 6],
    pub g3: [[f64; 6]; 6],
}

pub fn element_matrices(
    p: &[Point; 3],
    eps: &EpsModel,
    form: StiffnessForm,
) -> Result<ElementMatrices> {
    let area = signed_area(p[0], p[1], p[2]);
    let scale = (0..3)
        .map(|k| {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)
        })
        .fold(0.0f64, f64::max);
    if area.is_nan() || area <= 1e-14 * scale {
        return Err(Error::DegenerateTriangle { id: usize::MAX, area });
    }

    let mut mass = [[area / 12.0; 3]; 3];
    for (k, row) in mass.iter_mut().enumerate() {
        row[k] = area / 6.0;
    }
    let lumped = [area / 3.0; 3];

    let grad = p1_gradients(p);
    let w = area / 3.0;
    let mut g1 = [[0.0; 6]; 6];
    let mut g2 = [[0.0; 6]; 6];
    let mut g3 = [[0.0; 6]; 6];
    for (q, point) in midpoints(p).iter().enumerate() {
        let e = eps.value(*point);
        let de = eps.gradient(*point);
        let weight = w * form.weight(e);
        let phi = MIDPOINT_BARY[q];
        for j in 0..3 {
            for i in 0..3 {
                let lap = grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1];
                for b in 0..2 {
                    g1[2 * j + b][2 * i + b] += weight * lap;
                    for a in 0..2 {
                        let div_trial = grad[i][a];
                        let div_test = grad[j][b];
                        g3[2 * j + b][2 * i + a] += weight * div_trial * div_test;
                        g2[2 * j + b][2 * i + a] +=
                            weight * (de[a] * phi[i] + e * div_trial) * div_test;
                    }
                }
            }
        }
    }

    Ok(ElementMatrices {
        mass,
        lumped,
        g1,
        g2,
        g3,
    })
}

/// Assembled operators of the FE island.
#[derive(Debug, Clone)]
pub struct GlobalOperators {
    form: StiffnessForm,
    nodes: usize,
    /// Consistent scalar mass, shared by both components.
    pub mass: Csr,
    /// Row sums of `mass`.
    pub lumped: Vec<f64>,
    /// Nodal factor multiplying `lumped` in the update (ε or 1).
    pub mass_weight: Vec<f64>,
    pub g1: Csr,
    pub g2: Csr,
    pub g3: Csr,
    /// `G1 + G2 − G3`.
    pub operator: Csr,
    /// `⟨(1/ε)∂ₙφᵢ, φⱼ⟩` on `∂Ω_FEM`; only exercised by whole-domain schemes.
    pub boundary_normal: Csr,
    inverse_mass: Vec<f64>,
    boundary: Vec<bool>,
}

impl GlobalOperators {
    pub fn form(&self) -> StiffnessForm {
        self.form
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn dofs(&self) -> usize {
        2 * self.nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    /// `1 / (weight · lumped)` per node.
    pub fn inverse_mass(&self) -> &[f64] {
        &self.inverse_mass
    }
}

/// Sums element contributions in triangle order; lumps by row sums.
pub fn assemble(mesh: &FeMesh, eps: &EpsModel, form: StiffnessForm) -> Result<GlobalOperators> {
    let nodes = mesh.node_count();
    let n = 2 * nodes;
    let mut mass = Assembler::new(nodes);
    let mut g1 = Assembler::new(n);
    let mut g2 = Assembler::new(n);
    let mut g3 = Assembler::new(n);
    let mut op = Assembler::new(n);

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let local = element_matrices(&mesh.triangle_coords(t), eps, form).map_err(|e| match e {
            Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { id: t, area },
            other => other,
        })?;
        for (lj, &gj) in tri.iter().enumerate() {
            for (li, &gi) in tri.iter().enumerate() {
                mass.add(gj, gi, local.mass[lj][li]);
                for b in 0..2 {
                    for a in 0..2 {
                        let (r, c) = (2 * lj + b, 2 * li + a);
                        let (row, col) = (dof(gj, b), dof(gi, a));
                        let v1 = local.g1[r][c];
                        let v2 = local.g2[r][c];
                        let v3 = local.g3[r][c];
                        g1.add(row, col, v1);
                        g2.add(row, col, v2);
                        g3.add(row, col, v3);
                        op.add(row, col, v1 + v2 - v3);
                    }
                }
            }
        }
    }

    let mass = mass.build();
    let lumped: Vec<f64> = (0..nodes).map(|i| sparse::row_sum(&mass, i)).collect();
    let mass_weight: Vec<f64> = match form {
        StiffnessForm::InverseEps => vec![1.0; nodes],
        StiffnessForm::EpsMass => mesh.nodes().iter().map(|&p| eps.value(p)).collect(),
    };
    let inverse_mass = lumped
        .iter()
        .zip(&mass_weight)
        .map(|(l, w)| 1.0 / (l * w))
        .collect();
    let boundary = (0..nodes).map(|i| mesh.is_boundary(i)).collect();

    Ok(GlobalOperators {
        form,
        nodes,
        mass,
        lumped,
        mass_weight,
        g1: g1.build(),
        g2: g2.build(),
        g3: g3.build(),
        operator: op.build(),
        boundary_normal: assemble_boundary_normal(mesh, eps),
        inverse_mass,
        boundary,
    })
}

fn assemble_boundary_normal(mesh: &FeMesh, eps: &EpsModel) -> Csr {
    let mut asm = Assembler::new(2 * mesh.node_count());
    for edge in mesh.boundary_edges() {
        let tri = mesh.triangles()[edge.triangle];
        let grad = p1_gradients(&mesh.triangle_coords(edge.triangle));
        let (p0, p1) = (mesh.node(edge.nodes[0]), mesh.node(edge.nodes[1]));
        for (k, &test) in edge.nodes.iter().enumerate() {
            // ∫_e φ_test / ε by the two-point rule.
            let mut integral = 0.0;
            for &s in &GAUSS2_EDGE {
                let q = [s * p0[0] + (1.0 - s) * p1[0], s * p0[1] + (1.0 - s) * p1[1]];
                let phi = if k == 0 { s } else { 1.0 - s };
                integral += 0.5 * edge.length * phi / eps.value(q);
            }
            for (li, &trial) in tri.iter().enumerate() {
                let dn = grad[li][0] * edge.normal[0] + grad[li][1] * edge.normal[1];
                for a in 0..2 {
                    asm.add(dof(test, a), dof(trial, a), dn * integral);
                }
            }
        }
    }
    asm.build()
}

/// Load vector `Sⱼ = Σ ∫_{∂K} (g_h/ε) φⱼ` from per-edge endpoint values
/// (`values[e][k]` is `g` at `edges[e].nodes[k]`).
pub fn boundary_load_edges(
    edge_values: &[[[f64; 2]; 2]],
    mesh: &FeMesh,
    eps: &EpsModel,
) -> Result<Vec<f64>> {
    let edges = mesh.boundary_edges();
    if edge_values.len() != edges.len() {
        return Err(Error::BoundaryMismatch {
            expected: edges.len(),
            got: edge_values.len(),
        });
    }
    let mut load = vec![0.0; 2 * mesh.node_count()];
    for (edge, g) in edges.iter().zip(edge_values) {
        let (p0, p1) = (mesh.node(edge.nodes[0]), mesh.node(edge.nodes[1]));
        for &s in &GAUSS2_EDGE {
            let q = [s * p0[0] + (1.0 - s) * p1[0], s * p0[1] + (1.0 - s) * p1[1]];
            let w = 0.5 * edge.length / eps.value(q);
            for a in 0..2 {
                let gq = s * g[0][a] + (1.0 - s) * g[1][a];
                load[dof(edge.nodes[0], a)] += w * gq * s;
                load[dof(edge.nodes[1], a)] += w * gq * (1.0 - s);
            }
        }
    }
    Ok(load)
}

/// Load vector from nodal values of `g` given in `mesh.boundary_nodes()` order.
pub fn boundary_load(values: &[[f64; 2]], mesh: &FeMesh, eps: &EpsModel) -> Result<Vec<f64>> {
    let ring = mesh.boundary_nodes();
    if values.len() != ring.len() {
        return Err(Error::BoundaryMismatch {
            expected: ring.len(),
            got: values.len(),
        });
    }
    let mut by_node = vec![[0.0; 2]; mesh.node_count()];
    for (&node, v) in ring.iter().zip(values) {
        by_node[node] = *v;
    }
    let edge_values: Vec<_> = mesh
        .boundary_edges()
        .iter()
        .map(|e| [by_node[e.nodes[0]], by_node[e.nodes[1]]])
        .collect();
    boundary_load_edges(&edge_values, mesh, eps)
}

/// Nodal interpolant of `f(·, t)`.
pub fn interpolate<F>(f: F, mesh: &FeMesh, t: f64) -> Vec<f64>
where
    F: Fn(Point, f64) -> [f64; 2],
{
    mesh.nodes().iter().flat_map(|&p| f(p, t)).collect()
}

/// Two consecutive time levels of the FE coefficients.
#[derive(Debug, Clone)]
pub struct FeState {
    current: Vec<f64>,
    previous: Vec<f64>,
    scratch: Vec<f64>,
    step: usize,
    tau: f64,
}

impl FeState {
    /// State at step 1 holding `E¹` and `E⁰`.
    pub fn new(e0: Vec<f64>, e1: Vec<f64>, tau: f64) -> Result<Self> {
        if e0.len() != e1.len() {
            return Err(Error::LengthMismatch {
                expected: e0.len(),
                got: e1.len(),
            });
        }
        let n = e0.len();
        Ok(Self {
            current: e1,
            previous: e0,
            scratch: vec![0.0; n],
            step: 1,
            tau,
        })
    }

    pub fn zeros(nodes: usize, tau: f64) -> Self {
        Self::new(vec![0.0; 2 * nodes], vec![0.0; 2 * nodes], tau).expect("equal lengths")
    }

    /// Relabels the current level as step `step`.
    pub fn at_step(mut self, step: usize) -> Self {
        self.step = step;
        self
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn current_mut(&mut self) -> &mut [f64] {
        &mut self.current
    }

    pub fn previous(&self) -> &[f64] {
        &self.previous
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.tau
    }

    fn rotate(&mut self) {
        std::mem::swap(&mut self.previous, &mut self.current);
        std::mem::swap(&mut self.current, &mut self.scratch);
        self.step += 1;
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// One leapfrog step with Dirichlet data on `∂Ω_FEM`.
///
/// Interior dofs get
/// `Eᵏ⁺¹ = 2Eᵏ − Eᵏ⁻¹ − τ² (Mᴸ)⁻¹ (G1 + G2 − G3) Eᵏ + τ² source`, where
/// `source` already carries the `1/ε` factor. Boundary dofs take `bc`
/// (in `mesh.boundary_nodes()` order) or, when `bc` is `None`, are left for
/// a following exchange to fill.
pub fn fe_step(
    state: &mut FeState,
    ops: &GlobalOperators,
    source: &[f64],
    bc: Option<(&[usize], &[[f64; 2]])>,
) -> Result<()> {
    check_len(ops.dofs(), state.current.len())?;
    check_len(ops.dofs(), source.len())?;
    if let Some((ring, values)) = bc {
        if ring.len() != values.len() {
            return Err(Error::BoundaryMismatch {
                expected: ring.len(),
                got: values.len(),
            });
        }
        if ring.iter().any(|&n| !ops.is_boundary(n))
            || ring.len() != ops.boundary.iter().filter(|b| **b).count()
        {
            return Err(Error::BoundaryMismatch {
                expected: ops.boundary.iter().filter(|b| **b).count(),
                got: ring.len(),
            });
        }
    }

    let tau2 = state.tau * state.tau;
    for node in 0..ops.nodes {
        for a in 0..2 {
            let d = dof(node, a);
            state.scratch[d] = if ops.boundary[node] {
                state.current[d]
            } else {
                let action = sparse::row_dot(&ops.operator, d, &state.current);
                2.0 * state.current[d] - state.previous[d] - tau2 * ops.inverse_mass[node] * action
                    + tau2 * source[d]
            };
        }
    }
    if let Some((ring, values)) = bc {
        for (&node, v) in ring.iter().zip(values) {
            state.scratch[dof(node, 0)] = v[0];
            state.scratch[dof(node, 1)] = v[1];
        }
    }
    state.rotate();
    Ok(())
}

/// One leapfrog step with the weak boundary flux: every dof, including
/// `∂Ω_FEM`, is advanced and receives `τ² (Mᴸ)⁻¹ load`.
pub fn fe_step_weak(
    state: &mut FeState,
    ops: &GlobalOperators,
    source: &[f64],
    load: &[f64],
) -> Result<()> {
    check_len(ops.dofs(), state.current.len())?;
    check_len(ops.dofs(), source.len())?;
    check_len(ops.dofs(), load.len())?;
    let tau2 = state.tau * state.tau;
    for node in 0..ops.nodes {
        for a in 0..2 {
            let d = dof(node, a);
            let action = sparse::row_dot(&ops.operator, d, &state.current);
            state.scratch[d] = 2.0 * state.current[d] - state.previous[d]
                + tau2 * ops.inverse_mass[node] * (load[d] - action)
                + tau2 * source[d];
        }
    }
    state.rotate();
    Ok(())
}
