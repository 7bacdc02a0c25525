//! Explicit five-point scheme for the component-wise wave equation on the
//! structured lattice.

use crate::error::{Error, Result};
use crate::geometry::{FdGrid, NodeClass};

pub type Vec2 = [f64; 2];

/// `(E_{i+1,j} + E_{i−1,j} + E_{i,j+1} + E_{i,j−1} − 4E_{i,j}) / h²` at an
/// active node, both components.
pub fn discrete_laplacian(field: &[Vec2], grid: &FdGrid, index: usize) -> Result<Vec2> {
    let (i, j) = grid.ij(index);
    if grid.class(index) != NodeClass::Active {
        return Err(Error::InvalidDomain(format!(
            "lattice node ({i}, {j}) is {:?}, not active",
            grid.class(index)
        )));
    }
    let neighbors = [
        grid.index(i + 1, j),
        grid.index(i - 1, j),
        grid.index(i, j + 1),
        grid.index(i, j - 1),
    ];
    if neighbors.iter().any(|&k| grid.class(k) == NodeClass::Hole) {
        return Err(Error::HoleNeighbor { i, j });
    }
    Ok(laplacian_at(field, grid, index))
}

#[inline]
fn laplacian_at(field: &[Vec2], grid: &FdGrid, k: usize) -> Vec2 {
    let side = grid.nodes_per_side();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let mut out = [0.0; 2];
    for (a, o) in out.iter_mut().enumerate() {
        *o = (field[k + 1][a] + field[k - 1][a] + field[k + side][a] + field[k - side][a]
            - 4.0 * field[k][a])
            * inv_h2;
    }
    out
}

/// Two consecutive lattice levels. Hole entries are carried but never used.
#[derive(Debug, Clone)]
pub struct FdState {
    current: Vec<Vec2>,
    previous: Vec<Vec2>,
    scratch: Vec<Vec2>,
    step: usize,
    tau: f64,
}

impl FdState {
    /// State at step 1 holding `E¹` and `E⁰`.
    pub fn new(e0: Vec<Vec2>, e1: Vec<Vec2>, tau: f64) -> Result<Self> {
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
            scratch: vec![[0.0; 2]; n],
            step: 1,
            tau,
        })
    }

    pub fn zeros(grid: &FdGrid, tau: f64) -> Self {
        Self::new(vec![[0.0; 2]; grid.len()], vec![[0.0; 2]; grid.len()], tau)
            .expect("equal lengths")
    }

    /// Relabels the current level as step `step`.
    pub fn at_step(mut self, step: usize) -> Self {
        self.step = step;
        self
    }

    pub fn current(&self) -> &[Vec2] {
        &self.current
    }

    pub fn current_mut(&mut self) -> &mut [Vec2] {
        &mut self.current
    }

    pub fn previous(&self) -> &[Vec2] {
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
}

/// Zeroes every outer-boundary entry of the current level.
pub fn enforce_outer_boundary(state: &mut FdState, grid: &FdGrid) {
    for (v, class) in state.current.iter_mut().zip(grid.classes()) {
        if *class == NodeClass::OuterBoundary {
            *v = [0.0; 2];
        }
    }
}

/// `Eᵏ⁺¹ = τ² Δ_h Eᵏ + 2Eᵏ − Eᵏ⁻¹ + τ² source` at active nodes, zero on
/// `∂Ω`, and `green` (in `grid.green_nodes()` order) on the green ring.
/// With `green = None` the ring is left for a following exchange.
pub fn fd_step(
    state: &mut FdState,
    grid: &FdGrid,
    source: &[Vec2],
    green: Option<&[Vec2]>,
) -> Result<()> {
    if state.current.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: state.current.len(),
        });
    }
    if source.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: source.len(),
        });
    }
    if let Some(values) = green {
        if values.len() != grid.green_nodes().len() {
            return Err(Error::BoundaryMismatch {
                expected: grid.green_nodes().len(),
                got: values.len(),
            });
        }
    }

    let tau2 = state.tau * state.tau;
    let (cur, prev) = (&state.current, &state.previous);
    for (k, (next, class)) in state.scratch.iter_mut().zip(grid.classes()).enumerate() {
        *next = match class {
            NodeClass::Active => {
                let lap = laplacian_at(cur, grid, k);
                let mut v = [0.0; 2];
                for a in 0..2 {
                    v[a] = tau2 * lap[a] + 2.0 * cur[k][a] - prev[k][a] + tau2 * source[k][a];
                }
                v
            }
            NodeClass::OuterBoundary | NodeClass::Hole => [0.0; 2],
            NodeClass::GreenBoundary => cur[k],
        };
    }
    if let Some(values) = green {
        for (&k, v) in grid.green_nodes().iter().zip(values) {
            state.scratch[k] = *v;
        }
    }
    std::mem::swap(&mut state.previous, &mut state.current);
    std::mem::swap(&mut state.current, &mut state.scratch);
    state.step += 1;
    Ok(())
}

/// `Σ |(Eᵏ⁺¹ − Eᵏ)/τ|² h² + Σ |∇_h Eᵏ · ∇_h Eᵏ⁺¹| h²` over non-hole nodes and
/// lattice edges, for a state whose current level is `k + 1`.
pub fn discrete_energy(state: &FdState, grid: &FdGrid) -> f64 {
    let h = grid.spacing();
    let side = grid.nodes_per_side();
    let (new, old) = (&state.current, &state.previous);
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for k in 0..grid.len() {
        if grid.class(k) == NodeClass::Hole {
            continue;
        }
        for a in 0..2 {
            let v = (new[k][a] - old[k][a]) / state.tau;
            kinetic += v * v;
        }
        let (i, j) = grid.ij(k);
        for (neighbor, ok) in [(k + 1, i + 1 < side), (k + side, j + 1 < side)] {
            if !ok || grid.class(neighbor) == NodeClass::Hole {
                continue;
            }
            let mut dot = 0.0;
            for a in 0..2 {
                dot += (old[neighbor][a] - old[k][a]) * (new[neighbor][a] - new[k][a]) / (h * h);
            }
            potential += dot.abs();
        }
    }
    (kinetic + potential) * h * h
}
