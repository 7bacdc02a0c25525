//! Manufactured solution, error norms and convergence rates.
//!
//! The exact field is `E = Ψ/ε · t²/2` with
//! `Ψ = (π sin²(πx) sin(2πy), −π sin²(πy) sin(2πx))`. Because `∇·Ψ = 0`,
//! `∇·(εE) = 0` holds for every permittivity.

use std::f64::consts::PI;
use std::ops::ControlFlow;

use crate::coupling::{run_observed, ProblemData, RunConfig, SeparableSource, SolutionHistory};
use crate::error::{Error, Result};
use crate::fdm::Vec2;
use crate::fem::dof;
use crate::geometry::{FdGrid, FeMesh, NodeClass, Point, INNER_BOX};
use crate::material::EpsModel;
use crate::quadrature::{midpoints, p1_gradients, MIDPOINT_BARY};

/// Value, gradient (`[a][c] = ∂_c Ψ_a`) and Hessian (`[a][c][d]`) of `Ψ`.
struct PsiJet {
    value: Vec2,
    grad: [[f64; 2]; 2],
    hess: [[[f64; 2]; 2]; 2],
}

/// Jet of `g(s, r) = π sin²(πs) sin(2πr)` as `[g, g_s, g_r, g_ss, g_sr, g_rr]`.
fn g_jet(s: f64, r: f64) -> [f64; 6] {
    let ss = (PI * s).sin();
    let (s2s, c2s) = (2.0 * PI * s).sin_cos();
    let (s2r, c2r) = (2.0 * PI * r).sin_cos();
    let pi2 = PI * PI;
    let pi3 = pi2 * PI;
    [
        PI * ss * ss * s2r,
        pi2 * s2s * s2r,
        2.0 * pi2 * ss * ss * c2r,
        2.0 * pi3 * c2s * s2r,
        2.0 * pi3 * s2s * c2r,
        -4.0 * pi3 * ss * ss * s2r,
    ]
}

fn psi_jet(p: Point) -> PsiJet {
    let [x, y] = p;
    let a = g_jet(x, y);
    let b = g_jet(y, x);
    PsiJet {
        value: [a[0], -b[0]],
        grad: [[a[1], a[2]], [-b[2], -b[1]]],
        hess: [
            [[a[3], a[4]], [a[4], a[5]]],
            [[-b[5], -b[4]], [-b[4], -b[3]]],
        ],
    }
}

/// The manufactured problem for a given permittivity. Initial data vanish.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    eps: EpsModel,
}

impl ManufacturedCase {
    pub fn new(eps: EpsModel) -> Self {
        Self { eps }
    }

    /// The case paired with the sine permittivity of exponent `m`.
    pub fn sine(m: u32) -> Result<Self> {
        Ok(Self::new(EpsModel::sine(m)?))
    }

    pub fn eps(&self) -> &EpsModel {
        &self.eps
    }

    /// `Ψ / ε`, the spatial profile of `E`.
    pub fn profile(&self, p: Point) -> Vec2 {
        let psi = psi_jet(p).value;
        let e = self.eps.value(p);
        [psi[0] / e, psi[1] / e]
    }

    /// Gradient of the profile, `[a][c] = ∂_c (Ψ_a / ε)`.
    pub fn profile_gradient(&self, p: Point) -> [[f64; 2]; 2] {
        let jet = psi_jet(p);
        let e = self.eps.value(p);
        let de = self.eps.gradient(p);
        let mut g = [[0.0; 2]; 2];
        for a in 0..2 {
            for c in 0..2 {
                g[a][c] = jet.grad[a][c] / e - jet.value[a] * de[c] / (e * e);
            }
        }
        g
    }

    pub fn exact_field(&self, p: Point, t: f64) -> Vec2 {
        let u = self.profile(p);
        let s = 0.5 * t * t;
        [s * u[0], s * u[1]]
    }

    pub fn exact_gradient(&self, p: Point, t: f64) -> [[f64; 2]; 2] {
        let s = 0.5 * t * t;
        self.profile_gradient(p).map(|row| row.map(|v| s * v))
    }

    pub fn exact_velocity(&self, p: Point, t: f64) -> Vec2 {
        let u = self.profile(p);
        [t * u[0], t * u[1]]
    }

    /// `(∇(∇·u), Δu)` for `u = Ψ/ε`.
    pub fn profile_second_derivatives(&self, p: Point) -> (Vec2, Vec2) {
        let jet = psi_jet(p);
        let e = self.eps.value(p);
        let de = self.eps.gradient(p);
        let he = self.eps.hessian(p);
        let w = 1.0 / e;
        let dw = [-de[0] / (e * e), -de[1] / (e * e)];
        let mut hw = [[0.0; 2]; 2];
        for c in 0..2 {
            for d in 0..2 {
                hw[c][d] = -he[c][d] / (e * e) + 2.0 * de[c] * de[d] / (e * e * e);
            }
        }
        // ∂_c ∂_d u_a
        let u2 = |a: usize, c: usize, d: usize| {
            jet.hess[a][c][d] * w
                + jet.grad[a][c] * dw[d]
                + jet.grad[a][d] * dw[c]
                + jet.value[a] * hw[c][d]
        };
        (
            [u2(0, 0, 0) + u2(1, 1, 0), u2(0, 0, 1) + u2(1, 1, 1)],
            [u2(0, 0, 0) + u2(0, 1, 1), u2(1, 0, 0) + u2(1, 1, 1)],
        )
    }

    /// `∇(∇·u) − Δu` for `u = Ψ/ε`, the spatial part of the source.
    pub fn curl_curl_profile(&self, p: Point) -> Vec2 {
        let (gd, lap) = self.profile_second_derivatives(p);
        [gd[0] - lap[0], gd[1] - lap[1]]
    }

    /// Source for the five-point scheme. On `∂Ω_FEM` the second derivatives
    /// of `E` jump when `ε` is only C¹; the stencil then sees the mean of
    /// the one-sided Laplacians, so the source uses that mean with the
    /// `ε = 1` equation `∂ₜₜE − ΔE`.
    pub fn lattice_source_term(&self, p: Point, t: f64) -> Vec2 {
        let mut out = [[0.0; 2]; 2];
        self.lattice_spatial_terms(p, &mut out);
        let s = 0.5 * t * t;
        [out[0][0] + s * out[1][0], out[0][1] + s * out[1][1]]
    }

    fn lattice_spatial_terms(&self, p: Point, out: &mut [Vec2]) {
        let jet = psi_jet(p);
        out[0] = jet.value;
        out[1] = if on_inner_boundary(p) {
            let (_, inside) = self.profile_second_derivatives(p);
            let outside = [
                jet.hess[0][0][0] + jet.hess[0][1][1],
                jet.hess[1][0][0] + jet.hess[1][1][1],
            ];
            [
                -0.5 * (inside[0] + outside[0]),
                -0.5 * (inside[1] + outside[1]),
            ]
        } else {
            self.curl_curl_profile(p)
        };
    }

    /// `F = ε∂ₜₜE + ∇(∇·E) − ΔE − ∇(∇·(εE))`.
    pub fn source_term(&self, p: Point, t: f64) -> Vec2 {
        let psi = psi_jet(p).value;
        let l = self.curl_curl_profile(p);
        let s = 0.5 * t * t;
        [psi[0] + s * l[0], psi[1] + s * l[1]]
    }
}

fn on_inner_boundary(p: Point) -> bool {
    let tol = 1e-12;
    let on = |s: f64| INNER_BOX.iter().any(|b| (s - b).abs() < tol);
    let within = |s: f64| s > INNER_BOX[0] - tol && s < INNER_BOX[1] + tol;
    (on(p[0]) && within(p[1])) || (on(p[1]) && within(p[0]))
}

impl ProblemData for ManufacturedCase {
    fn source(&self, p: Point, t: f64) -> Vec2 {
        self.source_term(p, t)
    }

    fn lattice_source(&self, p: Point, t: f64) -> Vec2 {
        self.lattice_source_term(p, t)
    }

    fn separable_source(&self) -> Option<&dyn SeparableSource> {
        Some(self)
    }
}

impl SeparableSource for ManufacturedCase {
    fn terms(&self) -> usize {
        2
    }

    fn spatial(&self, p: Point, out: &mut [Vec2]) {
        out[0] = psi_jet(p).value;
        out[1] = self.curl_curl_profile(p);
    }

    fn lattice_spatial(&self, p: Point, out: &mut [Vec2]) {
        self.lattice_spatial_terms(p, out);
    }

    fn temporal(&self, t: f64, out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = 0.5 * t * t;
    }
}

/// Points of the additive R2 sequence in the open unit square.
pub fn r2_points(count: usize) -> impl Iterator<Item = Point> {
    const G: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / G, 1.0 / (G * G));
    (1..=count).map(move |k| {
        let k = k as f64;
        [(0.5 + a1 * k).fract(), (0.5 + a2 * k).fract()]
    })
}

/// Max of the central-difference divergence of `εE` (step `1e-5`) over
/// `samples` quasi-random points at least `0.01` from `∂Ω`.
pub fn divergence_check(case: &ManufacturedCase, samples: usize, t: f64) -> f64 {
    let d = 1e-5;
    let flux = |p: Point| {
        let e = case.eps.value(p);
        let v = case.exact_field(p, t);
        [e * v[0], e * v[1]]
    };
    r2_points(samples)
        .map(|[x, y]| [0.01 + 0.98 * x, 0.01 + 0.98 * y])
        .map(|[x, y]| {
            let dx = (flux([x + d, y])[0] - flux([x - d, y])[0]) / (2.0 * d);
            let dy = (flux([x, y + d])[1] - flux([x, y - d])[1]) / (2.0 * d);
            (dx + dy).abs()
        })
        .fold(0.0, f64::max)
}

/// Quadrature data on the FE mesh: per triangle, the three edge midpoints
/// with weight `area / 3` and the constant hat gradients.
struct MeshQuadrature {
    points: Vec<[Point; 3]>,
    weights: Vec<f64>,
    gradients: Vec<[[f64; 2]; 3]>,
    triangles: Vec<[usize; 3]>,
}

impl MeshQuadrature {
    fn new(mesh: &FeMesh) -> Self {
        let mut q = Self {
            points: Vec::with_capacity(mesh.triangle_count()),
            weights: mesh.areas().iter().map(|a| a / 3.0).collect(),
            gradients: Vec::with_capacity(mesh.triangle_count()),
            triangles: mesh.triangles().to_vec(),
        };
        for t in 0..mesh.triangle_count() {
            let p = mesh.triangle_coords(t);
            q.points.push(midpoints(&p));
            q.gradients.push(p1_gradients(&p));
        }
        q
    }

    fn value(&self, tri: usize, qp: usize, field: &[f64]) -> Vec2 {
        let mut v = [0.0; 2];
        for (k, &node) in self.triangles[tri].iter().enumerate() {
            let b = MIDPOINT_BARY[qp][k];
            v[0] += b * field[dof(node, 0)];
            v[1] += b * field[dof(node, 1)];
        }
        v
    }

    fn gradient(&self, tri: usize, field: &[f64]) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for (k, &node) in self.triangles[tri].iter().enumerate() {
            let grad = self.gradients[tri][k];
            for a in 0..2 {
                for c in 0..2 {
                    g[a][c] += field[dof(node, a)] * grad[c];
                }
            }
        }
        g
    }
}

/// Running maxima over time of the L2 and gradient errors on `Ω_FEM`, plus
/// a max-norm diagnostic on the FD region.
pub struct ErrorAccumulator<'a> {
    case: &'a ManufacturedCase,
    quad: MeshQuadrature,
    profile: Vec<[Vec2; 3]>,
    profile_grad: Vec<[[[f64; 2]; 2]; 3]>,
    fd_points: Vec<(usize, Vec2)>,
    max_err: f64,
    max_norm: f64,
    max_grad_err: f64,
    max_grad_norm: f64,
    max_fd_err: f64,
    steps: usize,
}

impl<'a> ErrorAccumulator<'a> {
    pub fn new(case: &'a ManufacturedCase, mesh: &FeMesh) -> Self {
        let quad = MeshQuadrature::new(mesh);
        let profile = quad.points.iter().map(|qs| qs.map(|q| case.profile(q))).collect();
        let profile_grad = quad
            .points
            .iter()
            .map(|qs| qs.map(|q| case.profile_gradient(q)))
            .collect();
        Self {
            case,
            quad,
            profile,
            profile_grad,
            fd_points: Vec::new(),
            max_err: 0.0,
            max_norm: 0.0,
            max_grad_err: 0.0,
            max_grad_norm: 0.0,
            max_fd_err: 0.0,
            steps: 0,
        }
    }

    /// Also track `max |E − E_h|` at the active FD nodes.
    pub fn with_fd_grid(mut self, grid: &FdGrid) -> Self {
        self.fd_points = grid
            .nodes_of_class(NodeClass::Active)
            .map(|k| (k, self.case.profile(grid.coord_of(k))))
            .collect();
        self
    }

    /// Adds the FE coefficients at time `t`.
    pub fn observe(&mut self, t: f64, fe: &[f64]) {
        let s = 0.5 * t * t;
        let (mut err, mut norm, mut gerr, mut gnorm) = (0.0, 0.0, 0.0, 0.0);
        for tri in 0..self.quad.triangles.len() {
            let w = self.quad.weights[tri];
            let gh = self.quad.gradient(tri, fe);
            for qp in 0..3 {
                let exact = self.profile[tri][qp];
                let vh = self.quad.value(tri, qp, fe);
                for a in 0..2 {
                    let e = s * exact[a];
                    err += w * (e - vh[a]).powi(2);
                    norm += w * e * e;
                    for c in 0..2 {
                        let ge = s * self.profile_grad[tri][qp][a][c];
                        gerr += w * (ge - gh[a][c]).powi(2);
                        gnorm += w * ge * ge;
                    }
                }
            }
        }
        self.max_err = self.max_err.max(err.sqrt());
        self.max_norm = self.max_norm.max(norm.sqrt());
        self.max_grad_err = self.max_grad_err.max(gerr.sqrt());
        self.max_grad_norm = self.max_grad_norm.max(gnorm.sqrt());
        self.steps += 1;
    }

    pub fn observe_fd(&mut self, t: f64, fd: &[Vec2]) {
        let s = 0.5 * t * t;
        for &(k, u) in &self.fd_points {
            let d = (fd[k][0] - s * u[0]).abs().max((fd[k][1] - s * u[1]).abs());
            self.max_fd_err = self.max_fd_err.max(d);
        }
    }

    /// `(e¹, e²)`; rejects an accumulator that saw no step.
    pub fn relative(&self) -> Result<(f64, f64)> {
        if self.steps == 0 {
            return Err(Error::EmptyHistory);
        }
        Ok((
            self.max_err / self.max_norm,
            self.max_grad_err / self.max_grad_norm,
        ))
    }

    pub fn fd_max_error(&self) -> f64 {
        self.max_fd_err
    }
}

/// `(e¹, e²)` over every snapshot of `history`.
pub fn relative_errors(
    history: &SolutionHistory,
    case: &ManufacturedCase,
    mesh: &FeMesh,
) -> Result<(f64, f64)> {
    let mut acc = ErrorAccumulator::new(case, mesh);
    for snap in &history.snapshots {
        acc.observe(snap.time, &snap.fe);
    }
    acc.relative()
}

/// Result of one error run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub level: u32,
    pub nel: usize,
    pub nno: usize,
    pub e1: f64,
    pub e2: f64,
    pub fd_max_error: f64,
}

/// Runs the manufactured problem and accumulates errors at every step.
pub fn measure_errors(config: RunConfig, case: &ManufacturedCase) -> Result<ErrorSummary> {
    measure_errors_with(config, case, case)
}

/// As [`measure_errors`], advancing `data` instead of the case itself.
pub fn measure_errors_with(
    config: RunConfig,
    case: &ManufacturedCase,
    data: &dyn ProblemData,
) -> Result<ErrorSummary> {
    let level = config.level;
    let mut acc: Option<ErrorAccumulator<'_>> = None;
    let mut sizes = (0, 0);
    run_observed(config, data, |solver| {
        let acc = acc.get_or_insert_with(|| {
            sizes = (solver.mesh().triangle_count(), solver.mesh().node_count());
            ErrorAccumulator::new(case, solver.mesh()).with_fd_grid(solver.grid())
        });
        acc.observe(solver.time(), solver.fe().current());
        acc.observe_fd(solver.time(), solver.fd().current());
        ControlFlow::Continue(())
    })?;
    let acc = acc.ok_or(Error::EmptyHistory)?;
    let (e1, e2) = acc.relative()?;
    Ok(ErrorSummary {
        level,
        nel: sizes.0,
        nno: sizes.1,
        e1,
        e2,
        fd_max_error: acc.fd_max_error(),
    })
}

/// `|log(e_h / e_2h)| / |log ½|`; `None` unless both errors are positive.
pub fn convergence_rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (fine / coarse).ln().abs() / 0.5f64.ln().abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub nel: usize,
    pub nno: usize,
    pub e1: f64,
    pub ratio1: Option<f64>,
    pub r1: Option<f64>,
    pub e2: f64,
    pub ratio2: Option<f64>,
    pub r2: Option<f64>,
}

/// Builds table rows; ratios and rates are filled only when the previous
/// row is the next coarser level.
pub fn convergence_table(runs: &[ErrorSummary]) -> Vec<ConvergenceRow> {
    let mut rows = Vec::with_capacity(runs.len());
    for (k, run) in runs.iter().enumerate() {
        let coarse = k
            .checked_sub(1)
            .map(|c| &runs[c])
            .filter(|c| c.level + 1 == run.level);
        let ratio = |a: f64, b: f64| (a > 0.0 && b > 0.0).then(|| a / b);
        rows.push(ConvergenceRow {
            level: run.level,
            nel: run.nel,
            nno: run.nno,
            e1: run.e1,
            ratio1: coarse.and_then(|c| ratio(c.e1, run.e1)),
            r1: coarse.and_then(|c| convergence_rate(c.e1, run.e1)),
            e2: run.e2,
            ratio2: coarse.and_then(|c| ratio(c.e2, run.e2)),
            r2: coarse.and_then(|c| convergence_rate(c.e2, run.e2)),
        });
    }
    rows
}

/// `‖∂ₜu‖²_ε + ‖∇u‖² + ‖u‖²_{|∇ε|} + ‖∇·u‖²_{|∇ε|+ε−1}` for the P1 field
/// `current` with `∂ₜu ≈ (current − previous)/τ`.
pub fn triple_norm_squared(
    mesh: &FeMesh,
    eps: &EpsModel,
    current: &[f64],
    previous: &[f64],
    tau: f64,
) -> f64 {
    triple_norm_with(mesh, eps, current, previous, tau, |_, _| ([0.0; 2], [0.0; 2], [[0.0; 2]; 2]))
}

/// Triple norm of `E(t) − E_h`, where the exact velocity uses the same
/// backward difference as the discrete one.
pub fn triple_norm_error_squared(
    mesh: &FeMesh,
    case: &ManufacturedCase,
    current: &[f64],
    previous: &[f64],
    tau: f64,
    t: f64,
) -> f64 {
    triple_norm_with(mesh, case.eps(), current, previous, tau, |p, _| {
        let now = case.exact_field(p, t);
        let before = case.exact_field(p, t - tau);
        let vel = [(now[0] - before[0]) / tau, (now[1] - before[1]) / tau];
        (now, vel, case.exact_gradient(p, t))
    })
}

fn triple_norm_with<F>(
    mesh: &FeMesh,
    eps: &EpsModel,
    current: &[f64],
    previous: &[f64],
    tau: f64,
    reference: F,
) -> f64
where
    F: Fn(Point, usize) -> (Vec2, Vec2, [[f64; 2]; 2]),
{
    let quad = MeshQuadrature::new(mesh);
    let mut total = 0.0;
    for tri in 0..quad.triangles.len() {
        let w = quad.weights[tri];
        let gh = quad.gradient(tri, current);
        for qp in 0..3 {
            let p = quad.points[tri][qp];
            let (u_ref, v_ref, g_ref) = reference(p, tri);
            let now = quad.value(tri, qp, current);
            let before = quad.value(tri, qp, previous);
            let e = eps.value(p);
            let de = eps.gradient(p);
            let grad_eps = de[0].hypot(de[1]);
            let mut sum = 0.0;
            for a in 0..2 {
                let u = u_ref[a] - now[a];
                let v = v_ref[a] - (now[a] - before[a]) / tau;
                sum += e * v * v + grad_eps * u * u;
                for c in 0..2 {
                    sum += (g_ref[a][c] - gh[a][c]).powi(2);
                }
            }
            let div = (g_ref[0][0] - gh[0][0]) + (g_ref[1][1] - gh[1][1]);
            sum += (grad_eps + e - 1.0) * div * div;
            total += w * sum;
        }
    }
    total
}

/// Interpolant of the exact field at time `t` as FE coefficients.
pub fn interpolant(case: &ManufacturedCase, mesh: &FeMesh, t: f64) -> Vec<f64> {
    crate::fem::interpolate(|p, t| case.exact_field(p, t), mesh, t)
}
