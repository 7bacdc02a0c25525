//! The interleaved FE/FD time loop.
//!
//! Every step runs, in this order: FD update, FE update, copy FE values to
//! the green ring, zero the outer boundary, copy FD values to the blue ring.
//! Both updates consume level `k` only and rotate their own buffers, so the
//! exchanges act on the freshly computed level `k + 1`.

use std::ops::ControlFlow;

use log::warn;

use crate::error::{Error, Result};
use crate::fdm::{self, FdState, Vec2};
use crate::fem::{self, FeState, GlobalOperators, StiffnessForm};
use crate::geometry::{
    build_fd_grid, build_fe_mesh, build_overlap_maps, DomainSpec, FdGrid, FeMesh, NodeClass,
    OverlapMap, Point,
};
use crate::material::EpsModel;

/// Data of an initial-boundary value problem with homogeneous outer
/// Dirichlet conditions.
pub trait ProblemData: Send + Sync {
    fn source(&self, p: Point, t: f64) -> Vec2;

    /// Source fed to the five-point scheme. Differs from [`Self::source`]
    /// only where the data are too rough for the stencil to see `F`.
    fn lattice_source(&self, p: Point, t: f64) -> Vec2 {
        self.source(p, t)
    }

    fn initial_value(&self, _p: Point) -> Vec2 {
        [0.0; 2]
    }

    fn initial_velocity(&self, _p: Point) -> Vec2 {
        [0.0; 2]
    }

    /// A split `F(p, t) = Σₖ cₖ(t) fₖ(p)`, letting the driver sample the
    /// spatial factors once per node.
    fn separable_source(&self) -> Option<&dyn SeparableSource> {
        None
    }
}

pub trait SeparableSource {
    fn terms(&self) -> usize;
    fn spatial(&self, p: Point, out: &mut [Vec2]);
    fn lattice_spatial(&self, p: Point, out: &mut [Vec2]) {
        self.spatial(p, out)
    }
    fn temporal(&self, t: f64, out: &mut [f64]);
}

/// Zero source and initial data.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl ProblemData for ZeroData {
    fn source(&self, _p: Point, _t: f64) -> Vec2 {
        [0.0; 2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ExchangeMode {
    /// Nodal values are copied on both rings.
    #[default]
    DirichletCopy,
    /// The FE island receives the FD normal derivative as a boundary flux.
    WeakNeumann,
}

/// How the second level `E¹` is formed from the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StartRule {
    /// `E¹ = E⁰ + τ f₁`.
    FirstOrder,
    /// `E¹ = E⁰ + τ f₁ + ½τ² a⁰`, with `a⁰` the discrete acceleration of
    /// `E⁰` under the coupled scheme, source included.
    #[default]
    Taylor,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub level: u32,
    pub final_time: f64,
    pub tau: f64,
    pub eps: EpsModel,
    pub mode: ExchangeMode,
    pub form: StiffnessForm,
    pub start: StartRule,
    /// Record every `stride` steps; `None` keeps the final step only.
    pub stride: Option<usize>,
    pub cfl_constant: f64,
    pub allow_unstable: bool,
}

/// `τ_l = 0.025 · 2^-l`.
pub fn default_tau(level: u32) -> f64 {
    0.025 / (1u64 << level) as f64
}

pub const DEFAULT_FINAL_TIME: f64 = 0.25;

impl RunConfig {
    pub fn new(level: u32, eps: EpsModel) -> Self {
        Self {
            level,
            final_time: DEFAULT_FINAL_TIME,
            tau: default_tau(level),
            eps,
            mode: ExchangeMode::default(),
            form: StiffnessForm::default(),
            start: StartRule::default(),
            stride: None,
            cfl_constant: 1.0,
            allow_unstable: false,
        }
    }

    /// Number of steps `N = T / τ`.
    pub fn steps(&self) -> Result<usize> {
        if !self.tau.is_finite() || self.tau <= 0.0 {
            return Err(Error::InvalidConfig(format!("time step must be positive, got {}", self.tau)));
        }
        if self.final_time.is_nan() || self.final_time <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        let ratio = self.final_time / self.tau;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "final time {} is not an integer multiple of the time step {}",
                self.final_time, self.tau
            )));
        }
        Ok(n as usize)
    }

    /// `τ / τ_max`; rejects `τ > τ_max` unless explicitly allowed.
    pub fn check_cfl(&self) -> Result<f64> {
        let spec = DomainSpec::new(self.level)?;
        let limit = cfl_limit(spec.spacing(), &self.eps, self.cfl_constant);
        let ratio = self.tau / limit;
        if ratio > 1.0 {
            if !self.allow_unstable {
                return Err(Error::CflViolation {
                    tau: self.tau,
                    limit,
                });
            }
            warn!("τ = {:e} exceeds the CFL limit {limit:e}; running anyway", self.tau);
        } else if ratio > 0.5 {
            warn!("τ = {:e} is {ratio:.2} of the CFL limit", self.tau);
        }
        Ok(ratio)
    }
}

/// `τ_max = h / (C √(1 + 3‖ε − 1‖_∞))`.
pub fn cfl_limit(h: f64, eps: &EpsModel, c: f64) -> f64 {
    h / (c * (1.0 + 3.0 * eps.max_excess()).sqrt())
}

/// Copies FE values at the green ring into the FD lattice.
pub fn exchange_fe_to_fd(fe: &FeState, map: &OverlapMap, fd: &mut FdState) -> Result<()> {
    if fe.step() != fd.step() {
        return Err(Error::StepMismatch {
            fe: fe.step(),
            fd: fd.step(),
        });
    }
    let src = fe.current();
    let dst = fd.current_mut();
    for &(index, node) in &map.green {
        dst[index] = [src[fem::dof(node, 0)], src[fem::dof(node, 1)]];
    }
    Ok(())
}

/// Copies FD values at the blue ring into the FE coefficients.
pub fn exchange_fd_to_fe(fd: &FdState, map: &OverlapMap, fe: &mut FeState) -> Result<()> {
    if fe.step() != fd.step() {
        return Err(Error::StepMismatch {
            fe: fe.step(),
            fd: fd.step(),
        });
    }
    let src = fd.current();
    let dst = fe.current_mut();
    for &(node, index) in &map.blue {
        dst[fem::dof(node, 0)] = src[index][0];
        dst[fem::dof(node, 1)] = src[index][1];
    }
    Ok(())
}

/// Source values at a fixed point set.
enum SampledSource {
    Direct { points: Vec<Point>, lattice: bool },
    Separable {
        basis: Vec<Vec<Vec2>>,
        coeffs: Vec<f64>,
    },
}

impl SampledSource {
    fn new(data: &dyn ProblemData, points: Vec<Point>, lattice: bool) -> Self {
        match data.separable_source() {
            None => SampledSource::Direct { points, lattice },
            Some(sep) => {
                let terms = sep.terms();
                let mut buf = vec![[0.0; 2]; terms];
                let mut basis = vec![Vec::with_capacity(points.len()); terms];
                for &p in &points {
                    if lattice {
                        sep.lattice_spatial(p, &mut buf);
                    } else {
                        sep.spatial(p, &mut buf);
                    }
                    for (b, v) in basis.iter_mut().zip(&buf) {
                        b.push(*v);
                    }
                }
                SampledSource::Separable {
                    basis,
                    coeffs: vec![0.0; terms],
                }
            }
        }
    }

    fn fill(&mut self, data: &dyn ProblemData, t: f64, out: &mut [Vec2]) {
        match self {
            SampledSource::Direct { points, lattice } => {
                for (o, &p) in out.iter_mut().zip(points.iter()) {
                    *o = if *lattice {
                        data.lattice_source(p, t)
                    } else {
                        data.source(p, t)
                    };
                }
            }
            SampledSource::Separable { basis, coeffs } => {
                data.separable_source()
                    .expect("separable source")
                    .temporal(t, coeffs);
                for (k, o) in out.iter_mut().enumerate() {
                    let mut v = [0.0; 2];
                    for (b, c) in basis.iter().zip(coeffs.iter()) {
                        v[0] += c * b[k][0];
                        v[1] += c * b[k][1];
                    }
                    *o = v;
                }
            }
        }
    }
}

/// A snapshot of both subdomain solutions at one step.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub fe: Vec<f64>,
    pub fd: Vec<Vec2>,
}

#[derive(Debug, Clone)]
pub struct SolutionHistory {
    pub level: u32,
    pub tau: f64,
    pub snapshots: Vec<Snapshot>,
}

impl SolutionHistory {
    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// The coupled solver with all discretization products.
pub struct HybridSolver<'a> {
    config: RunConfig,
    data: &'a dyn ProblemData,
    steps: usize,
    grid: FdGrid,
    mesh: FeMesh,
    map: OverlapMap,
    ops: GlobalOperators,
    fe: FeState,
    fd: FdState,
    fe_inv_eps: Vec<f64>,
    fe_source: SampledSource,
    fd_source: SampledSource,
    fe_buf: Vec<Vec2>,
    fe_rhs: Vec<f64>,
    fd_buf: Vec<Vec2>,
}

impl<'a> HybridSolver<'a> {
    pub fn new(config: RunConfig, data: &'a dyn ProblemData) -> Result<Self> {
        let steps = config.steps()?;
        config.check_cfl()?;
        let spec = DomainSpec::new(config.level)?;
        let grid = build_fd_grid(spec)?;
        let mesh = build_fe_mesh(spec);
        let map = build_overlap_maps(&grid, &mesh)?;
        let ops = fem::assemble(&mesh, &config.eps, config.form)?;
        let tau = config.tau;

        // With the Taylor start the states begin at step 0 holding
        // `E⁰` and `E⁰ − 2τf₁`; one coupled step then averages with `E⁰`.
        let taylor = config.start == StartRule::Taylor;
        let initial = |p: Point| {
            let e0 = data.initial_value(p);
            let v = data.initial_velocity(p);
            let shift = if taylor { -2.0 * tau } else { tau };
            (e0, [e0[0] + shift * v[0], e0[1] + shift * v[1]])
        };
        let order = |(e0, e1): (Vec<_>, Vec<_>)| if taylor { (e1, e0) } else { (e0, e1) };
        let start_step = if taylor { 0 } else { 1 };

        let (fe_prev, fe_cur) = order(mesh.nodes().iter().map(|&p| initial(p)).unzip());
        let fe = FeState::new(
            fe_prev.into_iter().flatten().collect(),
            fe_cur.into_iter().flatten().collect(),
            tau,
        )?
        .at_step(start_step);

        let mut fd0 = vec![[0.0; 2]; grid.len()];
        let mut fd1 = vec![[0.0; 2]; grid.len()];
        for k in 0..grid.len() {
            if matches!(grid.class(k), NodeClass::Active | NodeClass::GreenBoundary) {
                (fd0[k], fd1[k]) = initial(grid.coord_of(k));
            }
        }
        let (fd_prev, fd_cur) = order((fd0, fd1));
        let fd = FdState::new(fd_prev, fd_cur, tau)?.at_step(start_step);

        let fe_inv_eps = mesh.nodes().iter().map(|&p| 1.0 / config.eps.value(p)).collect();
        let fd_points = (0..grid.len()).map(|k| grid.coord_of(k)).collect();
        let fe_source = SampledSource::new(data, mesh.nodes().to_vec(), false);
        let fd_source = SampledSource::new(data, fd_points, true);

        let mut solver = Self {
            fe_buf: vec![[0.0; 2]; mesh.node_count()],
            fe_rhs: vec![0.0; 2 * mesh.node_count()],
            fd_buf: vec![[0.0; 2]; grid.len()],
            config,
            data,
            steps,
            grid,
            mesh,
            map,
            ops,
            fe,
            fd,
            fe_inv_eps,
            fe_source,
            fd_source,
        };
        if taylor {
            solver.step()?;
            let fe0 = solver.fe.previous().to_vec();
            for (v, v0) in solver.fe.current_mut().iter_mut().zip(fe0) {
                *v = 0.5 * (*v + v0);
            }
            let fd0 = solver.fd.previous().to_vec();
            for (v, v0) in solver.fd.current_mut().iter_mut().zip(fd0) {
                *v = [0.5 * (v[0] + v0[0]), 0.5 * (v[1] + v0[1])];
            }
        }
        Ok(solver)
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Total number of steps `N`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_index(&self) -> usize {
        self.fe.step()
    }

    pub fn time(&self) -> f64 {
        self.fe.time()
    }

    pub fn grid(&self) -> &FdGrid {
        &self.grid
    }

    pub fn mesh(&self) -> &FeMesh {
        &self.mesh
    }

    pub fn overlap(&self) -> &OverlapMap {
        &self.map
    }

    pub fn operators(&self) -> &GlobalOperators {
        &self.ops
    }

    pub fn fe(&self) -> &FeState {
        &self.fe
    }

    pub fn fd(&self) -> &FdState {
        &self.fd
    }

    pub fn is_finished(&self) -> bool {
        self.fe.step() >= self.steps
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.fe.step(),
            time: self.fe.time(),
            fe: self.fe.current().to_vec(),
            fd: self.fd.current().to_vec(),
        }
    }

    /// Normal derivative of the FD solution at both endpoints of every FE
    /// boundary edge, by central differences across the blue ring.
    fn boundary_flux(&self) -> Vec<[Vec2; 2]> {
        let h = self.grid.spacing();
        let field = self.fd.current();
        self.mesh
            .boundary_edges()
            .iter()
            .map(|edge| {
                let (nx, ny) = (edge.normal[0] as isize, edge.normal[1] as isize);
                edge.nodes.map(|node| {
                    let (i, j) = self.mesh.lattice_ij(node);
                    let (i, j) = (i as isize, j as isize);
                    let at = |a: isize, b: isize| field[self.grid.index(a as usize, b as usize)];
                    let (out, inn) = (at(i + nx, j + ny), at(i - nx, j - ny));
                    [(out[0] - inn[0]) / (2.0 * h), (out[1] - inn[1]) / (2.0 * h)]
                })
            })
            .collect()
    }

    /// Advances both subdomains from `k` to `k + 1`.
    pub fn step(&mut self) -> Result<()> {
        let t = self.fe.time();
        let load = match self.config.mode {
            ExchangeMode::WeakNeumann => Some(fem::boundary_load_edges(
                &self.boundary_flux(),
                &self.mesh,
                &self.config.eps,
            )?),
            ExchangeMode::DirichletCopy => None,
        };

        self.fd_source.fill(self.data, t, &mut self.fd_buf);
        fdm::fd_step(&mut self.fd, &self.grid, &self.fd_buf, None)?;

        self.fe_source.fill(self.data, t, &mut self.fe_buf);
        for (node, (f, inv_eps)) in self.fe_buf.iter().zip(&self.fe_inv_eps).enumerate() {
            self.fe_rhs[fem::dof(node, 0)] = f[0] * inv_eps;
            self.fe_rhs[fem::dof(node, 1)] = f[1] * inv_eps;
        }
        match &load {
            Some(load) => fem::fe_step_weak(&mut self.fe, &self.ops, &self.fe_rhs, load)?,
            None => fem::fe_step(&mut self.fe, &self.ops, &self.fe_rhs, None)?,
        }

        exchange_fe_to_fd(&self.fe, &self.map, &mut self.fd)?;
        fdm::enforce_outer_boundary(&mut self.fd, &self.grid);
        if self.config.mode == ExchangeMode::DirichletCopy {
            exchange_fd_to_fe(&self.fd, &self.map, &mut self.fe)?;
        }
        self.check_finite()
    }

    fn check_finite(&self) -> Result<()> {
        let step = self.fe.step();
        if let Some(index) = self.fe.current().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                region: "FE",
                index,
            });
        }
        let bad = self
            .fd
            .current()
            .iter()
            .enumerate()
            .find(|(k, v)| self.grid.class(*k) != NodeClass::Hole && !(v[0].is_finite() && v[1].is_finite()));
        if let Some((index, _)) = bad {
            return Err(Error::NonFinite {
                step,
                region: "FD",
                index,
            });
        }
        Ok(())
    }
}

/// Runs the full horizon, calling `observer` after the initial level and
/// after every step. The observer may stop the run early.
pub fn run_observed<F>(
    config: RunConfig,
    data: &dyn ProblemData,
    mut observer: F,
) -> Result<SolutionHistory>
where
    F: FnMut(&HybridSolver<'_>) -> ControlFlow<()>,
{
    let stride = config.stride;
    let mut solver = HybridSolver::new(config, data)?;
    let mut history = SolutionHistory {
        level: solver.config.level,
        tau: solver.config.tau,
        snapshots: Vec::new(),
    };
    let record = |solver: &HybridSolver<'_>, history: &mut SolutionHistory| {
        let k = solver.step_index();
        let due = match stride {
            Some(s) => s > 0 && k % s == 0,
            None => k == solver.steps(),
        };
        if due {
            history.snapshots.push(solver.snapshot());
        }
    };

    record(&solver, &mut history);
    if observer(&solver).is_break() {
        return Ok(history);
    }
    while !solver.is_finished() {
        solver.step()?;
        record(&solver, &mut history);
        if observer(&solver).is_break() {
            break;
        }
    }
    Ok(history)
}

pub fn run(config: RunConfig, data: &dyn ProblemData) -> Result<SolutionHistory> {
    run_observed(config, data, |_| ControlFlow::Continue(()))
}
