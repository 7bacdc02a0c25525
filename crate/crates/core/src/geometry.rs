//! Decomposed discretization of the unit square.
//!
//! The outer box `[0,1]²` carries a uniform finite-difference lattice; the
//! inner box `[0.25,0.75]²` carries a structured right-isoceles triangulation
//! whose nodes coincide with lattice points. The two solvers overlap on a
//! two-ring layer:
//!
//! * the **blue** ring is `∂Ω_FEM`; its values are produced by the FD scheme
//!   and copied into the FE solution,
//! * the **green** ring lies one cell inside `∂Ω_FEM`; its values are produced
//!   by the FE scheme and copied into the FD solution.
//!
//! Every coordinate is `k · h` with `h = 2^-(l+1)`, so all coordinates are
//! dyadic rationals and coincidence checks can be near-bitwise.

use std::io::{self, Write};

use crate::error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

pub const OUTER_BOX: [f64; 2] = [0.0, 1.0];
pub const INNER_BOX: [f64; 2] = [0.25, 0.75];

const MAX_LEVEL: u32 = 14;

/// Refinement level of the decomposition. The outer and inner boxes are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DomainSpec {
    level: u32,
}

impl DomainSpec {
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::InvalidDomain(format!(
                "refinement level must lie in 1..={MAX_LEVEL}, got {level}"
            )));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Physical spacing `h = 0.5 / 2^l`, shared by both discretizations.
    pub fn spacing(&self) -> f64 {
        0.5 / (1u64 << self.level) as f64
    }

    /// Lattice cells per side of the outer box.
    pub fn cells(&self) -> usize {
        1usize << (self.level + 1)
    }

    /// Mesh cells per side of the inner box.
    pub fn fe_cells(&self) -> usize {
        1usize << self.level
    }

    /// Lattice index of the inner box's lower-left corner along each axis.
    pub fn inner_offset(&self) -> usize {
        self.cells() / 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// Updated by the FD stencil.
    Active,
    /// On `∂Ω`; held at the outer boundary value.
    OuterBoundary,
    /// On the green ring; receives FE values.
    GreenBoundary,
    /// Strictly inside the green ring; never read or written.
    Hole,
}

/// Uniform lattice over the outer box with per-node classification.
#[derive(Debug, Clone)]
pub struct FdGrid {
    spec: DomainSpec,
    spacing: f64,
    cells: usize,
    classes: Vec<NodeClass>,
    green: Vec<usize>,
}

impl FdGrid {
    pub fn spec(&self) -> DomainSpec {
        self.spec
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes_per_side(&self) -> usize {
        self.cells + 1
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.cells + 1) + i
    }

    #[inline]
    pub fn ij(&self, index: usize) -> (usize, usize) {
        (index % (self.cells + 1), index / (self.cells + 1))
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> Point {
        [i as f64 * self.spacing, j as f64 * self.spacing]
    }

    pub fn coord_of(&self, index: usize) -> Point {
        let (i, j) = self.ij(index);
        self.coord(i, j)
    }

    #[inline]
    pub fn class(&self, index: usize) -> NodeClass {
        self.classes[index]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    /// Green-ring node indices, counterclockwise from the lower-left corner.
    /// Empty for a holeless lattice.
    pub fn green_nodes(&self) -> &[usize] {
        &self.green
    }

    pub fn nodes_of_class(&self, class: NodeClass) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == class)
            .map(|(k, _)| k)
    }

    pub fn has_hole(&self) -> bool {
        !self.green.is_empty()
    }

    /// Lattice over the whole box with every interior node active. Used as a
    /// single-method reference and for tests on a plain wave equation.
    pub fn monolithic(spec: DomainSpec) -> Self {
        let cells = spec.cells();
        let side = cells + 1;
        let classes = (0..side * side)
            .map(|k| {
                let (i, j) = (k % side, k / side);
                if i == 0 || j == 0 || i == cells || j == cells {
                    NodeClass::OuterBoundary
                } else {
                    NodeClass::Active
                }
            })
            .collect();
        Self {
            spec,
            spacing: spec.spacing(),
            cells,
            classes,
            green: Vec::new(),
        }
    }
}

/// Builds the lattice with the FE island carved out: green ring one cell
/// inside `∂Ω_FEM`, hole strictly inside the green ring.
pub fn build_fd_grid(spec: DomainSpec) -> Result<FdGrid> {
    if spec.level() < 2 {
        return Err(Error::LevelTooSmall {
            level: spec.level(),
        });
    }
    let mut grid = FdGrid::monolithic(spec);
    let off = spec.inner_offset();
    let (lo, hi) = (off + 1, grid.cells - off - 1);
    for j in lo..=hi {
        for i in lo..=hi {
            let k = grid.index(i, j);
            grid.classes[k] = if i == lo || i == hi || j == lo || j == hi {
                NodeClass::GreenBoundary
            } else {
                NodeClass::Hole
            };
        }
    }
    grid.green = ring_walk(lo, hi)
        .map(|(i, j)| grid.index(i, j))
        .collect();
    Ok(grid)
}

/// Visits the boundary of the index square `[lo, hi]²` counterclockwise,
/// starting at `(lo, lo)`, each node once.
fn ring_walk(lo: usize, hi: usize) -> impl Iterator<Item = (usize, usize)> {
    let bottom = (lo..hi).map(move |i| (i, lo));
    let right = (lo..hi).map(move |j| (hi, j));
    let top = (lo + 1..=hi).rev().map(move |i| (i, hi));
    let left = (lo + 1..=hi).rev().map(move |j| (lo, j));
    bottom.chain(right).chain(top).chain(left)
}

/// An edge of `∂Ω_FEM` together with the triangle that owns it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub triangle: usize,
    pub normal: [f64; 2],
    pub length: f64,
}

/// Structured triangulation of the inner box.
#[derive(Debug, Clone)]
pub struct FeMesh {
    spec: DomainSpec,
    spacing: f64,
    cells: usize,
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    boundary_nodes: Vec<usize>,
    boundary_edges: Vec<BoundaryEdge>,
}

impl FeMesh {
    pub fn spec(&self) -> DomainSpec {
        self.spec
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes_per_side(&self) -> usize {
        self.cells + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Point {
        self.nodes[id]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_coords(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Nodes on `∂Ω_FEM`, counterclockwise from the lower-left corner.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    #[inline]
    pub fn local_index(&self, i: usize, j: usize) -> usize {
        j * (self.cells + 1) + i
    }

    /// Local `(i, j)` of a node within the inner box.
    #[inline]
    pub fn local_ij(&self, id: usize) -> (usize, usize) {
        (id % (self.cells + 1), id / (self.cells + 1))
    }

    /// Global lattice `(i, j)` of a node.
    pub fn lattice_ij(&self, id: usize) -> (usize, usize) {
        let (i, j) = self.local_ij(id);
        let off = self.spec.inner_offset();
        (i + off, j + off)
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        let (i, j) = self.local_ij(id);
        i == 0 || j == 0 || i == self.cells || j == self.cells
    }
}

/// Splits every lattice square of the inner box along its (+1,+1) diagonal.
pub fn build_fe_mesh(spec: DomainSpec) -> FeMesh {
    let h = spec.spacing();
    let cells = spec.fe_cells();
    let side = cells + 1;
    let off = spec.inner_offset();

    let nodes: Vec<Point> = (0..side * side)
        .map(|k| {
            let (i, j) = (k % side + off, k / side + off);
            [i as f64 * h, j as f64 * h]
        })
        .collect();

    let id = |i: usize, j: usize| j * side + i;
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let areas = triangles
        .iter()
        .map(|&[a, b, c]| signed_area(nodes[a], nodes[b], nodes[c]))
        .collect();

    let boundary_nodes: Vec<usize> = ring_walk(0, cells).map(|(i, j)| id(i, j)).collect();

    // Owning triangle of each boundary edge, by construction of the split.
    let tri = |i: usize, j: usize, upper: bool| 2 * (j * cells + i) + upper as usize;
    let mut boundary_edges = Vec::with_capacity(4 * cells);
    for i in 0..cells {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(i, 0), id(i + 1, 0)],
            triangle: tri(i, 0, false),
            normal: [0.0, -1.0],
            length: h,
        });
    }
    for j in 0..cells {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(cells, j), id(cells, j + 1)],
            triangle: tri(cells - 1, j, false),
            normal: [1.0, 0.0],
            length: h,
        });
    }
    for i in (0..cells).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(i + 1, cells), id(i, cells)],
            triangle: tri(i, cells - 1, true),
            normal: [0.0, 1.0],
            length: h,
        });
    }
    for j in (0..cells).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(0, j + 1), id(0, j)],
            triangle: tri(0, j, true),
            normal: [-1.0, 0.0],
            length: h,
        });
    }

    FeMesh {
        spec,
        spacing: h,
        cells,
        nodes,
        triangles,
        areas,
        boundary_nodes,
        boundary_edges,
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Index correspondences realizing the two exchange rings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapMap {
    /// `(FE boundary node, FD lattice index)` on the blue ring.
    pub blue: Vec<(usize, usize)>,
    /// `(FD lattice index, FE node)` on the green ring.
    pub green: Vec<(usize, usize)>,
}

pub fn build_overlap_maps(grid: &FdGrid, mesh: &FeMesh) -> Result<OverlapMap> {
    if grid.spec() != mesh.spec() {
        return Err(Error::InvalidDomain(format!(
            "grid level {} and mesh level {} differ",
            grid.spec().level(),
            mesh.spec().level()
        )));
    }
    let h = grid.spacing();
    let tol = 1e-12 * h;
    let coincide = |p: Point, q: Point| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol;

    let mut blue = Vec::with_capacity(mesh.boundary_nodes().len());
    for &node in mesh.boundary_nodes() {
        let p = mesh.node(node);
        let unpaired = || Error::UnpairedNode {
            node,
            x: p[0],
            y: p[1],
        };
        let (i, j) = lattice_index_near(p, h, grid.cells()).ok_or_else(unpaired)?;
        if !coincide(p, grid.coord(i, j)) {
            return Err(unpaired());
        }
        blue.push((node, grid.index(i, j)));
    }

    let off = mesh.spec().inner_offset();
    let mut green = Vec::with_capacity(grid.green_nodes().len());
    for &index in grid.green_nodes() {
        let p = grid.coord_of(index);
        let unpaired = || Error::UnpairedGreenNode {
            index,
            x: p[0],
            y: p[1],
        };
        let (i, j) = lattice_index_near(p, h, grid.cells()).ok_or_else(unpaired)?;
        let (li, lj) = (
            i.checked_sub(off).ok_or_else(unpaired)?,
            j.checked_sub(off).ok_or_else(unpaired)?,
        );
        if li >= mesh.nodes_per_side() || lj >= mesh.nodes_per_side() {
            return Err(unpaired());
        }
        let node = mesh.local_index(li, lj);
        if !coincide(p, mesh.node(node)) {
            return Err(unpaired());
        }
        green.push((index, node));
    }

    Ok(OverlapMap { blue, green })
}

fn lattice_index_near(p: Point, h: f64, cells: usize) -> Option<(usize, usize)> {
    let i = (p[0] / h).round();
    let j = (p[1] / h).round();
    let max = cells as f64;
    if !(0.0..=max).contains(&i) || !(0.0..=max).contains(&j) {
        return None;
    }
    Some((i as usize, j as usize))
}

/// Writes `id x y` records, one per node.
pub fn write_mesh_nodes<W: Write>(mesh: &FeMesh, mut out: W) -> io::Result<()> {
    for (id, p) in mesh.nodes().iter().enumerate() {
        writeln!(out, "{id} {} {}", p[0], p[1])?;
    }
    Ok(())
}

/// Writes `id n0 n1 n2` records, one per triangle.
pub fn write_mesh_triangles<W: Write>(mesh: &FeMesh, mut out: W) -> io::Result<()> {
    for (id, [a, b, c]) in mesh.triangles().iter().enumerate() {
        writeln!(out, "{id} {a} {b} {c}")?;
    }
    Ok(())
}
