use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("refinement level {level} is too coarse for a two-layer overlap (need l >= 2)")]
    LevelTooSmall { level: u32 },

    #[error("point ({x}, {y}) lies outside the unit square")]
    OutsideDomain { x: f64, y: f64 },

    #[error("triangle {id} is degenerate (signed area {area:e})")]
    DegenerateTriangle { id: usize, area: f64 },

    #[error("FE boundary node {node} at ({x}, {y}) has no coincident FD lattice node")]
    UnpairedNode { node: usize, x: f64, y: f64 },

    #[error("FD green-ring node {index} at ({x}, {y}) has no coincident FE node")]
    UnpairedGreenNode { index: usize, x: f64, y: f64 },

    #[error("stencil at lattice node ({i}, {j}) touches an inactive hole node")]
    HoleNeighbor { i: usize, j: usize },

    #[error("boundary data mismatch: expected {expected} entries, got {got}")]
    BoundaryMismatch { expected: usize, got: usize },

    #[error("vector length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("FE state is at step {fe} but FD state is at step {fd}")]
    StepMismatch { fe: usize, fd: usize },

    #[error("time step {tau:e} exceeds the CFL limit {limit:e}")]
    CflViolation { tau: f64, limit: f64 },

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value at step {step} in {region} (dof {index})")]
    NonFinite {
        step: usize,
        region: &'static str,
        index: usize,
    },

    #[error("solution history is empty")]
    EmptyHistory,

    #[error("config error: {0}")]
    Config(String),

    #[error("run m={m}, l={level} failed: {source}")]
    Study {
        m: u32,
        level: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by the numerics rather than by the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::Study { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
