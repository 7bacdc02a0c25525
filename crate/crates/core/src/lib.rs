//! Hybrid finite-element / finite-difference time-domain solver for the
//! two-dimensional non-conductive Maxwell system
//!
//! ```text
//! ε ∂ₜₜE + ∇(∇·E) − ΔE − ∇(∇·(εE)) = F   in Ω × (0, T),
//! E = 0 on ∂Ω,
//! ```
//!
//! on the unit square. A P1 finite-element island on `[0.25, 0.75]²` carries
//! the variable permittivity; the rest of the square, where `ε = 1`, is
//! advanced with the five-point wave scheme. The two meshes overlap on a
//! two-ring structured layer through which nodal values are exchanged every
//! step.
//!
//! The [`verification`] module holds a manufactured solution and the norms
//! used to measure convergence; [`cli`] drives convergence studies.

pub mod cli;
pub mod coupling;
pub mod error;
pub mod fdm;
pub mod fem;
pub mod geometry;
pub mod material;
pub mod quadrature;
pub mod sparse;
pub mod verification;

pub use coupling::{run, ExchangeMode, ProblemData, RunConfig, SolutionHistory, StartRule};
pub use error::{Error, Result};
pub use fem::StiffnessForm;
pub use geometry::{DomainSpec, Point};
pub use material::EpsModel;
pub use verification::ManufacturedCase;
