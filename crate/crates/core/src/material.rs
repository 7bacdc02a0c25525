//! Relative permittivity `ε` and its derivatives.
//!
//! `ε` lies in `[1, d]` on the FE island and equals one everywhere else,
//! in particular on both exchange rings.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Point, INNER_BOX, OUTER_BOX};

/// A user-supplied permittivity. Implementations must return `ε ≥ 1`,
/// equal to one outside the inner box, and consistent derivatives.
pub trait Permittivity: Send + Sync + fmt::Debug {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> [f64; 2];
    fn hessian(&self, p: Point) -> [[f64; 2]; 2];
    /// `sup |ε − 1|` over the domain.
    fn max_excess(&self) -> f64;
}

#[derive(Debug, Clone)]
pub enum EpsModel {
    /// `ε ≡ 1`.
    ConstantOne,
    /// `1 + sin^m(π(2x−½))·sin^m(π(2y−½))` on the inner box, one outside.
    Sine { m: u32 },
    Custom(Arc<dyn Permittivity>),
}

fn in_inner(p: Point) -> bool {
    (INNER_BOX[0]..=INNER_BOX[1]).contains(&p[0]) && (INNER_BOX[0]..=INNER_BOX[1]).contains(&p[1])
}

pub fn in_domain(p: Point) -> bool {
    (OUTER_BOX[0]..=OUTER_BOX[1]).contains(&p[0]) && (OUTER_BOX[0]..=OUTER_BOX[1]).contains(&p[1])
}

/// `S(s) = sin^m(π(2s − ½))` and its first two derivatives.
fn sine_factor(s: f64, m: u32) -> [f64; 3] {
    use std::f64::consts::PI;
    let theta = PI * (2.0 * s - 0.5);
    let (sn, cs) = theta.sin_cos();
    let m_i = m as i32;
    let k = 2.0 * PI;
    let value = sn.powi(m_i);
    let first = k * m as f64 * sn.powi(m_i - 1) * cs;
    let second = k * k * m as f64 * ((m as f64 - 1.0) * sn.powi(m_i - 2) * cs * cs - value);
    [value, first, second]
}

impl EpsModel {
    pub fn sine(m: u32) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "permittivity exponent m must be an even integer >= 2, got {m}"
            )));
        }
        Ok(EpsModel::Sine { m })
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, EpsModel::ConstantOne)
    }

    /// Value at `p`, rejecting points outside the unit square.
    pub fn eval(&self, p: Point) -> Result<f64> {
        if !in_domain(p) {
            return Err(Error::OutsideDomain { x: p[0], y: p[1] });
        }
        Ok(self.value(p))
    }

    pub fn value(&self, p: Point) -> f64 {
        match self {
            EpsModel::ConstantOne => 1.0,
            EpsModel::Sine { m } => {
                if !in_inner(p) {
                    return 1.0;
                }
                1.0 + sine_factor(p[0], *m)[0] * sine_factor(p[1], *m)[0]
            }
            EpsModel::Custom(eps) => eps.value(p),
        }
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        match self {
            EpsModel::ConstantOne => [0.0; 2],
            EpsModel::Sine { m } => {
                if !in_inner(p) {
                    return [0.0; 2];
                }
                let (sx, sy) = (sine_factor(p[0], *m), sine_factor(p[1], *m));
                [sx[1] * sy[0], sx[0] * sy[1]]
            }
            EpsModel::Custom(eps) => eps.gradient(p),
        }
    }

    pub fn hessian(&self, p: Point) -> [[f64; 2]; 2] {
        match self {
            EpsModel::ConstantOne => [[0.0; 2]; 2],
            EpsModel::Sine { m } => {
                if !in_inner(p) {
                    return [[0.0; 2]; 2];
                }
                let (sx, sy) = (sine_factor(p[0], *m), sine_factor(p[1], *m));
                let cross = sx[1] * sy[1];
                [[sx[2] * sy[0], cross], [cross, sx[0] * sy[2]]]
            }
            EpsModel::Custom(eps) => eps.hessian(p),
        }
    }

    /// `‖ε − 1‖_∞`.
    pub fn max_excess(&self) -> f64 {
        match self {
            EpsModel::ConstantOne => 0.0,
            EpsModel::Sine { .. } => 1.0,
            EpsModel::Custom(eps) => eps.max_excess(),
        }
    }

    /// The bound `d` with `1 ≤ ε ≤ d`.
    pub fn upper_bound(&self) -> f64 {
        1.0 + self.max_excess()
    }
}

impl fmt::Display for EpsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsModel::ConstantOne => f.write_str("constant-one"),
            EpsModel::Sine { m } => write!(f, "sine(m={m})"),
            EpsModel::Custom(eps) => write!(f, "custom({eps:?})"),
        }
    }
}
