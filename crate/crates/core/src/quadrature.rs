//! Edge-midpoint rule on triangles (exact for quadratics) and P1 helpers.

use crate::geometry::{signed_area, Point};

/// Quadrature points of the edge-midpoint rule; each carries weight `area / 3`.
pub fn midpoints(p: &[Point; 3]) -> [Point; 3] {
    let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    [mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0])]
}

/// Barycentric coordinates of the three midpoints, in the order of
/// [`midpoints`]: row `q` holds `(φ0, φ1, φ2)` at point `q`.
pub const MIDPOINT_BARY: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Constant gradients of the three P1 hat functions on a triangle.
pub fn p1_gradients(p: &[Point; 3]) -> [[f64; 2]; 3] {
    let area2 = 2.0 * signed_area(p[0], p[1], p[2]);
    let mut g = [[0.0; 2]; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        let (b, c) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        *gk = [(b[1] - c[1]) / area2, (c[0] - b[0]) / area2];
    }
    g
}

/// Two-point Gauss rule on `[0, 1]`: abscissae for the first endpoint's
/// hat function, each with weight ½.
pub const GAUSS2_EDGE: [f64; 2] = [0.788_675_134_594_812_9, 0.211_324_865_405_187_1];
