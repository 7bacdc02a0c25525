//! Reference implementations shared by the integration tests. Nothing here
//! calls into the solver's analytic source or stepping code.

#![allow(dead_code)]

use std::f64::consts::PI;

use fefd::ProblemData;

/// Permittivity written out independently of the library.
pub fn eps_ref(m: Option<u32>, x: f64, y: f64) -> f64 {
    match m {
        None => 1.0,
        Some(m) => {
            if (0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y) {
                1.0 + (PI * (2.0 * x - 0.5)).sin().powi(m as i32) * (PI * (2.0 * y - 0.5)).sin().powi(m as i32)
            } else {
                1.0
            }
        }
    }
}

/// `E(x, y, t)` from the trigonometric-product form.
pub fn field_ref(m: Option<u32>, x: f64, y: f64, t: f64) -> [f64; 2] {
    let e = eps_ref(m, x, y);
    let s = t * t / 2.0;
    [
        2.0 * PI * (PI * x).sin().powi(2) * (PI * y).cos() * (PI * y).sin() * s / e,
        -2.0 * PI * (PI * y).sin().powi(2) * (PI * x).cos() * (PI * x).sin() * s / e,
    ]
}

fn d1(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

fn d2(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(-2.0 * h) + 16.0 * f(-h) - 30.0 * f(0.0) + 16.0 * f(h) - f(2.0 * h)) / (12.0 * h * h)
}

/// `F = ε∂ₜₜE + ∇(∇·E) − ΔE − ∇(∇·(εE))` with fourth-order central
/// differences in space and the exact `∂ₜₜ` (the field is `t²/2` times a
/// profile).
pub fn source_oracle(m: Option<u32>, x: f64, y: f64, t: f64, h: f64) -> [f64; 2] {
    let e = |x: f64, y: f64| field_ref(m, x, y, t);
    let de = |x: f64, y: f64| {
        let v = field_ref(m, x, y, t);
        let w = eps_ref(m, x, y);
        [w * v[0], w * v[1]]
    };
    let xx = |f: &dyn Fn(f64, f64) -> [f64; 2], a: usize| d2(|s| f(x + s, y)[a], h);
    let yy = |f: &dyn Fn(f64, f64) -> [f64; 2], a: usize| d2(|s| f(x, y + s)[a], h);
    let xy = |f: &dyn Fn(f64, f64) -> [f64; 2], a: usize| d1(|s| d1(|r| f(x + s, y + r)[a], h), h);

    let profile = field_ref(m, x, y, 1.0).map(|v| 2.0 * v);
    let w = eps_ref(m, x, y);
    // ∇(∇·E) − ΔE reduces to (∂xy E2 − ∂yy E1, ∂xy E1 − ∂xx E2).
    let curl_curl = [xy(&e, 1) - yy(&e, 0), xy(&e, 0) - xx(&e, 1)];
    let grad_div_eps = [xx(&de, 0) + xy(&de, 1), xy(&de, 0) + yy(&de, 1)];
    [
        w * profile[0] + curl_curl[0] - grad_div_eps[0],
        w * profile[1] + curl_curl[1] - grad_div_eps[1],
    ]
}

/// Whole-lattice five-point leapfrog with the problem's lattice source and
/// the Taylor start, on `(n+1)²` nodes with `n = 2^(l+1)`. Returns all
/// levels `0..=steps`, node index `j (n+1) + i`.
pub fn monolithic_fd(level: u32, tau: f64, steps: usize, data: &dyn ProblemData) -> Vec<Vec<[f64; 2]>> {
    let n = 1usize << (level + 1);
    let side = n + 1;
    let h = 1.0 / n as f64;
    let xy = |k: usize| [(k % side) as f64 * h, (k / side) as f64 * h];
    let interior = |k: usize| {
        let (i, j) = (k % side, k / side);
        i > 0 && i < n && j > 0 && j < n
    };
    let accel = |u: &[[f64; 2]], k: usize, t: f64| {
        let f = data.lattice_source(xy(k), t);
        let mut a = [0.0; 2];
        for c in 0..2 {
            let lap = (u[k + 1][c] + u[k - 1][c] + u[k + side][c] + u[k - side][c] - 4.0 * u[k][c]) / (h * h);
            a[c] = lap + f[c];
        }
        a
    };

    let mut levels = Vec::with_capacity(steps + 1);
    let e0: Vec<[f64; 2]> = (0..side * side)
        .map(|k| if interior(k) { data.initial_value(xy(k)) } else { [0.0; 2] })
        .collect();
    let mut e1 = vec![[0.0; 2]; side * side];
    for k in (0..side * side).filter(|&k| interior(k)) {
        let v = data.initial_velocity(xy(k));
        let a = accel(&e0, k, 0.0);
        for c in 0..2 {
            e1[k][c] = e0[k][c] + tau * v[c] + 0.5 * tau * tau * a[c];
        }
    }
    levels.push(e0);
    levels.push(e1);
    for step in 1..steps {
        let (prev, cur) = (&levels[step - 1], &levels[step]);
        let mut next = vec![[0.0; 2]; side * side];
        for k in (0..side * side).filter(|&k| interior(k)) {
            let a = accel(cur, k, step as f64 * tau);
            for c in 0..2 {
                next[k][c] = 2.0 * cur[k][c] - prev[k][c] + tau * tau * a[c];
            }
        }
        levels.push(next);
    }
    levels
}
