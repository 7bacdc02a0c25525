mod common;

use common::{field_ref, source_oracle};
use fefd::verification::{divergence_check, ManufacturedCase};
use fefd::EpsModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 2.5e-4;

/// Random space-time points away from the lines where `ε` loses smoothness.
fn samples(seed: u64, count: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clear = |s: f64| (s - 0.25).abs() > 3.0 * STEP && (s - 0.75).abs() > 3.0 * STEP;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (x, y, t) = (rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99), rng.gen_range(0.0..1.0));
        if clear(x) && clear(y) {
            out.push((x, y, t));
        }
    }
    out
}

fn max_source_error(case: &ManufacturedCase, m: Option<u32>, seed: u64) -> f64 {
    samples(seed, 1000)
        .into_iter()
        .map(|(x, y, t)| {
            let f = case.source_term([x, y], t);
            let g = source_oracle(m, x, y, t, STEP);
            (f[0] - g[0]).abs().max((f[1] - g[1]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn analytic_source_matches_difference_oracle() {
    for m in [2, 4, 6, 8] {
        let err = max_source_error(&ManufacturedCase::sine(m).unwrap(), Some(m), m as u64);
        assert!(err <= 1e-6, "m = {m}: max deviation {err:e}");
    }
    let err = max_source_error(&ManufacturedCase::new(EpsModel::ConstantOne), None, 99);
    assert!(err <= 1e-6, "ε ≡ 1: max deviation {err:e}");
}

#[test]
fn source_in_free_space_is_wave_operator() {
    let case = ManufacturedCase::sine(4).unwrap();
    let f = case.source_term([0.1, 0.1], 0.25);
    let g = source_oracle(Some(4), 0.1, 0.1, 0.25, STEP);
    assert!((f[0] - g[0]).abs() < 1e-6 && (f[1] - g[1]).abs() < 1e-6);
    // ∂ₜₜE − ΔE with ε = 1 from the same stencils.
    let d2 = |a: usize, dx: f64, dy: f64| {
        let e = |s: f64| field_ref(None, 0.1 + s * dx, 0.1 + s * dy, 0.25)[a];
        (-e(-2.0 * STEP) + 16.0 * e(-STEP) - 30.0 * e(0.0) + 16.0 * e(STEP) - e(2.0 * STEP)) / (12.0 * STEP * STEP)
    };
    let profile = field_ref(None, 0.1, 0.1, 1.0);
    for a in 0..2 {
        let reduced = 2.0 * profile[a] - d2(a, 1.0, 0.0) - d2(a, 0.0, 1.0);
        assert!((f[a] - reduced).abs() < 1e-6);
    }
}

#[test]
fn lattice_source_equals_source_off_the_interface() {
    let case = ManufacturedCase::sine(2).unwrap();
    use fefd::ProblemData;
    for (x, y, t) in samples(5, 200) {
        assert_eq!(case.lattice_source([x, y], t), case.source([x, y], t));
    }
}

#[test]
fn source_is_affine_in_the_time_profile() {
    for m in [2, 8] {
        let case = ManufacturedCase::sine(m).unwrap();
        for (x, y, t) in samples(11, 200) {
            let f0 = case.source_term([x, y], 0.0);
            let f1 = case.source_term([x, y], 1.0);
            let ft = case.source_term([x, y], t);
            for a in 0..2 {
                let expected = f0[a] + t * t * (f1[a] - f0[a]);
                assert!((ft[a] - expected).abs() < 1e-10 * (1.0 + f1[a].abs()));
            }
        }
    }
}

#[test]
fn divergence_of_eps_e_vanishes() {
    for m in [2, 4, 6, 8] {
        let case = ManufacturedCase::sine(m).unwrap();
        let max = divergence_check(&case, 1000, 0.25);
        assert!(max <= 1e-6, "m = {m}: {max:e}");
    }
    // In the FD region ε = 1, so ∇·E itself vanishes.
    let free = ManufacturedCase::new(EpsModel::ConstantOne);
    let varying = ManufacturedCase::sine(2).unwrap();
    let d = 1e-5;
    for (x, y, _) in samples(17, 500) {
        if (0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y) {
            continue;
        }
        let e = |x: f64, y: f64| varying.exact_field([x, y], 0.25);
        let div = (e(x + d, y)[0] - e(x - d, y)[0] + e(x, y + d)[1] - e(x, y - d)[1]) / (2.0 * d);
        assert!(div.abs() <= 1e-6);
        assert_eq!(e(x, y), free.exact_field([x, y], 0.25));
    }
}
