mod common;

use fefd::coupling::{exchange_fd_to_fe, exchange_fe_to_fd};
use fefd::fdm::{fd_step, FdState};
use fefd::fem::{assemble, FeState, StiffnessForm};
use fefd::geometry::{build_fd_grid, build_fe_mesh, build_overlap_maps, DomainSpec, NodeClass};
use fefd::sparse::{mul_vec, row_sum};
use fefd::verification::ManufacturedCase;
use fefd::EpsModel;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fd_step_is_linear(
        seed in prop::collection::vec(-1.0f64..1.0, 6),
        alpha in -3.0f64..3.0,
    ) {
        let grid = build_fd_grid(DomainSpec::new(3).unwrap()).unwrap();
        let field = |k: usize, s: &[f64]| {
            let [x, y] = grid.coord_of(k);
            [s[0] * x * (1.0 - x) + s[1] * y, s[2] * x * y + s[3]]
        };
        let make = |s: &[f64]| -> Vec<[f64; 2]> { (0..grid.len()).map(|k| field(k, s)).collect() };
        let a = make(&seed);
        let b = make(&seed.iter().rev().copied().collect::<Vec<_>>());
        let combo: Vec<[f64; 2]> = a.iter().zip(&b).map(|(p, q)| [p[0] + alpha * q[0], p[1] + alpha * q[1]]).collect();
        let tau = 1e-3;
        let step = |prev: &[[f64; 2]], cur: &[[f64; 2]], src: &[[f64; 2]]| {
            let mut s = FdState::new(prev.to_vec(), cur.to_vec(), tau).unwrap();
            fd_step(&mut s, &grid, src, None).unwrap();
            s.current().to_vec()
        };
        let ra = step(&a, &b, &a);
        let rb = step(&b, &a, &b);
        let rc = step(&combo, &b.iter().zip(&a).map(|(p, q)| [p[0] + alpha * q[0], p[1] + alpha * q[1]]).collect::<Vec<_>>(), &combo);
        for k in grid.nodes_of_class(NodeClass::Active) {
            for c in 0..2 {
                let expected = ra[k][c] + alpha * rb[k][c];
                prop_assert!((rc[k][c] - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn exact_field_has_swap_symmetry(x in 0.0f64..1.0, y in 0.0f64..1.0, t in 0.0f64..1.0, m in prop::sample::select(vec![2u32, 4, 6, 8])) {
        let case = ManufacturedCase::sine(m).unwrap();
        let a = case.exact_field([x, y], t);
        let b = case.exact_field([y, x], t);
        prop_assert!((a[0] + b[1]).abs() <= 1e-14);
        let c = common::field_ref(Some(m), x, y, t);
        prop_assert!((a[0] - c[0]).abs() <= 1e-13 && (a[1] - c[1]).abs() <= 1e-13);
    }

    #[test]
    fn permittivity_stays_in_range(x in 0.0f64..=1.0, y in 0.0f64..=1.0, m in prop::sample::select(vec![2u32, 4, 6, 8])) {
        let eps = EpsModel::sine(m).unwrap();
        let v = eps.value([x, y]);
        prop_assert!((1.0..=2.0).contains(&v));
        if !((0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y)) {
            prop_assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn exchanges_are_idempotent(values in prop::collection::vec(-5.0f64..5.0, 162)) {
        let spec = DomainSpec::new(3).unwrap();
        let grid = build_fd_grid(spec).unwrap();
        let mesh = build_fe_mesh(spec);
        let map = build_overlap_maps(&grid, &mesh).unwrap();
        let mut fe = FeState::new(values.clone(), values.clone(), 0.1).unwrap();
        let mut fd = FdState::zeros(&grid, 0.1);
        exchange_fe_to_fd(&fe, &map, &mut fd).unwrap();
        exchange_fd_to_fe(&fd, &map, &mut fe).unwrap();
        let once = (fe.current().to_vec(), fd.current().to_vec());
        exchange_fe_to_fd(&fe, &map, &mut fd).unwrap();
        exchange_fd_to_fe(&fd, &map, &mut fe).unwrap();
        prop_assert_eq!(once.0, fe.current().to_vec());
        prop_assert_eq!(once.1, fd.current().to_vec());
    }
}

#[test]
fn geometry_counts_and_pairings_hold_at_every_level() {
    for level in 2..=7u32 {
        let spec = DomainSpec::new(level).unwrap();
        let grid = build_fd_grid(spec).unwrap();
        let mesh = build_fe_mesh(spec);
        let map = build_overlap_maps(&grid, &mesh).unwrap();
        let c = 1usize << level;
        assert_eq!(mesh.triangle_count(), 2 * c * c);
        assert_eq!(mesh.node_count(), (c + 1) * (c + 1));
        assert_eq!(map.blue.len(), 4 * c);
        assert_eq!(map.green.len(), 4 * (c - 2));
        let hole = grid.nodes_of_class(NodeClass::Hole).count();
        assert_eq!(hole, (c - 3) * (c - 3));
        let total: f64 = mesh.areas().iter().sum();
        assert!((total - 0.25).abs() < 1e-13);
        for &(n, k) in &map.blue {
            assert_eq!(mesh.node(n), grid.coord_of(k));
        }
        for &(k, n) in &map.green {
            assert_eq!(mesh.node(n), grid.coord_of(k));
        }
    }
}

#[test]
fn assembled_operators_annihilate_constants_away_from_the_ring() {
    for m in [2, 8] {
        let eps = EpsModel::sine(m).unwrap();
        let mesh = build_fe_mesh(DomainSpec::new(4).unwrap());
        let ops = assemble(&mesh, &eps, StiffnessForm::EpsMass).unwrap();
        let ones = vec![1.0; ops.dofs()];
        let mut out = vec![0.0; ops.dofs()];
        mul_vec(&ops.g1, &ones, &mut out);
        for n in (0..mesh.node_count()).filter(|&n| !mesh.is_boundary(n)) {
            assert!(out[2 * n].abs() < 1e-10 && out[2 * n + 1].abs() < 1e-10);
        }
        for n in 0..mesh.node_count() {
            assert!((row_sum(&ops.mass, n) - ops.lumped[n]).abs() < 1e-15);
        }
    }
}
