use nalgebra::{DMatrix, Matrix4};
use ncgeom::engine::{curvature_tensor, koszul_levi_civita, torsion, CentreMetric, Connection};
use ncgeom::exec::pairwise_sum;
use ncgeom::lattice::TorusGrid;
use ncgeom::liealg::sl_basis;
use ncgeom::palatini::{critical_connection, ricci_blocks, BlockMetric};
use ncgeom::ring::ScalarFrame;
use ncgeom::scalar::Wide;
use proptest::prelude::*;

fn matrix4() -> impl Strategy<Value = Matrix4<f64>> {
    prop::array::uniform16(-1.0..1.0f64).prop_map(|a| Matrix4::from_column_slice(&a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn critical_connection_is_ricci_flat(g11 in matrix4(), g12 in matrix4(), g22 in matrix4()) {
        if let Ok(g) = BlockMetric::new(g11, g12, g22) {
            prop_assume!(g.condition() < 1e6);
            let conn = critical_connection::<Wide>(&g).unwrap();
            let ric = ricci_blocks(&conn).unwrap();
            let worst = ric.iter().flatten().flat_map(|m| m.iter()).fold(0.0_f64, |a, x| a.max(f64::from(*x).abs()));
            prop_assert!(worst < 1e-10);
        }
    }

    #[test]
    fn torsion_and_curvature_antisymmetry(vals in prop::collection::vec(-2.0..2.0f64, 27)) {
        let frame = ScalarFrame::from_basis(&sl_basis(2).unwrap()).unwrap();
        let conn = Connection::from_fn(3, |k, j, i| vals[(k * 3 + j) * 3 + i]);
        let t = torsion(&conn, &frame).unwrap();
        let r = curvature_tensor(&conn, &frame).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    prop_assert!((t.get(a, b, c) + t.get(a, c, b)).abs() < 1e-14);
                    for d in 0..3 {
                        prop_assert!((r.get(a, b, c, d) + r.get(a, b, d, c)).abs() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn levi_civita_is_torsion_free(vals in prop::collection::vec(-1.0..1.0f64, 9)) {
        let a = DMatrix::from_row_slice(3, 3, &vals);
        let g = &a * a.transpose() + DMatrix::identity(3, 3);
        let frame = ScalarFrame::from_basis(&sl_basis(2).unwrap()).unwrap();
        let lc = koszul_levi_civita(&CentreMetric::constant(&g), &frame).unwrap();
        let t = torsion(&lc, &frame).unwrap();
        prop_assert!(t.entries().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn grid_shift_round_trips(m in 1usize..=3, n in 8usize..12, p_seed in 0usize..10_000, axis_seed in 0usize..3, off in -3isize..=3) {
        let grid = TorusGrid::new(m, n).unwrap();
        let p = p_seed % grid.len();
        let axis = axis_seed % m;
        prop_assert_eq!(grid.shifted(grid.shifted(p, axis, off), axis, -off), p);
    }

    #[test]
    fn pairwise_sum_is_accurate(vals in prop::collection::vec(-1e3..1e3f64, 0..500)) {
        let naive: f64 = vals.iter().sum();
        let scale: f64 = vals.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&vals) - naive).abs() < 1e-12 * scale);
    }
}
