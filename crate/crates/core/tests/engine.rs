use nalgebra::DMatrix;
use ncgeom::engine::*;
use ncgeom::liealg::{sl_basis, structure_constants, StructureTensor};
use ncgeom::ring::{Frame, ScalarFrame};
use ncgeom::sampling::{random_symmetric_metric, rng};

fn sl_frame(n: usize) -> ScalarFrame {
    ScalarFrame::from_basis(&sl_basis(n).unwrap()).unwrap()
}

fn max_diff(a: &Connection<f64>, b: &Connection<f64>) -> f64 {
    a.entries().iter().zip(b.entries()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn koszul_agrees_with_torsion_part_formula() {
    for n in [2, 3] {
        let frame = sl_frame(n);
        let d = frame.dim();
        let mut r = rng(50 + n as u64, 0);
        for _ in 0..50 {
            let g = random_symmetric_metric(&mut r, d, 1e4);
            let gm = CentreMetric::constant(&g);
            let lc = koszul_levi_civita(&gm, &frame).unwrap();
            let direct = torsion_part_formula(&g, frame.structure()).unwrap();
            let scale = lc.entries().iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            assert!(max_diff(&lc, &direct) < 1e-10 * scale, "n={n}");
            let t = torsion(&lc, &frame).unwrap();
            assert!(t.entries().iter().all(|x| x.abs() < 1e-10 * scale));
            assert!(centre_compat_residual(&gm, &lc, &frame).unwrap() < 1e-10 * scale);
        }
    }
}

#[test]
fn curvature_is_antisymmetric_in_last_pair() {
    let frame = sl_frame(3);
    let g = random_symmetric_metric(&mut rng(60, 0), 8, 1e3);
    let lc = koszul_levi_civita(&CentreMetric::constant(&g), &frame).unwrap();
    let r = curvature_tensor(&lc, &frame).unwrap();
    for m in 0..8 {
        for k in 0..8 {
            for i in 0..8 {
                for j in 0..8 {
                    assert!((r.get(m, k, i, j) + r.get(m, k, j, i)).abs() < 1e-14);
                }
            }
        }
    }
}

#[cfg(feature = "parallel")]
#[test]
fn sequential_and_parallel_curvature_agree_bitwise() {
    use ncgeom::Exec;
    let frame = sl_frame(3);
    let g = random_symmetric_metric(&mut rng(61, 0), 8, 1e3);
    let lc = koszul_levi_civita(&CentreMetric::constant(&g), &frame).unwrap();
    let a = curvature_tensor_with(&lc, &frame, Exec::Sequential).unwrap();
    let b = curvature_tensor_with(&lc, &frame, Exec::Parallel).unwrap();
    assert_eq!(a.entries(), b.entries());
}

#[test]
fn constant_connection_on_abelian_frame() {
    // With zero brackets and zero action only the quadratic terms remain.
    let frame = ScalarFrame::new(2, StructureTensor::zeros(2));
    let conn = Connection::from_fn(2, |k, j, i| (1 + k + 2 * j + 4 * i) as f64);
    let r = curvature_tensor(&conn, &frame).unwrap();
    let g = |k: usize, j: usize, i: usize| *conn.get(k, j, i);
    for m in 0..2 {
        for k in 0..2 {
            let expect: f64 = (0..2).map(|n| g(m, n, 1) * g(n, k, 0) - g(m, n, 0) * g(n, k, 1)).sum();
            assert_eq!(*r.get(m, k, 1, 0), expect);
        }
    }
    let t = torsion(&conn, &frame).unwrap();
    assert_eq!(*t.get(0, 0, 1), g(0, 1, 0) - g(0, 0, 1));
}

#[test]
fn abelian_frame_levi_civita_vanishes() {
    let frame = ScalarFrame::new(2, StructureTensor::zeros(3));
    let g = random_symmetric_metric(&mut rng(62, 0), 3, 1e3);
    let lc = koszul_levi_civita(&CentreMetric::constant(&g), &frame).unwrap();
    assert!(lc.entries().iter().all(|x| *x == 0.0));
}

#[test]
fn degenerate_metric_rejected() {
    let frame = sl_frame(2);
    let g = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(koszul_levi_civita(&CentreMetric::constant(&g), &frame).is_err());
    let asym = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(koszul_levi_civita(&CentreMetric::constant(&asym), &frame).is_err());
}

#[test]
fn dimension_mismatch_is_an_error() {
    let frame = sl_frame(2);
    let conn = Connection::filled(2, 0.0);
    assert!(curvature_tensor(&conn, &frame).is_err());
    let _ = structure_constants(&sl_basis(2).unwrap()).unwrap();
}
