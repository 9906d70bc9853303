//! Einstein action for `M_n(R)` with centre-valued metrics: the literal
//! closed-form expression and the full connection→curvature→trace pipeline.

use nalgebra::DMatrix;

use crate::engine::{
    curvature_tensor, invert_centre_metric, invert_checked, koszul_levi_civita, ricci, CentreMetric,
    Connection,
};
use crate::error::{GeomError, Result};
use crate::liealg::{KillingMatrix, StructureTensor};
use crate::ring::{CentreRing, CoefficientRing, Elem, Frame};

/// Factor relating the literal closed-form expression to the action produced
/// by the pipeline: `pipeline = CLOSED_FORM_NORMALIZATION · closed_form`.
///
/// The closed form adds the trace of the Killing form against `g⁻¹` to half
/// the squared bracket norm; the pipeline yields exactly half of both terms,
/// for every metric and every `n`. No rescaling of `K` alone reconciles the
/// two, so the constant multiplies the whole expression.
pub const CLOSED_FORM_NORMALIZATION: f64 = 0.5;

/// Matrix inverse of a constant symmetric metric.
pub fn inverse_metric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_det(g)?;
    invert_checked(g).map(|(inv, _)| inv)
}

fn check_det(g: &DMatrix<f64>) -> Result<f64> {
    let d = g.nrows();
    if g.ncols() != d || d == 0 {
        return Err(GeomError::InvalidDimension("metric must be square and non-empty".into()));
    }
    let scale = g.amax();
    let det = g.clone().lu().determinant();
    if !(det.abs() > 1e-12 * scale.powi(d as i32)) {
        return Err(GeomError::DegenerateMetric(format!("|det g| = {:.3e}", det.abs())));
    }
    Ok(det)
}

/// `g^{jp} (K_{jp} + ½ g^{il} g_{rk} c^r_{lp} c^k_{ij}) sqrt|det g|`, as written.
pub fn action_closed_form(g: &DMatrix<f64>, c: &StructureTensor, k: &KillingMatrix) -> Result<f64> {
    let d = c.dim();
    if g.nrows() != d || k.0.nrows() != d {
        return Err(GeomError::DimensionMismatch {
            expected: d,
            found: g.nrows(),
        });
    }
    let det = check_det(g)?;
    let ginv = inverse_metric(g)?;
    // gc[(k, l, p)] = g_{rk} c^r_{lp}
    let mut gc = vec![0.0; d * d * d];
    for kk in 0..d {
        for l in 0..d {
            for p in 0..d {
                gc[(kk * d + l) * d + p] = (0..d).map(|r| g[(r, kk)] * c.get(r, l, p)).sum();
            }
        }
    }
    let mut total = 0.0;
    for j in 0..d {
        for p in 0..d {
            let w = ginv[(j, p)];
            if w == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for i in 0..d {
                for l in 0..d {
                    let gil = ginv[(i, l)];
                    if gil == 0.0 {
                        continue;
                    }
                    for kk in 0..d {
                        inner += gil * gc[(kk * d + l) * d + p] * c.get(kk, i, j);
                    }
                }
            }
            total += w * (k.0[(j, p)] + 0.5 * inner);
        }
    }
    Ok(total * det.abs().sqrt())
}

/// The closed form scaled onto the pipeline's normalization.
pub fn action_closed_form_normalized(
    g: &DMatrix<f64>,
    c: &StructureTensor,
    k: &KillingMatrix,
) -> Result<f64> {
    Ok(CLOSED_FORM_NORMALIZATION * action_closed_form(g, c, k)?)
}

/// Ricci scalar density `sqrt|det g| · g^{jk} R_{kj}` as a ring element.
pub fn scalar_curvature_density<F>(
    g: &CentreMetric<Elem<F>>,
    conn: &Connection<Elem<F>>,
    frame: &F,
) -> Result<Elem<F>>
where
    F: Frame,
    F::Ring: CentreRing,
{
    let ring = frame.ring();
    let curv = curvature_tensor(conn, frame)?;
    let ric = ricci(ring, &curv);
    let (ginv, vol) = invert_centre_metric(ring, g)?;
    let d = frame.dim();
    let mut s = ring.zero();
    for j in 0..d {
        for k in 0..d {
            ring.add_mul(&mut s, ginv.get(j, k), ric.get(k, j));
        }
    }
    Ok(ring.mul(&vol, &s))
}

/// `E = −tau · Tr(sqrt|det g| · g^{jk} R_{kj})`, where `Tr` is the ring's
/// trace to the reals. With `tau = 1/n` on `M_n(R)` this is
/// `−sqrt|det g| g^{jk} R_{kj}`.
pub fn action_pipeline<F>(
    g: &CentreMetric<Elem<F>>,
    conn: &Connection<Elem<F>>,
    frame: &F,
    tau_normalizer: f64,
) -> Result<f64>
where
    F: Frame,
    F::Ring: CentreRing,
{
    let density = scalar_curvature_density(g, conn, frame)?;
    Ok(-tau_normalizer * frame.ring().trace(&density))
}

/// Pipeline evaluated at the Levi–Civita connection of `g`.
pub fn levi_civita_action<F>(g: &CentreMetric<Elem<F>>, frame: &F, tau_normalizer: f64) -> Result<f64>
where
    F: Frame,
    F::Ring: CentreRing,
{
    let conn = koszul_levi_civita(g, frame)?;
    action_pipeline(g, &conn, frame, tau_normalizer)
}

/// `Mᵀ B M`: a bilinear form (metric or Killing form) after the basis
/// change `E'_i = Σ_a M_{ai} E_a`.
pub fn transform_bilinear(b: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    m.transpose() * b * m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{killing_form, sl_basis, structure_constants};
    use crate::ring::ScalarFrame;

    #[test]
    fn inverse_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(inverse_metric(&id).unwrap(), id);
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5]));
        let inv = inverse_metric(&g).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15 && (inv[(1, 1)] - 2.0).abs() < 1e-15);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(inverse_metric(&singular), Err(GeomError::DegenerateMetric(_))));
    }

    #[test]
    fn abelian_closed_form_vanishes() {
        let c = StructureTensor::zeros(2);
        let k = killing_form(&c);
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_eq!(action_closed_form(&g, &c, &k).unwrap(), 0.0);
    }

    #[test]
    fn zero_connection_on_abelian_frame() {
        let frame = ScalarFrame::new(2, StructureTensor::zeros(2));
        let g = CentreMetric::constant(&DMatrix::identity(2, 2));
        let conn = Connection::filled(2, 0.0);
        assert_eq!(action_pipeline(&g, &conn, &frame, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn killing_metric_on_sl2() {
        let basis = sl_basis(2).unwrap();
        let c = structure_constants(&basis).unwrap();
        let k = killing_form(&c);
        let frame = ScalarFrame::from_basis(&basis).unwrap();
        let pipeline = levi_civita_action(&CentreMetric::constant(&k.0), &frame, 0.5).unwrap();
        let closed = action_closed_form_normalized(&k.0, &c, &k).unwrap();
        assert!((pipeline - closed).abs() < 1e-12 * closed.abs());
    }

    #[test]
    fn degenerate_metric_is_an_error_not_nan() {
        let basis = sl_basis(2).unwrap();
        let c = structure_constants(&basis).unwrap();
        let k = killing_form(&c);
        let mut g = DMatrix::identity(3, 3);
        g[(2, 2)] = 1e-300;
        assert!(action_closed_form(&g, &c, &k).is_err());
        let frame = ScalarFrame::from_basis(&basis).unwrap();
        assert!(levi_civita_action(&CentreMetric::constant(&g), &frame, 0.5).is_err());
    }
}
