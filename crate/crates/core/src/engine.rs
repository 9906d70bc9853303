//! Connection, curvature, Ricci and torsion over a frame of derivations.
//!
//! Index conventions, fixed throughout the crate:
//!
//! * Christoffel symbols: `∇_{X_i} X_j = X_k ⊗ Γ^k_{ji}`, stored at `(k, j, i)`.
//! * Curvature: `(∇² X_k)(X_i, X_j) = X_m ⊗ R^m_{kij}`, stored at `(m, k, i, j)`.
//! * Ricci: `R_{kj} = R^i_{kij}`.
//! * Torsion: `T(X_i, X_j) = X_k ⊗ T^k_{ij}`.
//!
//! The other common convention `∇_{E_j} E_k = Γ̃^i_{jk} E_i` is the index swap
//! `Γ̃^i_{jk} = Γ^i_{kj}`; see [`Connection::swapped_lower`].

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::exec::Exec;
use crate::liealg::{condition_number, StructureTensor};
use crate::ring::{CentreRing, CoefficientRing, Elem, Frame};

/// Condition number above which a metric counts as singular.
pub const MAX_METRIC_CONDITION: f64 = 1e12;

/// Christoffel symbols `Γ^k_{ji}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection<E> {
    d: usize,
    gamma: Vec<E>,
}

impl<E: Clone> Connection<E> {
    pub fn filled(d: usize, value: E) -> Self {
        Self {
            d,
            gamma: vec![value; d * d * d],
        }
    }

    /// Builds from `f(k, j, i) = Γ^k_{ji}`.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize) -> E) -> Self {
        let mut gamma = Vec::with_capacity(d * d * d);
        for k in 0..d {
            for j in 0..d {
                for i in 0..d {
                    gamma.push(f(k, j, i));
                }
            }
        }
        Self { d, gamma }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize, i: usize) -> &E {
        &self.gamma[(k * self.d + j) * self.d + i]
    }

    #[inline]
    pub fn get_mut(&mut self, k: usize, j: usize, i: usize) -> &mut E {
        &mut self.gamma[(k * self.d + j) * self.d + i]
    }

    pub fn set(&mut self, k: usize, j: usize, i: usize, value: E) {
        *self.get_mut(k, j, i) = value;
    }

    pub fn entries(&self) -> &[E] {
        &self.gamma
    }

    pub fn entries_mut(&mut self) -> &mut [E] {
        &mut self.gamma
    }

    pub fn map<U>(&self, f: impl FnMut(&E) -> U) -> Connection<U> {
        Connection {
            d: self.d,
            gamma: self.gamma.iter().map(f).collect(),
        }
    }

    /// Exchanges the two lower indices.
    pub fn swapped_lower(&self) -> Self {
        Self::from_fn(self.d, |k, j, i| self.get(k, i, j).clone())
    }
}

/// `R^m_{kij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor<E> {
    d: usize,
    data: Vec<E>,
}

impl<E> CurvatureTensor<E> {
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize, i: usize, j: usize) -> &E {
        &self.data[((m * self.d + k) * self.d + i) * self.d + j]
    }

    pub fn entries(&self) -> &[E] {
        &self.data
    }
}

/// `R_{kj}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciTensor<E> {
    d: usize,
    data: Vec<E>,
}

impl<E> RicciTensor<E> {
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> &E {
        &self.data[k * self.d + j]
    }

    pub fn entries(&self) -> &[E] {
        &self.data
    }
}

/// `T^k_{ij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionTensor<E> {
    d: usize,
    data: Vec<E>,
}

impl<E> TorsionTensor<E> {
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> &E {
        &self.data[(k * self.d + i) * self.d + j]
    }

    pub fn entries(&self) -> &[E] {
        &self.data
    }
}

/// Symmetric `d × d` metric with entries in a centre-valued ring; the
/// entries are plain reals for `M_n(R)` and lattice fields on a torus.
#[derive(Debug, Clone, PartialEq)]
pub struct CentreMetric<E> {
    d: usize,
    entries: Vec<E>,
}

impl<E: Clone> CentreMetric<E> {
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut entries = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                entries.push(f(a, b));
            }
        }
        Self { d, entries }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> &E {
        &self.entries[a * self.d + b]
    }
}

impl CentreMetric<f64> {
    pub fn constant(g: &DMatrix<f64>) -> Self {
        Self::from_fn(g.nrows(), |a, b| g[(a, b)])
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |a, b| self.entries[a * self.d + b])
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(GeomError::DimensionMismatch { expected, found })
    }
}

pub fn curvature_tensor<F: Frame>(
    conn: &Connection<Elem<F>>,
    frame: &F,
) -> Result<CurvatureTensor<Elem<F>>> {
    curvature_tensor_with(conn, frame, Exec::default())
}

/// `R^m_{kij} = Γ^m_{ni}Γ^n_{kj} − Γ^m_{nj}Γ^n_{ki} + X_i·Γ^m_{kj} − X_j·Γ^m_{ki} − c^n_{ij}Γ^m_{kn}`,
/// evaluated for `i < j` and antisymmetrized.
pub fn curvature_tensor_with<F: Frame>(
    conn: &Connection<Elem<F>>,
    frame: &F,
    exec: Exec,
) -> Result<CurvatureTensor<Elem<F>>> {
    let d = frame.dim();
    check_dims(d, conn.dim())?;
    let ring = frame.ring();
    let c = frame.structure();
    let pairs: Vec<(usize, usize, usize, usize)> = (0..d)
        .flat_map(|m| (0..d).flat_map(move |k| (0..d).flat_map(move |i| ((i + 1)..d).map(move |j| (m, k, i, j)))))
        .collect();
    let upper = exec.map_slice(&pairs, |&(m, k, i, j)| {
        let mut acc = frame.act(i, conn.get(m, k, j));
        acc = ring.sub(&acc, &frame.act(j, conn.get(m, k, i)));
        for n in 0..d {
            ring.add_mul(&mut acc, conn.get(m, n, i), conn.get(n, k, j));
            let t = ring.mul(conn.get(m, n, j), conn.get(n, k, i));
            acc = ring.sub(&acc, &t);
            let cn = c.get(n, i, j);
            if cn != 0.0 {
                acc = ring.sub(&acc, &ring.scale(conn.get(m, k, n), cn));
            }
        }
        acc
    });
    let mut data = vec![ring.zero(); d * d * d * d];
    for (&(m, k, i, j), value) in pairs.iter().zip(upper) {
        data[((m * d + k) * d + j) * d + i] = ring.scale(&value, -1.0);
        data[((m * d + k) * d + i) * d + j] = value;
    }
    Ok(CurvatureTensor { d, data })
}

pub fn ricci<R: CoefficientRing>(ring: &R, curv: &CurvatureTensor<R::Elem>) -> RicciTensor<R::Elem> {
    let d = curv.dim();
    let mut data = Vec::with_capacity(d * d);
    for k in 0..d {
        for j in 0..d {
            let mut acc = ring.zero();
            for i in 0..d {
                acc = ring.add(&acc, curv.get(i, k, i, j));
            }
            data.push(acc);
        }
    }
    RicciTensor { d, data }
}

/// `T^k_{ij} = Γ^k_{ji} − Γ^k_{ij} − c^k_{ij} · 1`.
pub fn torsion<F: Frame>(conn: &Connection<Elem<F>>, frame: &F) -> Result<TorsionTensor<Elem<F>>> {
    let d = frame.dim();
    check_dims(d, conn.dim())?;
    let ring = frame.ring();
    let c = frame.structure();
    let mut data = Vec::with_capacity(d * d * d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let t = ring.sub(conn.get(k, j, i), conn.get(k, i, j));
                data.push(ring.sub(&t, &ring.constant(c.get(k, i, j))));
            }
        }
    }
    Ok(TorsionTensor { d, data })
}

pub fn max_abs<R: CoefficientRing>(ring: &R, items: &[R::Elem]) -> f64 {
    items.iter().fold(0.0, |m, x| m.max(ring.max_abs(x)))
}

/// Pointwise inverse of a centre-valued metric, with the pointwise
/// `sqrt|det g|` alongside.
pub fn invert_centre_metric<R: CentreRing>(
    ring: &R,
    g: &CentreMetric<R::Elem>,
) -> Result<(CentreMetric<R::Elem>, R::Elem)> {
    let d = g.dim();
    let points = ring.num_points();
    let mut inv_values = vec![vec![0.0; points]; d * d];
    let mut vol = vec![0.0; points];
    for p in 0..points {
        let local = DMatrix::from_fn(d, d, |a, b| ring.value_at(g.get(a, b), p));
        let (inv, det) = invert_checked(&local).map_err(|e| match e {
            GeomError::DegenerateMetric(msg) if points > 1 => {
                GeomError::DegenerateMetric(format!("{msg} at grid point {p}"))
            }
            other => other,
        })?;
        for a in 0..d {
            for b in 0..d {
                inv_values[a * d + b][p] = inv[(a, b)];
            }
        }
        vol[p] = det.abs().sqrt();
    }
    let entries = inv_values.into_iter().map(|v| ring.gather(v)).collect();
    Ok((CentreMetric { d, entries }, ring.gather(vol)))
}

/// Inverse and determinant, rejecting ill-conditioned or asymmetric input.
pub(crate) fn invert_checked(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if g.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::NonFinite("metric"));
    }
    let scale = g.amax().max(f64::MIN_POSITIVE);
    if (g - g.transpose()).amax() > 1e-12 * scale {
        return Err(GeomError::DegenerateMetric("metric is not symmetric".into()));
    }
    let cond = condition_number(g);
    if !(cond <= MAX_METRIC_CONDITION) {
        return Err(GeomError::DegenerateMetric(format!(
            "condition number {cond:.3e} exceeds {MAX_METRIC_CONDITION:.0e}"
        )));
    }
    let lu = g.clone().lu();
    let det = lu.determinant();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| GeomError::DegenerateMetric("matrix is singular".into()))?;
    Ok((inv, det))
}

/// Torsion-free metric connection of a centre-valued metric:
/// `2 g_{kl} Γ^l_{ji} = X_i·g_{jk} + X_j·g_{ik} − X_k·g_{ij} + c^l_{ij} g_{lk} + c^l_{ki} g_{lj} + c^l_{kj} g_{li}`.
pub fn koszul_levi_civita<F>(g: &CentreMetric<Elem<F>>, frame: &F) -> Result<Connection<Elem<F>>>
where
    F: Frame,
    F::Ring: CentreRing,
{
    let d = frame.dim();
    check_dims(d, g.dim())?;
    let ring = frame.ring();
    let c = frame.structure();
    let (ginv, _) = invert_centre_metric(ring, g)?;

    // dg[a][(j, k)] = X_a · g_{jk}
    let dg: Vec<Vec<Elem<F>>> = (0..d)
        .map(|a| {
            (0..d * d)
                .map(|jk| frame.act(a, g.get(jk / d, jk % d)))
                .collect()
        })
        .collect();
    let mut lowered = Vec::with_capacity(d * d * d);
    for k in 0..d {
        for j in 0..d {
            for i in 0..d {
                let mut acc = ring.add(&dg[i][j * d + k], &dg[j][i * d + k]);
                acc = ring.sub(&acc, &dg[k][i * d + j]);
                for l in 0..d {
                    let w = c.get(l, i, j);
                    if w != 0.0 {
                        acc = ring.add(&acc, &ring.scale(g.get(l, k), w));
                    }
                    let w = c.get(l, k, i);
                    if w != 0.0 {
                        acc = ring.add(&acc, &ring.scale(g.get(l, j), w));
                    }
                    let w = c.get(l, k, j);
                    if w != 0.0 {
                        acc = ring.add(&acc, &ring.scale(g.get(l, i), w));
                    }
                }
                lowered.push(acc);
            }
        }
    }
    let mut conn = Connection::filled(d, ring.zero());
    for l in 0..d {
        for j in 0..d {
            for i in 0..d {
                let mut acc = ring.zero();
                for k in 0..d {
                    ring.add_mul(&mut acc, ginv.get(l, k), &lowered[(k * d + j) * d + i]);
                }
                conn.set(l, j, i, ring.scale(&acc, 0.5));
            }
        }
    }
    Ok(conn)
}

/// Closed-form Christoffel symbols of the Levi–Civita connection of a
/// constant metric on a matrix Lie algebra:
/// `Γ^i_{jk} = ½(c^i_{kj} + g^{il} g_{jn} c^n_{lk} + g^{il} g_{kn} c^n_{lj})`,
/// which under `∇_{E_j} E_k = Γ^i_{kj} E_i` is the crate's storage order.
pub fn torsion_part_formula(g: &DMatrix<f64>, c: &StructureTensor) -> Result<Connection<f64>> {
    let d = c.dim();
    check_dims(d, g.nrows())?;
    let (ginv, _) = invert_checked(g)?;
    // gc[l][(j, k)] = g_{jn} c^n_{lk}
    let mut gc = vec![0.0; d * d * d];
    for l in 0..d {
        for j in 0..d {
            for k in 0..d {
                gc[(l * d + j) * d + k] = (0..d).map(|n| g[(j, n)] * c.get(n, l, k)).sum();
            }
        }
    }
    Ok(Connection::from_fn(d, |i, j, k| {
        let mut acc = c.get(i, k, j);
        for l in 0..d {
            acc += ginv[(i, l)] * (gc[(l * d + j) * d + k] + gc[(l * d + k) * d + j]);
        }
        0.5 * acc
    }))
}

/// `max |X_i·g_{jk} − Γ^l_{ji} g_{lk} − g_{jl} Γ^l_{ki}|`, with ring products
/// in the order written (so it also applies to matrix-valued metrics).
pub fn metric_compat_residual<F: Frame>(
    g: &[Elem<F>],
    conn: &Connection<Elem<F>>,
    frame: &F,
) -> Result<f64> {
    let d = frame.dim();
    check_dims(d, conn.dim())?;
    check_dims(d * d, g.len())?;
    let ring = frame.ring();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut acc = frame.act(i, &g[j * d + k]);
                for l in 0..d {
                    acc = ring.sub(&acc, &ring.mul(conn.get(l, j, i), &g[l * d + k]));
                    acc = ring.sub(&acc, &ring.mul(&g[j * d + l], conn.get(l, k, i)));
                }
                worst = worst.max(ring.max_abs(&acc));
            }
        }
    }
    Ok(worst)
}

/// Compatibility written against the inverse metric:
/// `max |g^{pj} Γ^n_{ji} + Γ^p_{ji} g^{jn} + X_i·g^{pn}|`.
pub fn inverse_metric_compat_residual<F: Frame>(
    ginv: &[Elem<F>],
    conn: &Connection<Elem<F>>,
    frame: &F,
) -> Result<f64> {
    let d = frame.dim();
    check_dims(d, conn.dim())?;
    check_dims(d * d, ginv.len())?;
    let ring = frame.ring();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for p in 0..d {
            for n in 0..d {
                let mut acc = frame.act(i, &ginv[p * d + n]);
                for j in 0..d {
                    ring.add_mul(&mut acc, &ginv[p * d + j], conn.get(n, j, i));
                    ring.add_mul(&mut acc, conn.get(p, j, i), &ginv[j * d + n]);
                }
                worst = worst.max(ring.max_abs(&acc));
            }
        }
    }
    Ok(worst)
}

/// Convenience for centre-valued metrics stored as [`CentreMetric`].
pub fn centre_compat_residual<F: Frame>(
    g: &CentreMetric<Elem<F>>,
    conn: &Connection<Elem<F>>,
    frame: &F,
) -> Result<f64> {
    metric_compat_residual(&g.entries, conn, frame)
}
