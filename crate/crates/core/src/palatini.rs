//! The `M_4(R)` model with frame `so(2) ⊕ so(2)` generated by `[F_1, ·]` and
//! `[F_2, ·]`, and metrics valued in the whole algebra.
//!
//! A metric is a 2×2 array of 4×4 blocks with `g_12 = g_21`, treated as an
//! element of `GL_8(R)`. Its inverse has blocks `g^{ij}`, and in general
//! `g^{12} ≠ g^{21}`. Functions are generic over the scalar used for the
//! Christoffel symbols and curvature; use [`Wide`](crate::scalar::Wide)
//! when residuals near `1e-10` must survive products of large inverse blocks.

use nalgebra::{DMatrix, Matrix4, SMatrix};

use crate::engine::{curvature_tensor, ricci, Connection};
use crate::error::{GeomError, Result};
use crate::liealg::{condition_number, DerivationBasis};
use crate::ring::InnerMatrixFrame;
use crate::scalar::Real;

pub type M4<T> = SMatrix<T, 4, 4>;
pub type M8<T> = SMatrix<T, 8, 8>;
pub type M4Connection<T> = Connection<M4<T>>;

/// `|det g|` at or below this rejects the metric.
pub const MIN_ABS_DET: f64 = 1e-10;
pub const MAX_CONDITION: f64 = 1e12;
/// Central finite-difference step for variation derivatives.
pub const FD_STEP: f64 = 1e-5;

fn lift<T: Real, const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> SMatrix<T, R, C> {
    m.map(T::from_f64)
}

fn lower<T: Real, const R: usize, const C: usize>(m: &SMatrix<T, R, C>) -> SMatrix<f64, R, C> {
    m.map(|x| x.to_f64())
}

fn commutator<T: Real>(a: &M4<T>, b: &M4<T>) -> M4<T> {
    a * b - b * a
}

fn trace4<T: Real>(a: &M4<T>) -> T {
    a[(0, 0)] + a[(1, 1)] + a[(2, 2)] + a[(3, 3)]
}

/// `F = [[0, 1], [−1, 0]]`, `F_1 = diag(F, 0)`, `F_2 = diag(0, F)`.
pub fn generators<T: Real>() -> [M4<T>; 2] {
    let mut f1 = Matrix4::zeros();
    f1[(0, 1)] = 1.0;
    f1[(1, 0)] = -1.0;
    let mut f2 = Matrix4::zeros();
    f2[(2, 3)] = 1.0;
    f2[(3, 2)] = -1.0;
    [lift(&f1), lift(&f2)]
}

/// The frame `{[F_1, ·], [F_2, ·]}`; its structure constants vanish.
pub fn frame<T: Real>() -> InnerMatrixFrame<T, 4> {
    let gens = generators::<f64>()
        .iter()
        .map(|f| DMatrix::from_fn(4, 4, |r, c| f[(r, c)]))
        .collect();
    let basis = DerivationBasis::new(gens).expect("F_1, F_2 are traceless and independent");
    InnerMatrixFrame::from_basis(&basis).expect("F_1, F_2 commute")
}

/// Metric on `so(2) ⊕ so(2)` with blocks `g_{ij} = g(F̂_i, F̂_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMetric {
    blocks: [[Matrix4<f64>; 2]; 2],
}

impl BlockMetric {
    /// Builds `[[g11, g12], [g12, g22]]` and checks invertibility.
    pub fn new(g11: Matrix4<f64>, g12: Matrix4<f64>, g22: Matrix4<f64>) -> Result<Self> {
        let g = Self {
            blocks: [[g11, g12], [g12, g22]],
        };
        g.validate()?;
        Ok(g)
    }

    /// Splits an 8×8 matrix, requiring equal off-diagonal blocks.
    pub fn from_matrix(m: &M8<f64>) -> Result<Self> {
        let b = split_blocks(m);
        if b[0][1] != b[1][0] {
            return Err(GeomError::BlockConstraint(format!(
                "g_12 and g_21 differ by {:.3e}",
                (b[0][1] - b[1][0]).amax()
            )));
        }
        let g = Self { blocks: b };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let m = self.assembled();
        if m.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::NonFinite("block metric"));
        }
        let det = self.det();
        if !(det.abs() > MIN_ABS_DET) {
            return Err(GeomError::DegenerateMetric(format!("|det g| = {:.3e}", det.abs())));
        }
        let cond = self.condition();
        if !(cond < MAX_CONDITION) {
            return Err(GeomError::DegenerateMetric(format!("condition number {cond:.3e}")));
        }
        Ok(())
    }

    pub fn identity() -> Self {
        Self::new(Matrix4::identity(), Matrix4::zeros(), Matrix4::identity()).unwrap()
    }

    /// `g_11 = g_22 = 0`, `g_12 = g_21 = diag(I_2, K)` with `K = [[0, 1], [1, 0]]`.
    /// It is its own inverse.
    pub fn g0() -> Self {
        let mut off = Matrix4::zeros();
        off[(0, 0)] = 1.0;
        off[(1, 1)] = 1.0;
        off[(2, 3)] = 1.0;
        off[(3, 2)] = 1.0;
        Self::new(Matrix4::zeros(), off, Matrix4::zeros()).unwrap()
    }

    /// The 8×8 metric built from `2I_2`, `I_2` and zero 2×2 blocks whose
    /// inverse has `g^{12} ≠ g^{21}`.
    pub fn counterexample() -> Self {
        // Rows of 2×2 blocks, in units of I_2.
        const PATTERN: [[f64; 4]; 4] = [
            [2.0, 0.0, 1.0, 1.0],
            [0.0, 1.0, 1.0, 0.0],
            [1.0, 1.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
        ];
        let m = M8::from_fn(|r, c| if r % 2 == c % 2 { PATTERN[r / 2][c / 2] } else { 0.0 });
        Self::from_matrix(&m).unwrap()
    }

    pub fn block(&self, i: usize, j: usize) -> &Matrix4<f64> {
        &self.blocks[i][j]
    }

    pub fn assembled(&self) -> M8<f64> {
        assemble(&self.blocks)
    }

    pub fn det(&self) -> f64 {
        self.assembled().lu().determinant()
    }

    pub fn condition(&self) -> f64 {
        let m = self.assembled();
        condition_number(&DMatrix::from_fn(8, 8, |r, c| m[(r, c)]))
    }

    /// Skips validation; callers check invertibility themselves.
    pub(crate) fn from_blocks_unchecked(g11: Matrix4<f64>, g12: Matrix4<f64>, g22: Matrix4<f64>) -> Self {
        Self {
            blocks: [[g11, g12], [g12, g22]],
        }
    }

    /// `g + s h` without re-validation (variation sampling).
    pub(crate) fn perturbed(&self, h: &M8<f64>, s: f64) -> Self {
        Self {
            blocks: split_blocks(&(self.assembled() + h * s)),
        }
    }
}

pub(crate) fn split_blocks<T: Real>(m: &M8<T>) -> [[M4<T>; 2]; 2] {
    let b = |i: usize, j: usize| M4::from_fn(|r, c| m[(4 * i + r, 4 * j + c)]);
    [[b(0, 0), b(0, 1)], [b(1, 0), b(1, 1)]]
}

pub(crate) fn assemble<T: Real>(b: &[[M4<T>; 2]; 2]) -> M8<T> {
    M8::from_fn(|r, c| b[r / 4][c / 4][(r % 4, c % 4)])
}

/// Transpose in the algebra of 2×2 block matrices: swaps the off-diagonal
/// blocks and leaves each block as is.
pub fn block_transpose<T: Real>(m: &M8<T>) -> M8<T> {
    let b = split_blocks(m);
    assemble(&[[b[0][0], b[1][0]], [b[0][1], b[1][1]]])
}

/// Blocks `g^{ij}` of the 8×8 inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseBlocks<T: Real> {
    blocks: [[M4<T>; 2]; 2],
}

impl<T: Real> InverseBlocks<T> {
    pub fn block(&self, i: usize, j: usize) -> &M4<T> {
        &self.blocks[i][j]
    }

    pub fn assembled(&self) -> M8<T> {
        assemble(&self.blocks)
    }
}

/// 8×8 inversion then block extraction. For wide scalars one refinement step
/// `X ← X + X (I − g X)` brings the inverse to working precision.
pub fn block_inverse<T: Real>(g: &BlockMetric) -> Result<InverseBlocks<T>> {
    let m = g.assembled();
    let x0 = m
        .try_inverse()
        .ok_or_else(|| GeomError::DegenerateMetric("8×8 metric is singular".into()))?;
    let mut x: M8<T> = lift(&x0);
    if std::mem::size_of::<T>() > std::mem::size_of::<f64>() {
        let gm: M8<T> = lift(&m);
        let resid = M8::<T>::identity() - gm * x;
        x += x * resid;
    }
    Ok(InverseBlocks {
        blocks: split_blocks(&x),
    })
}

/// Which metric-dependent trace closes the action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceChoice {
    /// `¼ sqrt|det g| Tr`
    #[default]
    Normalized,
    /// Plain `Tr`
    Plain,
}

impl TraceChoice {
    pub fn weight(self, det: f64) -> f64 {
        match self {
            TraceChoice::Normalized => 0.25 * det.abs().sqrt(),
            TraceChoice::Plain => 1.0,
        }
    }
}

/// Ricci blocks `R_{kj}` of a connection on the model frame.
pub fn ricci_blocks<T: Real>(conn: &M4Connection<T>) -> Result<[[M4<T>; 2]; 2]> {
    let frame = frame::<T>();
    let curv = curvature_tensor(conn, &frame)?;
    let ric = ricci(&crate::ring::MatrixRing::<T, 4>::new(), &curv);
    Ok([[*ric.get(0, 0), *ric.get(0, 1)], [*ric.get(1, 0), *ric.get(1, 1)]])
}

fn trace_ginv_r<T: Real>(ginv: &InverseBlocks<T>, r: &[[M4<T>; 2]; 2]) -> T {
    let mut t = T::zero();
    for j in 0..2 {
        for k in 0..2 {
            t += trace4(&(ginv.block(j, k) * r[k][j]));
        }
    }
    t
}

/// `E(g, ∇) = −w(g) tr(g⁻¹ r)` with `w` from the trace choice.
pub fn action_m4<T: Real>(g: &BlockMetric, conn: &M4Connection<T>, trace: TraceChoice) -> Result<f64> {
    let ginv = block_inverse::<T>(g)?;
    let r = ricci_blocks(conn)?;
    Ok(-trace.weight(g.det()) * trace_ginv_r(&ginv, &r).to_f64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldResidual {
    /// `g⁻¹ r g⁻¹ + (g⁻¹ r g⁻¹)ᵀ`, block transpose.
    pub matrix: M8<f64>,
    pub trace_ginv_r: f64,
}

impl FieldResidual {
    pub fn max_abs(&self) -> f64 {
        self.matrix.amax()
    }
}

pub fn field_residual<T: Real>(g: &BlockMetric, conn: &M4Connection<T>) -> Result<FieldResidual> {
    let ginv = block_inverse::<T>(g)?;
    let r = ricci_blocks(conn)?;
    let gi = ginv.assembled();
    let x = gi * assemble(&r) * gi;
    Ok(FieldResidual {
        matrix: lower(&(x + block_transpose(&x))),
        trace_ginv_r: trace_ginv_r(&ginv, &r).to_f64(),
    })
}

/// Left-hand sides of the eight equations equivalent to stationarity of `E`
/// under `∇ → ∇ + sA`, in their usual order.
pub fn connection_residuals<T: Real>(g: &BlockMetric, conn: &M4Connection<T>) -> Result<[M4<f64>; 8]> {
    let ginv = block_inverse::<T>(g)?;
    Ok(connection_residuals_with(&ginv, conn).map(|m| lower(&m)))
}

fn connection_residuals_with<T: Real>(ginv: &InverseBlocks<T>, conn: &M4Connection<T>) -> [M4<T>; 8] {
    let [f1, f2] = generators::<T>();
    let gu = |i: usize, j: usize| ginv.block(i - 1, j - 1);
    // Γ^k_{ji}, one-based
    let gm = |k: usize, j: usize, i: usize| conn.get(k - 1, j - 1, i - 1);
    [
        gu(1, 1) * gm(2, 1, 2) + gm(1, 2, 2) * gu(2, 2) + commutator(&(gm(1, 1, 2) + f2), gu(2, 1)),
        gu(1, 1) * gm(2, 1, 1) + gm(1, 2, 1) * gu(2, 2) + commutator(&(gm(1, 1, 1) + f1), gu(2, 1)),
        gu(2, 2) * gm(1, 2, 2) + gm(2, 1, 2) * gu(1, 1) + commutator(&(gm(2, 2, 2) + f2), gu(1, 2)),
        gu(2, 2) * gm(1, 2, 1) + gm(2, 1, 1) * gu(1, 1) + commutator(&(gm(2, 2, 1) + f1), gu(1, 2)),
        gu(2, 2) * gm(1, 1, 2) - gm(2, 2, 2) * gu(2, 2) - gu(1, 2) * gm(2, 1, 2) - gm(2, 1, 2) * gu(2, 1)
            - commutator(&f2, gu(2, 2)),
        gu(1, 1) * gm(2, 2, 2) - gm(1, 1, 2) * gu(1, 1) - gu(2, 1) * gm(1, 2, 2) - gm(1, 2, 2) * gu(1, 2)
            - commutator(&f2, gu(1, 1)),
        gu(2, 2) * gm(1, 1, 1) - gm(2, 2, 1) * gu(2, 2) - gu(1, 2) * gm(2, 1, 1) - gm(2, 1, 1) * gu(2, 1)
            - commutator(&f1, gu(2, 2)),
        gu(1, 1) * gm(2, 2, 1) - gm(1, 1, 1) * gu(1, 1) - gu(2, 1) * gm(1, 2, 1) - gm(1, 2, 1) * gu(1, 2)
            - commutator(&f1, gu(1, 1)),
    ]
}

/// `((k, j, i), (residual index, sign))`
pub type GradientEntry = ((usize, usize, usize), (usize, f64));

/// Gradient of `tr(g⁻¹ r)` with respect to `Γ^k_{ji}` (zero-based `(k, j, i)`),
/// as `(residual index, sign)`: `δ tr(g⁻¹ r) = Σ sign · tr(residual · δΓ^k_{ji})`.
pub const CONNECTION_GRADIENT: [GradientEntry; 8] = [
    ((0, 0, 0), (0, 1.0)),
    ((0, 0, 1), (1, -1.0)),
    ((0, 1, 0), (4, -1.0)),
    ((0, 1, 1), (6, 1.0)),
    ((1, 0, 0), (5, 1.0)),
    ((1, 0, 1), (7, -1.0)),
    ((1, 1, 0), (2, -1.0)),
    ((1, 1, 1), (3, 1.0)),
];

/// The connection `∇^g`: stationary for `E` at `g` and Ricci flat, though in
/// general neither torsion free nor metric.
pub fn critical_connection<T: Real>(g: &BlockMetric) -> Result<M4Connection<T>> {
    let ginv = block_inverse::<T>(g)?;
    Ok(critical_connection_from(&ginv))
}

fn critical_connection_from<T: Real>(ginv: &InverseBlocks<T>) -> M4Connection<T> {
    let [f1, f2] = generators::<T>();
    let gu = |i: usize, j: usize| *ginv.block(i - 1, j - 1);
    let mut conn = Connection::filled(2, M4::zeros());
    let mut set = |k: usize, j: usize, i: usize, v: M4<T>| conn.set(k - 1, j - 1, i - 1, v);
    set(1, 2, 2, -gu(1, 1));
    set(1, 2, 1, -gu(1, 1));
    set(2, 1, 2, gu(2, 2));
    set(2, 1, 1, gu(2, 2));
    set(2, 2, 2, -f2 - gu(1, 2));
    set(2, 2, 1, -f1 - gu(1, 2));
    set(1, 1, 2, -f2 + gu(2, 1));
    set(1, 1, 1, -f1 + gu(2, 1));
    conn
}

/// The connection whose only nonzero symbol is `Γ^1_{11} = diag(0, J)`,
/// `J = diag(1, −1)`.
pub fn nabla0<T: Real>() -> M4Connection<T> {
    let mut conn = Connection::filled(2, M4::zeros());
    conn.set(0, 0, 0, lift(&Matrix4::from_diagonal(&nalgebra::Vector4::new(0.0, 0.0, 1.0, -1.0))));
    conn
}

/// Derivative of `E` along a variation, analytic and by central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variation {
    pub analytic: f64,
    pub finite_difference: f64,
}

/// Checks `h_12 = h_21`.
pub fn check_admissible(h: &M8<f64>) -> Result<()> {
    let b = split_blocks(h);
    if b[0][1] != b[1][0] {
        return Err(GeomError::BlockConstraint(format!(
            "variation has h_12 ≠ h_21 (max difference {:.3e})",
            (b[0][1] - b[1][0]).amax()
        )));
    }
    Ok(())
}

/// `d/ds E(g + s h, ∇)` at `s = 0`. Analytically
/// `−w [½ tr(g⁻¹r) tr(h g⁻¹) − tr(h g⁻¹ r g⁻¹)]` for the normalized trace
/// and `tr(h g⁻¹ r g⁻¹)` for the plain one.
pub fn metric_variation_derivative<T: Real>(
    g: &BlockMetric,
    conn: &M4Connection<T>,
    h: &M8<f64>,
    trace: TraceChoice,
    step: f64,
) -> Result<Variation> {
    check_admissible(h)?;
    let ginv = block_inverse::<T>(g)?;
    let gi = ginv.assembled();
    let r = ricci_blocks(conn)?;
    let rr = assemble(&r);
    let hw: M8<T> = lift(h);
    let tr8 = |m: &M8<T>| (0..8).fold(T::zero(), |acc, i| acc + m[(i, i)]).to_f64();
    let t_r = tr8(&(gi * rr));
    let t_h = tr8(&(hw * gi));
    let t_hrg = tr8(&(hw * gi * rr * gi));
    let analytic = match trace {
        TraceChoice::Normalized => -trace.weight(g.det()) * (0.5 * t_r * t_h - t_hrg),
        TraceChoice::Plain => t_hrg,
    };
    let plus = action_m4(&g.perturbed(h, step), conn, trace)?;
    let minus = action_m4(&g.perturbed(h, -step), conn, trace)?;
    Ok(Variation {
        analytic,
        finite_difference: (plus - minus) / (2.0 * step),
    })
}

/// `d/ds E(g, ∇ + s A)` at `s = 0`. The analytic value pairs `A` against
/// the eight connection residuals through [`CONNECTION_GRADIENT`].
pub fn connection_variation_derivative<T: Real>(
    g: &BlockMetric,
    conn: &M4Connection<T>,
    a: &M4Connection<f64>,
    trace: TraceChoice,
    step: f64,
) -> Result<Variation> {
    let ginv = block_inverse::<T>(g)?;
    let residuals = connection_residuals_with(&ginv, conn);
    let mut pairing = T::zero();
    for ((k, j, i), (q, sign)) in CONNECTION_GRADIENT {
        pairing += T::from_f64(sign) * trace4(&(residuals[q] * lift::<T, 4, 4>(a.get(k, j, i))));
    }
    let w = trace.weight(g.det());
    let shifted = |s: f64| {
        Connection::from_fn(2, |k, j, i| conn.get(k, j, i) + lift::<T, 4, 4>(&(a.get(k, j, i) * s)))
    };
    let plus = action_m4(g, &shifted(step), trace)?;
    let minus = action_m4(g, &shifted(-step), trace)?;
    Ok(Variation {
        analytic: -w * pairing.to_f64(),
        finite_difference: (plus - minus) / (2.0 * step),
    })
}

/// Lowers a connection to `f64`.
pub fn to_f64_connection<T: Real>(conn: &M4Connection<T>) -> M4Connection<f64> {
    conn.map(lower)
}

/// Lifts an `f64` connection to another scalar.
pub fn lift_connection<T: Real>(conn: &M4Connection<f64>) -> M4Connection<T> {
    conn.map(lift)
}
