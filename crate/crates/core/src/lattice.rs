//! Matrix-valued functions on a periodic torus grid.
//!
//! The frame is `m` coordinate derivations (central differences, zero
//! brackets) followed by the `n² − 1` inner derivations of `M_n(R)` (zero
//! action on centre-valued fields, `sl(n)` brackets). Metrics are
//! block-diagonal: a classical block `g_c` over the coordinate directions
//! and a quantum block `g_q` over the inner ones.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::action::{action_closed_form_normalized, action_pipeline, scalar_curvature_density};
use crate::engine::{invert_checked, koszul_levi_civita, CentreMetric};
use crate::error::{GeomError, Result};
use crate::exec::{pairwise_sum, Exec};
use crate::liealg::{killing_form, sl_basis, structure_constants, StructureTensor};
use crate::ring::{CentreRing, CoefficientRing, Frame};

pub const MIN_POINTS_PER_AXIS: usize = 8;
pub const MAX_TORUS_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    m: usize,
    n_per_axis: usize,
}

impl TorusGrid {
    pub fn new(m: usize, n_per_axis: usize) -> Result<Self> {
        if m == 0 || m > MAX_TORUS_DIM {
            return Err(GeomError::InvalidDimension(format!("torus dimension {m} not in 1..=3")));
        }
        if n_per_axis < MIN_POINTS_PER_AXIS {
            return Err(GeomError::InvalidDimension(format!(
                "need at least {MIN_POINTS_PER_AXIS} points per axis, got {n_per_axis}"
            )));
        }
        Ok(Self { m, n_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn points_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one point, `h^m`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.m as i32)
    }

    /// Per-axis indices of a point, axis 0 slowest.
    pub fn indices(&self, mut p: usize) -> [usize; MAX_TORUS_DIM] {
        let mut idx = [0; MAX_TORUS_DIM];
        for a in (0..self.m).rev() {
            idx[a] = p % self.n_per_axis;
            p /= self.n_per_axis;
        }
        idx
    }

    pub fn coords(&self, p: usize) -> [f64; MAX_TORUS_DIM] {
        let h = self.spacing();
        self.indices(p).map(|i| i as f64 * h)
    }

    fn stride(&self, axis: usize) -> usize {
        self.n_per_axis.pow((self.m - 1 - axis) as u32)
    }

    /// Point index after moving `offset` steps along `axis`, wrapping.
    pub fn shifted(&self, p: usize, axis: usize, offset: isize) -> usize {
        let n = self.n_per_axis as isize;
        let i = self.indices(p)[axis] as isize;
        let j = (i + offset).rem_euclid(n);
        (p as isize + (j - i) * self.stride(axis) as isize) as usize
    }

    /// Periodic trapezoid rule.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        pairwise_sum(values) * self.cell_volume()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `(f(x+h) − f(x−h)) / 2h`
    #[default]
    Second,
    /// `(−f(x+2h) + 8f(x+h) − 8f(x−h) + f(x−2h)) / 12h`
    Fourth,
}

/// Central difference of a periodic field along one axis.
pub fn derivative(grid: &TorusGrid, values: &[f64], axis: usize, stencil: Stencil) -> Vec<f64> {
    let h = grid.spacing();
    (0..grid.len())
        .map(|p| {
            let at = |o: isize| values[grid.shifted(p, axis, o)];
            match stencil {
                Stencil::Second => (at(1) - at(-1)) / (2.0 * h),
                Stencil::Fourth => (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h),
            }
        })
        .collect()
}

/// Real values at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField(pub Vec<f64>);

impl LatticeField {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `C^∞(T^m)` sampled on a grid, seen as the centre of `C^∞(T^m) ⊗ M_n(R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeRing {
    grid: TorusGrid,
    algebra_size: usize,
}

impl LatticeRing {
    pub fn new(grid: TorusGrid, algebra_size: usize) -> Self {
        Self { grid, algebra_size }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn zip(&self, a: &LatticeField, b: &LatticeField, f: impl Fn(f64, f64) -> f64) -> LatticeField {
        LatticeField(a.0.iter().zip(&b.0).map(|(x, y)| f(*x, *y)).collect())
    }
}

impl CoefficientRing for LatticeRing {
    type Elem = LatticeField;

    fn zero(&self) -> LatticeField {
        LatticeField(vec![0.0; self.grid.len()])
    }
    fn constant(&self, x: f64) -> LatticeField {
        LatticeField(vec![x; self.grid.len()])
    }
    fn add(&self, a: &LatticeField, b: &LatticeField) -> LatticeField {
        self.zip(a, b, |x, y| x + y)
    }
    fn sub(&self, a: &LatticeField, b: &LatticeField) -> LatticeField {
        self.zip(a, b, |x, y| x - y)
    }
    fn mul(&self, a: &LatticeField, b: &LatticeField) -> LatticeField {
        self.zip(a, b, |x, y| x * y)
    }
    fn scale(&self, a: &LatticeField, s: f64) -> LatticeField {
        LatticeField(a.0.iter().map(|x| x * s).collect())
    }
    fn max_abs(&self, a: &LatticeField) -> f64 {
        a.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
    /// `n ∫_{T^m} f`
    fn trace(&self, a: &LatticeField) -> f64 {
        self.algebra_size as f64 * self.grid.integrate(&a.0)
    }
    fn add_mul(&self, acc: &mut LatticeField, b: &LatticeField, c: &LatticeField) {
        for ((s, x), y) in acc.0.iter_mut().zip(&b.0).zip(&c.0) {
            *s += x * y;
        }
    }
}

impl CentreRing for LatticeRing {
    fn num_points(&self) -> usize {
        self.grid.len()
    }
    fn value_at(&self, a: &LatticeField, point: usize) -> f64 {
        a.0[point]
    }
    fn gather(&self, values: Vec<f64>) -> LatticeField {
        LatticeField(values)
    }
}

/// Coordinate derivations of `T^m` followed by inner derivations of `M_n(R)`.
#[derive(Debug, Clone)]
pub struct TorusFrame {
    ring: LatticeRing,
    structure: StructureTensor,
    stencil: Stencil,
}

impl TorusFrame {
    /// `inner` holds the structure constants of the inner directions.
    pub fn new(grid: TorusGrid, algebra_size: usize, inner: &StructureTensor, stencil: Stencil) -> Self {
        let m = grid.dim();
        let d = inner.dim();
        let structure = StructureTensor::from_fn(m + d, |r, l, p| {
            if r >= m && l >= m && p >= m {
                inner.get(r - m, l - m, p - m)
            } else {
                0.0
            }
        });
        Self {
            ring: LatticeRing::new(grid, algebra_size),
            structure,
            stencil,
        }
    }

    pub fn coordinate_dims(&self) -> usize {
        self.ring.grid.dim()
    }
}

impl Frame for TorusFrame {
    type Ring = LatticeRing;

    fn ring(&self) -> &LatticeRing {
        &self.ring
    }
    fn structure(&self) -> &StructureTensor {
        &self.structure
    }
    fn act(&self, i: usize, a: &LatticeField) -> LatticeField {
        if i < self.coordinate_dims() {
            LatticeField(derivative(&self.ring.grid, &a.0, i, self.stencil))
        } else {
            self.ring.zero()
        }
    }
}

/// Closed-form metric families over the torus.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Constant(DMatrix<f64>),
    /// `base + amplitude · sin(k·x) · direction`
    FourierMode {
        base: DMatrix<f64>,
        direction: DMatrix<f64>,
        amplitude: f64,
        wave: Vec<i32>,
    },
    /// `exp(2 ε sin(k·x)) · base`
    Conformal {
        base: DMatrix<f64>,
        epsilon: f64,
        wave: Vec<i32>,
    },
}

impl MetricSpec {
    /// `(1 + a sin(k·x)) · base`
    pub fn scaled_mode(base: DMatrix<f64>, amplitude: f64, wave: Vec<i32>) -> Self {
        MetricSpec::FourierMode {
            direction: base.clone(),
            base,
            amplitude,
            wave,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricSpec::Constant(b) | MetricSpec::FourierMode { base: b, .. } | MetricSpec::Conformal { base: b, .. } => {
                b.nrows()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            MetricSpec::Constant(_) => true,
            MetricSpec::FourierMode { amplitude, wave, .. } => *amplitude == 0.0 || wave.iter().all(|&k| k == 0),
            MetricSpec::Conformal { epsilon, wave, .. } => *epsilon == 0.0 || wave.iter().all(|&k| k == 0),
        }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let phase = |wave: &[i32]| wave.iter().zip(x).map(|(k, xi)| *k as f64 * xi).sum::<f64>();
        match self {
            MetricSpec::Constant(b) => b.clone(),
            MetricSpec::FourierMode {
                base,
                direction,
                amplitude,
                wave,
            } => base + direction * (amplitude * phase(wave).sin()),
            MetricSpec::Conformal { base, epsilon, wave } => base * (2.0 * epsilon * phase(wave).sin()).exp(),
        }
    }

    fn sample(&self, grid: &TorusGrid) -> Vec<DMatrix<f64>> {
        (0..grid.len()).map(|p| self.eval(&grid.coords(p)[..grid.dim()])).collect()
    }
}

/// Block-diagonal metric on `C^∞(T^m) ⊗ M_n(R)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusModel {
    grid: TorusGrid,
    n: usize,
    classical: Vec<DMatrix<f64>>,
    quantum: Vec<DMatrix<f64>>,
    specs: Option<(MetricSpec, MetricSpec)>,
    stencil: Stencil,
}

pub fn build_model(m: usize, n: usize, points_per_axis: usize, g_c: &MetricSpec, g_q: &MetricSpec) -> Result<TorusModel> {
    let grid = TorusGrid::new(m, points_per_axis)?;
    if g_c.dim() != m {
        return Err(GeomError::DimensionMismatch { expected: m, found: g_c.dim() });
    }
    let mut model = TorusModel::from_fields(grid, n, g_c.sample(&grid), g_q.sample(&grid))?;
    model.specs = Some((g_c.clone(), g_q.clone()));
    Ok(model)
}

impl TorusModel {
    /// Validates pointwise symmetry and invertibility of both blocks.
    pub fn from_fields(grid: TorusGrid, n: usize, classical: Vec<DMatrix<f64>>, quantum: Vec<DMatrix<f64>>) -> Result<Self> {
        if n < 2 {
            return Err(GeomError::InvalidDimension(format!("matrix size {n} < 2")));
        }
        let d = n * n - 1;
        if classical.len() != grid.len() || quantum.len() != grid.len() {
            return Err(GeomError::Model(format!(
                "expected {} grid values, got {} classical and {} quantum",
                grid.len(),
                classical.len(),
                quantum.len()
            )));
        }
        for (p, (gc, gq)) in classical.iter().zip(&quantum).enumerate() {
            if gc.shape() != (grid.dim(), grid.dim()) || gq.shape() != (d, d) {
                return Err(GeomError::Model(format!("wrong block shape at grid point {p}")));
            }
            for (name, block) in [("classical", gc), ("quantum", gq)] {
                invert_checked(block).map_err(|e| {
                    GeomError::Model(format!("{name} block at grid point {p} {:?}: {e}", grid.indices(p)))
                })?;
            }
        }
        Ok(Self {
            grid,
            n,
            classical,
            quantum,
            specs: None,
            stencil: Stencil::Second,
        })
    }

    /// Splits full `(m + n² − 1)`-square metrics, rejecting any nonzero
    /// entry that couples a coordinate direction to an inner one.
    pub fn from_full_metric(grid: TorusGrid, n: usize, full: &[DMatrix<f64>]) -> Result<Self> {
        let m = grid.dim();
        let d = n * n - 1;
        let mut classical = Vec::with_capacity(full.len());
        let mut quantum = Vec::with_capacity(full.len());
        for (p, g) in full.iter().enumerate() {
            if g.shape() != (m + d, m + d) {
                return Err(GeomError::Model(format!("wrong metric shape at grid point {p}")));
            }
            let cross = g.view((0, m), (m, d)).amax().max(g.view((m, 0), (d, m)).amax());
            if cross != 0.0 {
                return Err(GeomError::Model(format!(
                    "metric is not block diagonal at grid point {p} (cross entry {cross:.3e})"
                )));
            }
            classical.push(g.view((0, 0), (m, m)).into_owned());
            quantum.push(g.view((m, m), (d, d)).into_owned());
        }
        Self::from_fields(grid, n, classical, quantum)
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn matrix_size(&self) -> usize {
        self.n
    }

    pub fn quantum_dim(&self) -> usize {
        self.n * self.n - 1
    }

    pub fn classical_block(&self, p: usize) -> &DMatrix<f64> {
        &self.classical[p]
    }

    pub fn quantum_block(&self, p: usize) -> &DMatrix<f64> {
        &self.quantum[p]
    }

    pub fn specs(&self) -> Option<&(MetricSpec, MetricSpec)> {
        self.specs.as_ref()
    }

    pub fn quantum_is_constant(&self) -> bool {
        self.quantum.iter().all(|g| g == &self.quantum[0])
    }

    /// Same families at another resolution.
    pub fn resampled(&self, points_per_axis: usize) -> Result<Self> {
        let (gc, gq) = self
            .specs
            .as_ref()
            .ok_or_else(|| GeomError::Model("tabulated models cannot be resampled".into()))?;
        Ok(build_model(self.grid.dim(), self.n, points_per_axis, gc, gq)?.with_stencil(self.stencil))
    }

    fn inner_structure(&self) -> Result<StructureTensor> {
        structure_constants(&sl_basis(self.n)?)
    }

    pub fn frame(&self) -> Result<TorusFrame> {
        Ok(TorusFrame::new(self.grid, self.n, &self.inner_structure()?, self.stencil))
    }

    /// The full block-diagonal metric as a matrix of lattice fields.
    pub fn metric(&self) -> CentreMetric<LatticeField> {
        let m = self.grid.dim();
        let d = self.quantum_dim();
        CentreMetric::from_fn(m + d, |a, b| {
            let values = (0..self.grid.len())
                .map(|p| match (a < m, b < m) {
                    (true, true) => self.classical[p][(a, b)],
                    (false, false) => self.quantum[p][(a - m, b - m)],
                    _ => 0.0,
                })
                .collect();
            LatticeField(values)
        })
    }

    fn classical_metric(&self) -> CentreMetric<LatticeField> {
        let m = self.grid.dim();
        CentreMetric::from_fn(m, |a, b| LatticeField(self.classical.iter().map(|g| g[(a, b)]).collect()))
    }

    fn classical_frame(&self) -> TorusFrame {
        TorusFrame::new(self.grid, 1, &StructureTensor::zeros(0), self.stencil)
    }

    /// `∫ sqrt|det g_c|`.
    pub fn classical_volume(&self) -> f64 {
        let dens = Exec::default().map_slice(&self.classical, |g| g.determinant().abs().sqrt());
        self.grid.integrate(&dens)
    }
}

/// Einstein action of the Levi–Civita connection of the full metric, with
/// trace `(1/n) ∫ sqrt|det g| Tr`.
pub fn total_action(model: &TorusModel) -> Result<f64> {
    let frame = model.frame()?;
    let g = model.metric();
    let conn = koszul_levi_civita(&g, &frame)?;
    action_pipeline(&g, &conn, &frame, 1.0 / model.n as f64)
}

/// `R_c sqrt|det g_c|` at each grid point, through the generic engine with
/// only the coordinate derivations.
pub fn classical_block_density(model: &TorusModel) -> Result<Vec<f64>> {
    let frame = model.classical_frame();
    let g = model.classical_metric();
    let conn = koszul_levi_civita(&g, &frame)?;
    Ok(scalar_curvature_density(&g, &conn, &frame)?.0)
}

/// Classical action `E(g_c) = −∫ R_c sqrt|det g_c|`.
pub fn classical_block_action(model: &TorusModel) -> Result<f64> {
    Ok(-model.grid.integrate(&classical_block_density(model)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitAction {
    /// `sqrt|det g_q| · E(g_c)`
    pub classical: f64,
    /// `E(g_q) · vol(T^m, g_c)`
    pub quantum: f64,
}

impl SplitAction {
    pub fn total(&self) -> f64 {
        self.classical + self.quantum
    }
}

/// Classical and quantum parts of the action when `g_q` is constant over the
/// torus, in which case no mixed term appears. The quantum part uses the
/// closed-form matrix action.
pub fn split_action_constant_gq(model: &TorusModel) -> Result<SplitAction> {
    if !model.quantum_is_constant() {
        return Err(GeomError::Model("quantum block varies over the torus".into()));
    }
    let gq = &model.quantum[0];
    let c = model.inner_structure()?;
    let k = killing_form(&c);
    let quantum = action_closed_form_normalized(gq, &c, &k)? * model.classical_volume();
    let classical = gq.determinant().abs().sqrt() * classical_block_action(model)?;
    Ok(SplitAction { classical, quantum })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `∫ R sqrt|det g|`
    pub integral: f64,
    /// `R sqrt|det g|` per grid point.
    pub density: Vec<f64>,
}

/// Scalar curvature of a classical metric field from coordinate Christoffel
/// symbols of the second kind and the textbook Riemann tensor, written
/// independently of the frame engine.
pub fn classical_eh_oracle(g_c: &[DMatrix<f64>], grid: &TorusGrid) -> Result<OracleResult> {
    let m = grid.dim();
    let len = grid.len();
    if g_c.len() != len {
        return Err(GeomError::Model(format!("expected {len} metric samples, got {}", g_c.len())));
    }
    let h = grid.spacing();
    let diff = |f: &dyn Fn(usize) -> f64, p: usize, axis: usize| {
        (f(grid.shifted(p, axis, 1)) - f(grid.shifted(p, axis, -1))) / (2.0 * h)
    };
    let mut inverse = Vec::with_capacity(len);
    let mut sqrt_det = Vec::with_capacity(len);
    for (p, g) in g_c.iter().enumerate() {
        let det = g.determinant();
        if !(det.abs() > 1e-14) {
            return Err(GeomError::DegenerateMetric(format!("classical metric at grid point {p}")));
        }
        inverse.push(g.clone().try_inverse().ok_or_else(|| GeomError::DegenerateMetric(format!("grid point {p}")))?);
        sqrt_det.push(det.abs().sqrt());
    }
    // christoffel[p][(a, b, c)] = Γ^a_{bc}
    let idx3 = |a: usize, b: usize, c: usize| (a * m + b) * m + c;
    let christoffel: Vec<Vec<f64>> = (0..len)
        .map(|p| {
            let dg = |a: usize, b: usize, c: usize| diff(&|q| g_c[q][(b, c)], p, a);
            let mut out = vec![0.0; m * m * m];
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        let mut s = 0.0;
                        for e in 0..m {
                            s += inverse[p][(a, e)] * (dg(b, e, c) + dg(c, e, b) - dg(e, b, c));
                        }
                        out[idx3(a, b, c)] = 0.5 * s;
                    }
                }
            }
            out
        })
        .collect();
    let density: Vec<f64> = (0..len)
        .map(|p| {
            let gam = &christoffel[p];
            let dgam = |axis: usize, a: usize, b: usize, c: usize| diff(&|q| christoffel[q][idx3(a, b, c)], p, axis);
            // Ric_{bd} = R^a_{bad} = ∂_a Γ^a_{db} − ∂_d Γ^a_{ab} + Γ^a_{ae} Γ^e_{db} − Γ^a_{de} Γ^e_{ab}
            let mut scalar = 0.0;
            for b in 0..m {
                for dd in 0..m {
                    let mut ric = 0.0;
                    for a in 0..m {
                        ric += dgam(a, a, dd, b) - dgam(dd, a, a, b);
                        for e in 0..m {
                            ric += gam[idx3(a, a, e)] * gam[idx3(e, dd, b)] - gam[idx3(a, dd, e)] * gam[idx3(e, a, b)];
                        }
                    }
                    scalar += inverse[p][(b, dd)] * ric;
                }
            }
            scalar * sqrt_det[p]
        })
        .collect();
    Ok(OracleResult {
        integral: grid.integrate(&density),
        density,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub resolutions: Vec<usize>,
    pub values: Vec<f64>,
    /// `values[i] − values[i + 1]`
    pub differences: Vec<f64>,
    /// `log2` of the last two successive differences; `None` when the values
    /// agree exactly (no discretization error to measure).
    pub observed_order: Option<f64>,
}

impl ConvergenceReport {
    pub fn is_exact(&self) -> bool {
        self.differences.iter().all(|d| *d == 0.0)
    }

    /// Ratios of successive differences; about 4 for second-order schemes.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.differences.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// Total action at each resolution (which must double), with the observed
/// order from the last three.
pub fn grid_convergence(model: &TorusModel, resolutions: &[usize]) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(GeomError::Model("need at least three resolutions".into()));
    }
    if resolutions.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(GeomError::Model("resolutions must double".into()));
    }
    let values = resolutions
        .iter()
        .map(|&n| total_action(&model.resampled(n)?))
        .collect::<Result<Vec<_>>>()?;
    let differences: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    let k = differences.len();
    let (a, b) = (differences[k - 2], differences[k - 1]);
    let observed_order = if a == 0.0 && b == 0.0 { None } else { Some((a / b).abs().log2()) };
    Ok(ConvergenceReport {
        resolutions: resolutions.to_vec(),
        values,
        differences,
        observed_order,
    })
}

fn lower_triangle(g: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..g.nrows()).flat_map(move |i| (0..=i).map(move |j| g[(i, j)]))
}

fn from_lower_triangle(d: usize, values: &[f64]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(d, d);
    let mut it = values.iter();
    for i in 0..d {
        for j in 0..=i {
            let v = *it.next().expect("length checked by caller");
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Plain-text grid dump: header `m n N`, then one line per grid point in
/// row-major order holding the lower triangle of `g_c` then of `g_q`.
pub fn write_tabulated(model: &TorusModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", model.grid.dim(), model.n, model.grid.points_per_axis());
    for (gc, gq) in model.classical.iter().zip(&model.quantum) {
        let line: Vec<String> = lower_triangle(gc).chain(lower_triangle(gq)).map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn parse_tabulated(text: &str) -> Result<TorusModel> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(GeomError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| GeomError::Parse {
            line: hline + 1,
            message: format!("header: {e}"),
        })?;
    let [m, n, big_n] = nums[..] else {
        return Err(GeomError::Parse {
            line: hline + 1,
            message: "header must be `m n N`".into(),
        });
    };
    let grid = TorusGrid::new(m, big_n).map_err(|e| GeomError::Parse {
        line: hline + 1,
        message: e.to_string(),
    })?;
    if !(2..=3).contains(&n) {
        return Err(GeomError::Parse {
            line: hline + 1,
            message: format!("matrix size {n} not supported"),
        });
    }
    let d = n * n - 1;
    let (tc, tq) = (m * (m + 1) / 2, d * (d + 1) / 2);
    let mut classical = Vec::with_capacity(grid.len());
    let mut quantum = Vec::with_capacity(grid.len());
    for (lno, line) in lines {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| GeomError::Parse {
                line: lno + 1,
                message: e.to_string(),
            })?;
        if vals.len() != tc + tq {
            return Err(GeomError::Parse {
                line: lno + 1,
                message: format!("expected {} values, found {}", tc + tq, vals.len()),
            });
        }
        classical.push(from_lower_triangle(m, &vals[..tc]));
        quantum.push(from_lower_triangle(d, &vals[tc..]));
    }
    if classical.len() != grid.len() {
        return Err(GeomError::Parse {
            line: text.lines().count(),
            message: format!("expected {} grid points, found {}", grid.len(), classical.len()),
        });
    }
    TorusModel::from_fields(grid, n, classical, quantum)
}
