//! Damped Gauss–Newton search for critical points of the `M_4(R)` action.
//!
//! Unknowns are the blocks `g_11`, `g_12 = g_21`, `g_22` (48 numbers) and the
//! eight Christoffel blocks (128 numbers). The residual stacks the metric
//! field equation (64 entries) and the eight connection equations (128).
//! The Jacobian comes from central differences in `f64`; residual norms and
//! step acceptance use [`Wide`] arithmetic.

use nalgebra::{DMatrix, DVector, Matrix4};

use crate::engine::Connection;
use crate::error::{GeomError, Result};
use crate::exec::Exec;
use crate::palatini::{
    action_m4, connection_residuals, critical_connection, field_residual, lift_connection, to_f64_connection,
    BlockMetric, M4Connection, TraceChoice, M8,
};
use crate::sampling::{connection_norm, random_admissible_variation, random_connection, rng};
use crate::scalar::{Real, Wide};

pub const NUM_PARAMS: usize = 48 + 128;
pub const NUM_RESIDUALS: usize = 64 + 128;
/// Steps that push the metric condition number above this are shrunk.
pub const MAX_STEP_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Initial Levenberg–Marquardt damping, relative to `diag(JᵀJ)`.
    pub damping: f64,
    pub fd_step: f64,
    pub seed: u64,
    /// Directions sampled for the stationarity certificate.
    pub certificate_directions: usize,
    pub certificate_step: f64,
    pub trace: TraceChoice,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-9,
            damping: 1e-3,
            fd_step: 1e-6,
            seed: 0,
            certificate_directions: 40,
            certificate_step: 1e-5,
            trace: TraceChoice::Normalized,
            exec: Exec::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(GeomError::Model(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        for (name, step) in [("fd_step", self.fd_step), ("certificate_step", self.certificate_step)] {
            if !(1e-8..=1e-3).contains(&step) {
                return Err(GeomError::Model(format!("{name} {step} outside [1e-8, 1e-3]")));
            }
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(GeomError::Model(format!("damping must be finite and nonnegative, got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No damping level produced a smaller residual.
    Stalled,
    /// The metric became singular or a value went non-finite.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub directions: usize,
    /// Largest `|dE/ds|` over the sampled unit directions.
    pub max_derivative: f64,
}

impl Certificate {
    /// Zero directions certify nothing.
    pub fn is_degenerate(&self) -> bool {
        self.directions == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub termination: Termination,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Frobenius norm of the field-equation residual.
    pub field_norm: f64,
    /// Frobenius norms of the eight connection residuals.
    pub connection_norms: [f64; 8],
    pub trace_ginv_r: f64,
    pub action: f64,
    /// `‖Γ − ∇^g‖` at the endpoint.
    pub distance_to_critical: f64,
    pub certificate: Option<Certificate>,
}

impl SolverReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

#[derive(Debug, Clone)]
struct Residuals {
    field_norm: f64,
    connection_norms: [f64; 8],
    trace_ginv_r: f64,
    vector: DVector<f64>,
}

impl Residuals {
    fn norm(&self) -> f64 {
        self.vector.norm()
    }
}

fn residuals<T: Real>(g: &BlockMetric, conn: &M4Connection<T>) -> Result<Residuals> {
    let field = field_residual(g, conn)?;
    let cs = connection_residuals(g, conn)?;
    let mut vector = DVector::zeros(NUM_RESIDUALS);
    vector.rows_mut(0, 64).copy_from_slice(field.matrix.as_slice());
    for (q, c) in cs.iter().enumerate() {
        vector.rows_mut(64 + 16 * q, 16).copy_from_slice(c.as_slice());
    }
    if vector.iter().any(|x| !x.is_finite()) {
        return Err(GeomError::NonFinite("residual"));
    }
    Ok(Residuals {
        field_norm: field.matrix.norm(),
        connection_norms: cs.map(|c| c.norm()),
        trace_ginv_r: field.trace_ginv_r,
        vector,
    })
}

/// Root sum of squares of the field residual and all eight connection
/// residuals, evaluated in double-double arithmetic.
pub fn residual_norm(g: &BlockMetric, conn: &M4Connection<f64>) -> Result<f64> {
    Ok(residuals::<Wide>(g, &lift_connection(conn))?.norm())
}

fn pack(g: &BlockMetric, conn: &M4Connection<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(NUM_PARAMS);
    for (b, (i, j)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
        x.rows_mut(16 * b, 16).copy_from_slice(g.block(i, j).as_slice());
    }
    for (e, m) in conn.entries().iter().enumerate() {
        x.rows_mut(48 + 16 * e, 16).copy_from_slice(m.as_slice());
    }
    x
}

fn unpack(x: &DVector<f64>) -> (BlockMetric, M4Connection<f64>) {
    let block = |o: usize| Matrix4::from_column_slice(&x.as_slice()[o..o + 16]);
    let g = BlockMetric::from_blocks_unchecked(block(0), block(16), block(32));
    let mut conn = Connection::filled(2, Matrix4::zeros());
    for (e, m) in conn.entries_mut().iter_mut().enumerate() {
        *m = block(48 + 16 * e);
    }
    (g, conn)
}

fn f64_residual(x: &DVector<f64>) -> Result<DVector<f64>> {
    let (g, conn) = unpack(x);
    Ok(residuals(&g, &conn)?.vector)
}

fn jacobian(x: &DVector<f64>, step: f64, exec: Exec) -> Result<DMatrix<f64>> {
    let columns = exec.map_range(NUM_PARAMS, |c| {
        let mut plus = x.clone();
        plus[c] += step;
        let mut minus = x.clone();
        minus[c] -= step;
        Ok((f64_residual(&plus)? - f64_residual(&minus)?) / (2.0 * step))
    });
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&columns))
}

fn usable_metric(g: &BlockMetric) -> bool {
    let det = g.det();
    det.is_finite() && det.abs() > crate::palatini::MIN_ABS_DET && g.condition() <= MAX_STEP_CONDITION
}

/// Damped Gauss–Newton from `(g, conn)`. Failures end the run with a
/// non-converged report; errors are returned only for invalid input.
pub fn solve(
    init_g: &BlockMetric,
    init_conn: &M4Connection<f64>,
    config: &SolverConfig,
) -> Result<(BlockMetric, M4Connection<f64>, SolverReport)> {
    config.validate()?;
    let mut x = pack(init_g, init_conn);
    let eval = |x: &DVector<f64>| {
        let (g, conn) = unpack(x);
        residuals::<Wide>(&g, &lift_connection(&conn))
    };
    let mut current = eval(&x)?;
    let mut lambda = config.damping;
    let mut iterations = 0;
    let termination = loop {
        if current.norm() < config.tolerance {
            break Termination::Converged;
        }
        if iterations == config.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let jac = match jacobian(&x, config.fd_step, config.exec) {
            Ok(j) => j,
            Err(e) => break Termination::Failed(e.to_string()),
        };
        let jtj = jac.tr_mul(&jac);
        let grad = jac.tr_mul(&current.vector);
        let diag_floor = 1e-12 * jtj.diagonal().max().max(1e-300);
        let mut accepted = false;
        for _ in 0..40 {
            let mut lhs = jtj.clone();
            for i in 0..NUM_PARAMS {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let Some(chol) = lhs.cholesky() else {
                lambda = (lambda * 10.0).max(1e-12);
                continue;
            };
            let trial = &x - chol.solve(&grad);
            let (g, _) = unpack(&trial);
            if !usable_metric(&g) {
                lambda = (lambda * 10.0).max(1e-12);
                continue;
            }
            match eval(&trial) {
                Ok(r) if r.norm() < current.norm() => {
                    x = trial;
                    current = r;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    break;
                }
                _ => lambda = (lambda * 10.0).max(1e-12),
            }
        }
        if !accepted {
            break Termination::Stalled;
        }
    };
    let (g, conn) = unpack(&x);
    let wide_conn = lift_connection::<Wide>(&conn);
    let action = action_m4(&g, &wide_conn, config.trace).unwrap_or(f64::NAN);
    let distance_to_critical = critical_connection::<Wide>(&g)
        .map(|c| {
            let c = to_f64_connection(&c);
            conn.entries()
                .iter()
                .zip(c.entries())
                .map(|(a, b)| (a - b).norm_squared())
                .sum::<f64>()
                .sqrt()
        })
        .unwrap_or(f64::NAN);
    let certificate = if termination == Termination::Converged {
        stationarity_check(&g, &conn, config.certificate_directions, config.certificate_step, config.trace, config.seed)
            .ok()
    } else {
        None
    };
    let report = SolverReport {
        termination,
        iterations,
        residual_norm: current.norm(),
        field_norm: current.field_norm,
        connection_norms: current.connection_norms,
        trace_ginv_r: current.trace_ginv_r,
        action,
        distance_to_critical,
        certificate,
    };
    Ok((g, conn, report))
}

/// Largest central-difference derivative `|d/ds E(g + s h, ∇ + s A)|` over
/// `num_dirs` seeded random unit directions with `h_12 = h_21`.
pub fn stationarity_check(
    g: &BlockMetric,
    conn: &M4Connection<f64>,
    num_dirs: usize,
    step: f64,
    trace: TraceChoice,
    seed: u64,
) -> Result<Certificate> {
    let mut r = rng(seed, 7);
    let mut worst: f64 = 0.0;
    for _ in 0..num_dirs {
        let h: M8<f64> = random_admissible_variation(&mut r);
        let a = random_connection(&mut r);
        // h carries its 12 block twice; count it once like the parameters do
        let h_norm2 = h.norm_squared() - h.view((4, 0), (4, 4)).norm_squared();
        let scale = 1.0 / (h_norm2 + connection_norm(&a).powi(2)).sqrt();
        let h = h * scale;
        let a = a.map(|m| m * scale);
        let at = |s: f64| {
            let shifted = Connection::from_fn(2, |k, j, i| conn.get(k, j, i) + a.get(k, j, i) * s);
            action_m4::<Wide>(&g.perturbed(&h, s), &lift_connection(&shifted), trace)
        };
        let d = (at(step)? - at(-step)?) / (2.0 * step);
        worst = worst.max(d.abs());
    }
    Ok(Certificate {
        directions: num_dirs,
        max_derivative: worst,
    })
}

/// `∇^g` plus a seeded random connection of Frobenius norm `size`.
pub fn noisy_critical_connection(g: &BlockMetric, size: f64, seed: u64) -> Result<M4Connection<f64>> {
    let base = to_f64_connection(&critical_connection::<Wide>(g)?);
    let noise = random_connection(&mut rng(seed, 3));
    let s = size / connection_norm(&noise);
    Ok(Connection::from_fn(2, |k, j, i| base.get(k, j, i) + noise.get(k, j, i) * s))
}
