//! End-to-end checks of the library's headline numerical claims. Runs as a
//! plain binary so every line is printed; exits nonzero if any check fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use ncgeom::action::{
    action_closed_form, action_closed_form_normalized, levi_civita_action, CLOSED_FORM_NORMALIZATION,
};
use ncgeom::engine::{centre_compat_residual, koszul_levi_civita, torsion, torsion_part_formula, CentreMetric};
use ncgeom::lattice::{
    build_model, classical_block_action, classical_block_density, classical_eh_oracle, grid_convergence,
    total_action, MetricSpec,
};
use ncgeom::liealg::{killing_form, sl_basis};
use ncgeom::palatini::{
    action_m4, block_inverse, connection_residuals, critical_connection, field_residual, nabla0,
    ricci_blocks, BlockMetric, TraceChoice,
};
use ncgeom::ring::{Frame, ScalarFrame};
use ncgeom::sampling::{random_block_metric, random_spd_metric, random_symmetric_metric, rng};
use ncgeom::scalar::Wide;
use ncgeom::solver::{noisy_critical_connection, solve, stationarity_check, SolverConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_metrics(count: u64) -> Vec<BlockMetric> {
    (0..count).map(|i| random_block_metric(&mut rng(2024, i), 1e6)).collect()
}

fn g0_action() -> Outcome {
    let g0 = BlockMetric::g0();
    let conn = nabla0::<f64>();
    let _ = action_m4(&g0, &conn, TraceChoice::Normalized);
    let start = Instant::now();
    let e = action_m4(&g0, &conn, TraceChoice::Normalized).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(
        (e + 1.0).abs() < 1e-10 && took < Duration::from_millis(1),
        format!("E = {e:.15}, {took:?}"),
    )
}

/// Worst (connection residual, field residual, |tr g⁻¹r|, Ricci, |E|) over the sample.
fn critical_sweep(metrics: &[BlockMetric], trace: TraceChoice) -> Result<[f64; 5], String> {
    let mut worst = [0.0_f64; 5];
    for g in metrics {
        let conn = critical_connection::<Wide>(g).map_err(|e| e.to_string())?;
        let cs = connection_residuals(g, &conn).map_err(|e| e.to_string())?;
        let field = field_residual(g, &conn).map_err(|e| e.to_string())?;
        let ric = ricci_blocks(&conn).map_err(|e| e.to_string())?;
        let e = action_m4(g, &conn, trace).map_err(|e| e.to_string())?;
        let ricci_max = ric.iter().flatten().flat_map(|m| m.iter()).fold(0.0_f64, |a, x| a.max(f64::from(*x).abs()));
        let vals = [
            cs.iter().map(|c| c.amax()).fold(0.0, f64::max),
            field.max_abs(),
            field.trace_ginv_r.abs(),
            ricci_max,
            e.abs(),
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
    }
    Ok(worst)
}

fn palatini_system() -> Outcome {
    let start = Instant::now();
    let metrics = random_metrics(100);
    let w = critical_sweep(&metrics, TraceChoice::Normalized)?;
    let took = start.elapsed();
    check(
        w[0] < 1e-10 && w[1] < 1e-10 && took < Duration::from_secs(1),
        format!("max c-residual {:.2e}, field {:.2e}, {took:?}", w[0], w[1]),
    )
}

fn ricci_flat() -> Outcome {
    let w = critical_sweep(&random_metrics(100), TraceChoice::Normalized)?;
    check(w[3] < 1e-10, format!("max |Ric| {:.2e}", w[3]))
}

fn critical_value_zero() -> Outcome {
    let w = critical_sweep(&random_metrics(100), TraceChoice::Normalized)?;
    check(w[4] < 1e-9 && w[2] < 1e-10, format!("max |E| {:.2e}, max |tr g⁻¹r| {:.2e}", w[4], w[2]))
}

fn stationarity() -> Outcome {
    let mut worst = 0.0_f64;
    for (i, g) in random_metrics(10).iter().enumerate() {
        let conn = ncgeom::palatini::to_f64_connection(&critical_connection::<Wide>(g).map_err(|e| e.to_string())?);
        let cert = stationarity_check(g, &conn, 40, 1e-5, TraceChoice::Normalized, i as u64).map_err(|e| e.to_string())?;
        worst = worst.max(cert.max_derivative);
    }
    check(worst < 1e-6, format!("max |dE/ds| {worst:.2e} over 400 directions"))
}

fn plain_trace() -> Outcome {
    let w = critical_sweep(&random_metrics(100), TraceChoice::Plain)?;
    check(
        w[0] < 1e-10 && w[1] < 1e-10 && w[3] < 1e-10 && w[4] < 1e-9 && w[2] < 1e-10,
        format!("residual {:.2e}, field {:.2e}, Ric {:.2e}, |E| {:.2e}", w[0], w[1], w[3], w[4]),
    )
}

fn levi_civita_uniqueness() -> Outcome {
    let mut worst = [0.0_f64; 3];
    for n in [2, 3] {
        let frame = ScalarFrame::from_basis(&sl_basis(n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let mut r = rng(7000 + n as u64, 0);
        for _ in 0..50 {
            let g = random_symmetric_metric(&mut r, frame.dim(), 1e3);
            let gm = CentreMetric::constant(&g);
            let lc = koszul_levi_civita(&gm, &frame).map_err(|e| e.to_string())?;
            let direct = torsion_part_formula(&g, frame.structure()).map_err(|e| e.to_string())?;
            let diff = lc.entries().iter().zip(direct.entries()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let tor = torsion(&lc, &frame).map_err(|e| e.to_string())?;
            let t = tor.entries().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let compat = centre_compat_residual(&gm, &lc, &frame).map_err(|e| e.to_string())?;
            for (w, v) in worst.iter_mut().zip([diff, t, compat]) {
                *w = w.max(v);
            }
        }
    }
    check(
        worst.iter().all(|w| *w < 1e-10),
        format!("Koszul vs torsion part {:.2e}, torsion {:.2e}, compat {:.2e}", worst[0], worst[1], worst[2]),
    )
}

fn matrix_closed_form() -> Outcome {
    let mut worst = 0.0_f64;
    for n in [2, 3] {
        let frame = ScalarFrame::from_basis(&sl_basis(n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let k = killing_form(frame.structure());
        let mut r = rng(8000 + n as u64, 0);
        for _ in 0..10 {
            let g = random_symmetric_metric(&mut r, frame.dim(), 1e3);
            let pipe = levi_civita_action(&CentreMetric::constant(&g), &frame, 1.0 / n as f64).map_err(|e| e.to_string())?;
            let closed = action_closed_form(&g, frame.structure(), &k).map_err(|e| e.to_string())?;
            worst = worst.max(((pipe - CLOSED_FORM_NORMALIZATION * closed) / pipe).abs());
        }
    }
    check(
        worst < 1e-8,
        format!("max relative difference {worst:.2e} with normalization {CLOSED_FORM_NORMALIZATION}"),
    )
}

fn torus_split() -> Outcome {
    let start = Instant::now();
    let basis = sl_basis(2).map_err(|e| e.to_string())?;
    let frame = ScalarFrame::from_basis(&basis).map_err(|e| e.to_string())?;
    let k = killing_form(frame.structure());
    let mut worst = 0.0_f64;
    for m in [1, 2] {
        let gq = random_spd_metric(&mut rng(9000, m as u64), 3);
        let flat = MetricSpec::Constant(DMatrix::identity(m, m));
        let model = build_model(m, 2, 32, &flat, &MetricSpec::Constant(gq.clone())).map_err(|e| e.to_string())?;
        let total = total_action(&model).map_err(|e| e.to_string())?;
        let expect = action_closed_form_normalized(&gq, frame.structure(), &k).map_err(|e| e.to_string())?
            * model.classical_volume();
        worst = worst.max(((total - expect) / expect).abs());
    }
    let took = start.elapsed();
    check(
        worst < 1e-8 && took < Duration::from_secs(5),
        format!("max relative difference {worst:.2e}, {took:?} at N = 32"),
    )
}

fn lattice_convergence() -> Outcome {
    let mut orders = Vec::new();
    for m in [1, 2] {
        let gq = MetricSpec::scaled_mode(random_spd_metric(&mut rng(9100, m as u64), 3), 0.5, vec![1; m]);
        let flat = MetricSpec::Constant(DMatrix::identity(m, m));
        let model = build_model(m, 2, 16, &flat, &gq).map_err(|e| e.to_string())?;
        let rep = grid_convergence(&model, &[16, 32, 64]).map_err(|e| e.to_string())?;
        orders.push(rep.observed_order.unwrap_or(f64::INFINITY));
    }
    // The classical action of a 2-torus integrates to zero, so compare against
    // the integral of |R sqrt g| as well as pointwise.
    let gc = MetricSpec::Conformal {
        base: DMatrix::identity(2, 2),
        epsilon: 0.1,
        wave: vec![1, 0],
    };
    let model = build_model(2, 2, 64, &gc, &MetricSpec::Constant(DMatrix::identity(3, 3))).map_err(|e| e.to_string())?;
    let grid = *model.grid();
    let samples: Vec<_> = (0..grid.len()).map(|p| model.classical_block(p).clone()).collect();
    let oracle = classical_eh_oracle(&samples, &grid).map_err(|e| e.to_string())?;
    let engine = classical_block_density(&model).map_err(|e| e.to_string())?;
    let action = classical_block_action(&model).map_err(|e| e.to_string())?;
    let abs_mass = grid.integrate(&oracle.density.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let peak = oracle.density.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let pointwise = engine.iter().zip(&oracle.density).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / peak;
    let integral = (action + oracle.integral).abs() / abs_mass;
    check(
        orders.iter().all(|p| *p >= 1.9) && pointwise < 1e-3 && integral < 1e-3,
        format!(
            "orders T1 {:.3}, T2 {:.3}; classical vs oracle: pointwise {pointwise:.2e}, integral {integral:.2e}",
            orders[0], orders[1]
        ),
    )
}

fn solver() -> Outcome {
    let mut worst = (0.0_f64, 0.0_f64, 0_usize);
    let mut all_converged = true;
    for seed in 0..10 {
        let g = random_block_metric(&mut rng(9200, seed), 1e3);
        let start = noisy_critical_connection(&g, 0.1, seed).map_err(|e| e.to_string())?;
        let cfg = SolverConfig { seed, ..Default::default() };
        let (_, _, rep) = solve(&g, &start, &cfg).map_err(|e| e.to_string())?;
        all_converged &= rep.converged();
        worst = (worst.0.max(rep.residual_norm), worst.1.max(rep.action.abs()), worst.2.max(rep.iterations));
    }
    let (_, _, from_g0) = solve(&BlockMetric::g0(), &nabla0(), &SolverConfig::default())
        .map_err(|e| e.to_string())?;
    let g0_ok = !from_g0.converged() || from_g0.action.abs() < 1e-6;
    check(
        all_converged && worst.0 < 1e-8 && worst.1 < 1e-6 && worst.2 < 200 && g0_ok,
        format!(
            "noisy starts: residual {:.2e}, |E| {:.2e}, max iterations {}; from (g0, ∇0): {:?}, |E| {:.2e}",
            worst.0,
            worst.1,
            worst.2,
            from_g0.termination,
            from_g0.action.abs()
        ),
    )
}

fn counterexample() -> Outcome {
    let g = BlockMetric::counterexample();
    let inv = block_inverse::<f64>(&g).map_err(|e| e.to_string())?;
    let gap = (inv.block(0, 1) - inv.block(1, 0)).norm();
    check(gap > 1e-6, format!("‖g^12 − g^21‖ = {gap:.4}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("E(g0, ∇0) = −1", g0_action),
        ("∇^g solves the Palatini system", palatini_system),
        ("∇^g is Ricci flat", ricci_flat),
        ("critical value and tr(g⁻¹r) vanish", critical_value_zero),
        ("stationarity along random directions", stationarity),
        ("plain trace variant", plain_trace),
        ("Levi–Civita uniqueness and torsion-part formula", levi_civita_uniqueness),
        ("matrix closed form vs pipeline", matrix_closed_form),
        ("torus split with constant quantum block", torus_split),
        ("lattice convergence and classical oracle", lattice_convergence),
        ("Gauss–Newton solver", solver),
        ("counterexample inverse blocks", counterexample),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
