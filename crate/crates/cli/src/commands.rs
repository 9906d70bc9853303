use nalgebra::DMatrix;
use ncgeom::action::{
    action_closed_form, action_closed_form_normalized, levi_civita_action, CLOSED_FORM_NORMALIZATION,
};
use ncgeom::engine::{centre_compat_residual, koszul_levi_civita, torsion, torsion_part_formula, CentreMetric};
use ncgeom::lattice::{
    build_model, classical_block_action, classical_block_density, classical_eh_oracle, grid_convergence,
    parse_tabulated, split_action_constant_gq, total_action, MetricSpec, TorusModel,
};
use ncgeom::liealg::{killing_form, sl_basis};
use ncgeom::palatini::{
    action_m4, block_inverse, connection_residuals, critical_connection, field_residual, nabla0,
    ricci_blocks, to_f64_connection, BlockMetric, M4Connection, TraceChoice,
};
use ncgeom::ring::{Frame, ScalarFrame};
use ncgeom::sampling::{random_block_metric, random_spd_block_metric, random_spd_metric, random_symmetric_metric, rng};
use ncgeom::scalar::Wide;
use ncgeom::solver::{noisy_critical_connection, residual_norm, solve, stationarity_check, SolverConfig};
use ncgeom::GeomError;

use crate::config::{Command, MetricFamily, MetricSource, RunConfig};
use crate::report::Report;

/// Problems with the inputs, as opposed to failed checks.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn run_command(config: &RunConfig) -> Result<Report, ConfigError> {
    let name = match config.command {
        Command::VerifyPaper => "verify-paper",
        Command::MatrixAction => "matrix-action",
        Command::TorusAction => "torus-action",
        Command::PalatiniCheck => "palatini-check",
        Command::PalatiniSolve => "palatini-solve",
    };
    let mut report = Report::new(name, config.seed);
    match config.command {
        Command::VerifyPaper => verify_paper(config, &mut report),
        Command::MatrixAction => matrix_action(config, &mut report),
        Command::TorusAction => torus_action(config, &mut report)?,
        Command::PalatiniCheck => palatini_check(config, &mut report),
        Command::PalatiniSolve => palatini_solve(config, &mut report),
    }
    Ok(report)
}

fn family(config: &RunConfig, default: MetricFamily) -> MetricFamily {
    match &config.metric {
        MetricSource::Family(f) => f.clone(),
        _ => default,
    }
}

fn sl_frame(n: usize) -> Result<ScalarFrame, GeomError> {
    ScalarFrame::from_basis(&sl_basis(n)?)
}

fn matrix_action(config: &RunConfig, report: &mut Report) {
    let run = |report: &mut Report| -> Result<(), GeomError> {
        let frame = sl_frame(config.n)?;
        let d = frame.dim();
        let g = match family(config, MetricFamily::Identity) {
            MetricFamily::RandomSpd => random_spd_metric(&mut rng(config.seed, 0), d),
            _ => DMatrix::identity(d, d),
        };
        let k = killing_form(frame.structure());
        let raw = action_closed_form(&g, frame.structure(), &k)?;
        let pipeline = levi_civita_action(&CentreMetric::constant(&g), &frame, 1.0 / config.n as f64)?;
        report.value("closed_form_raw", "closed-form expression as written", raw);
        report.value("closed_form", "closed form times the fixed normalization", CLOSED_FORM_NORMALIZATION * raw);
        report.value("pipeline", "Levi-Civita action through the generic engine", pipeline);
        let rel = (pipeline - CLOSED_FORM_NORMALIZATION * raw).abs() / pipeline.abs().max(f64::MIN_POSITIVE);
        report.below("relative_difference", "closed form agrees with the pipeline", rel, config.tol_or(1e-8));
        Ok(())
    };
    if let Err(e) = run(report) {
        report.error("matrix_action", "evaluation", &e.to_string());
    }
}

fn torus_model(config: &RunConfig) -> Result<TorusModel, ConfigError> {
    let cfg_err = |e: GeomError| ConfigError(e.to_string());
    if let MetricSource::File(path) = &config.metric {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        return parse_tabulated(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())));
    }
    let d = config.n * config.n - 1;
    let flat = MetricSpec::Constant(DMatrix::identity(config.m, config.m));
    let spd = || random_spd_metric(&mut rng(config.seed, 0), d);
    let gq = match family(config, MetricFamily::Identity) {
        MetricFamily::RandomSpd => MetricSpec::Constant(spd()),
        MetricFamily::FourierPerturbed { amplitude, wave } => {
            let mut k = vec![0; config.m];
            k[0] = wave;
            MetricSpec::scaled_mode(spd(), amplitude, k)
        }
        _ => MetricSpec::Constant(DMatrix::identity(d, d)),
    };
    build_model(config.m, config.n, config.grid, &flat, &gq).map_err(cfg_err)
}

fn torus_action(config: &RunConfig, report: &mut Report) -> Result<(), ConfigError> {
    let model = torus_model(config)?;
    let total = match total_action(&model) {
        Ok(t) => t,
        Err(e) => {
            report.error("total_action", "evaluation", &e.to_string());
            return Ok(());
        }
    };
    report.value("total_action", "Einstein action of the Levi-Civita connection", total);
    report.value("volume", "volume of the torus under the classical block", model.classical_volume());
    if model.quantum_is_constant() {
        match split_action_constant_gq(&model) {
            Ok(split) => {
                report.value("classical_term", "sqrt|det g_q| times the classical action", split.classical);
                report.value("quantum_term", "matrix action times volume", split.quantum);
                let rel = (split.total() - total).abs() / total.abs().max(f64::MIN_POSITIVE);
                report.below("split_relative_difference", "split terms add up to the total", rel, config.tol_or(1e-6));
            }
            Err(e) => report.error("split", "constant quantum block split", &e.to_string()),
        }
    } else {
        match classical_block_action(&model) {
            Ok(c) => report.value("classical_block_action", "action of the classical block alone", c),
            Err(e) => report.error("classical_block_action", "evaluation", &e.to_string()),
        }
    }
    Ok(())
}

fn block_metric(config: &RunConfig, default: MetricFamily) -> BlockMetric {
    match family(config, default) {
        MetricFamily::PaperG0 => BlockMetric::g0(),
        MetricFamily::PaperCounterexample => BlockMetric::counterexample(),
        MetricFamily::RandomSpd => random_spd_block_metric(&mut rng(config.seed, 0)),
        _ => BlockMetric::identity(),
    }
}

fn palatini_check(config: &RunConfig, report: &mut Report) {
    let fam = family(config, MetricFamily::PaperG0);
    let g = block_metric(config, MetricFamily::PaperG0);
    let run = |report: &mut Report| -> Result<(), GeomError> {
        let conn: M4Connection<Wide> = if fam == MetricFamily::PaperG0 {
            nabla0()
        } else {
            critical_connection(&g)?
        };
        let e = action_m4(&g, &conn, TraceChoice::Normalized)?;
        let e_plain = action_m4(&g, &conn, TraceChoice::Plain)?;
        let field = field_residual(&g, &conn)?;
        let cs = connection_residuals(&g, &conn)?;
        let ric = ricci_blocks(&conn)?;
        let ric_max = ric.iter().flatten().flat_map(|m| m.iter()).fold(0.0_f64, |a, x| a.max(f64::from(*x).abs()));
        let c_max = cs.iter().map(|c| c.amax()).fold(0.0, f64::max);
        let rn = residual_norm(&g, &to_f64_connection(&conn))?;
        report.value("action_plain", "action with the plain trace", e_plain);
        report.value("trace_ginv_r", "tr(g^-1 r)", field.trace_ginv_r);
        report.value("residual_norm", "norm of all first-order conditions", rn);
        report.value("ricci_max", "largest Ricci entry", ric_max);
        if fam == MetricFamily::PaperG0 {
            report.close("action", "E(g0, nabla0) = -1", e, -1.0, config.tol_or(1e-10));
            report.above("connection_residual_max", "(g0, nabla0) is not critical", c_max, 1e-2);
        } else {
            report.value("action", "action at the critical connection", e);
            let tol = config.tol_or(1e-10);
            report.below("connection_residual_max", "critical connection solves the connection equations", c_max, tol);
            report.below("field_residual_max", "critical connection solves the metric equation", field.max_abs(), tol);
            report.below("ricci_max_check", "critical connection is Ricci flat", ric_max, tol);
            report.below("action_check", "action vanishes at critical points", e, config.tol_or(1e-9));
        }
        if fam == MetricFamily::PaperCounterexample {
            let inv = block_inverse::<f64>(&g)?;
            let gap = (inv.block(0, 1) - inv.block(1, 0)).norm();
            report.above("inverse_off_diagonal_gap", "g^12 differs from g^21", gap, 1e-6);
        }
        Ok(())
    };
    if let Err(e) = run(report) {
        report.error("palatini_check", "evaluation", &e.to_string());
    }
}

fn palatini_solve(config: &RunConfig, report: &mut Report) {
    let fam = family(config, MetricFamily::RandomSpd);
    let g = block_metric(config, MetricFamily::RandomSpd);
    let run = |report: &mut Report| -> Result<(), GeomError> {
        let start = if fam == MetricFamily::PaperG0 {
            nabla0()
        } else {
            noisy_critical_connection(&g, 0.1, config.seed)?
        };
        let tol = config.tol_or(1e-8);
        let cfg = SolverConfig {
            seed: config.seed,
            tolerance: tol,
            ..Default::default()
        };
        let (_, _, rep) = solve(&g, &start, &cfg)?;
        report.value("iterations", "Gauss-Newton iterations", rep.iterations as f64);
        report.value("distance_to_critical", "distance from the endpoint to the critical connection of g", rep.distance_to_critical);
        report.flag("converged", "solver reached the tolerance", rep.converged(), &format!("{:?}", rep.termination));
        report.below("residual_norm", "first-order conditions hold at the endpoint", rep.residual_norm, tol);
        report.below("action", "action vanishes at the endpoint", rep.action, config.tol_or(1e-6));
        report.below("trace_ginv_r", "tr(g^-1 r) vanishes at the endpoint", rep.trace_ginv_r, config.tol_or(1e-8));
        match rep.certificate {
            Some(c) => report.below("stationarity", "directional derivatives vanish", c.max_derivative, config.tol_or(1e-6)),
            None => report.flag("stationarity", "directional derivatives vanish", false, "no certificate"),
        }
        Ok(())
    };
    if let Err(e) = run(report) {
        report.error("palatini_solve", "evaluation", &e.to_string());
    }
}

/// The headline checks, sampled from the configured seed.
pub fn verify_paper(config: &RunConfig, report: &mut Report) {
    let seed = config.seed;
    let tol = |d: f64| config.tol_or(d);
    let metrics: Vec<BlockMetric> = (0..100).map(|i| random_block_metric(&mut rng(seed, 1000 + i), 1e6)).collect();

    match action_m4(&BlockMetric::g0(), &nabla0::<f64>(), TraceChoice::Normalized) {
        Ok(e) => report.close("g0_action", "E(g0, nabla0) = -1", e, -1.0, tol(1e-10)),
        Err(e) => report.error("g0_action", "E(g0, nabla0) = -1", &e.to_string()),
    }

    for (trace, suffix) in [(TraceChoice::Normalized, ""), (TraceChoice::Plain, "_plain_trace")] {
        match critical_sweep(&metrics, trace) {
            Ok(w) => {
                let n = |s: &str| format!("{s}{suffix}");
                report.below(&n("connection_equations"), "critical connection solves the connection equations", w[0], tol(1e-10));
                report.below(&n("metric_equation"), "critical connection solves the metric equation", w[1], tol(1e-10));
                report.below(&n("ricci_flat"), "critical connection is Ricci flat", w[3], tol(1e-10));
                report.below(&n("critical_value"), "action vanishes at critical points", w[4], tol(1e-9));
                report.below(&n("trace_ginv_r"), "tr(g^-1 r) vanishes", w[2], tol(1e-10));
            }
            Err(e) => report.error(&format!("critical_sweep{suffix}"), "critical connection", &e.to_string()),
        }
    }

    let stationarity = || -> Result<f64, GeomError> {
        let mut worst = 0.0_f64;
        for (i, g) in metrics.iter().take(10).enumerate() {
            let conn = to_f64_connection(&critical_connection::<Wide>(g)?);
            let c = stationarity_check(g, &conn, 40, 1e-5, TraceChoice::Normalized, seed + i as u64)?;
            worst = worst.max(c.max_derivative);
        }
        Ok(worst)
    };
    match stationarity() {
        Ok(w) => report.below("stationarity", "directional derivatives vanish at critical points", w, tol(1e-6)),
        Err(e) => report.error("stationarity", "directional derivatives", &e.to_string()),
    }

    match levi_civita_check(seed) {
        Ok([diff, t, c]) => {
            report.below("koszul_vs_torsion_part", "Levi-Civita connection equals the torsion-part formula", diff, tol(1e-10));
            report.below("levi_civita_torsion", "Levi-Civita connection is torsion free", t, tol(1e-10));
            report.below("levi_civita_compat", "Levi-Civita connection is metric", c, tol(1e-10));
        }
        Err(e) => report.error("levi_civita", "uniqueness", &e.to_string()),
    }

    match closed_form_check(seed) {
        Ok(rel) => report.below("matrix_closed_form", "closed-form action matches the pipeline", rel, tol(1e-8)),
        Err(e) => report.error("matrix_closed_form", "closed form", &e.to_string()),
    }

    match torus_checks(seed) {
        Ok([split, o1, o2, oracle]) => {
            report.below("torus_split", "constant quantum block splits off", split, tol(1e-8));
            report.above("convergence_order_t1", "second-order lattice convergence on T1", o1, 1.9);
            report.above("convergence_order_t2", "second-order lattice convergence on T2", o2, 1.9);
            report.below("classical_oracle", "classical block matches the coordinate computation", oracle, tol(1e-3));
        }
        Err(e) => report.error("torus", "lattice checks", &e.to_string()),
    }

    match solver_check(seed) {
        Ok([res, e, from_g0]) => {
            report.below("solver_residual", "solver converges back from noisy starts", res, tol(1e-8));
            report.below("solver_action", "action vanishes at solver endpoints", e, tol(1e-6));
            report.below("solver_from_g0", "action vanishes at the endpoint from (g0, nabla0)", from_g0, tol(1e-6));
        }
        Err(e) => report.error("solver", "Gauss-Newton", &e.to_string()),
    }

    match block_inverse::<f64>(&BlockMetric::counterexample()) {
        Ok(inv) => report.above(
            "counterexample_gap",
            "inverse off-diagonal blocks differ",
            (inv.block(0, 1) - inv.block(1, 0)).norm(),
            1e-6,
        ),
        Err(e) => report.error("counterexample_gap", "inverse blocks", &e.to_string()),
    }
}

fn critical_sweep(metrics: &[BlockMetric], trace: TraceChoice) -> Result<[f64; 5], GeomError> {
    let mut worst = [0.0_f64; 5];
    for g in metrics {
        let conn = critical_connection::<Wide>(g)?;
        let cs = connection_residuals(g, &conn)?;
        let field = field_residual(g, &conn)?;
        let ric = ricci_blocks(&conn)?;
        let e = action_m4(g, &conn, trace)?;
        let ric_max = ric.iter().flatten().flat_map(|m| m.iter()).fold(0.0_f64, |a, x| a.max(f64::from(*x).abs()));
        let vals = [
            cs.iter().map(|c| c.amax()).fold(0.0, f64::max),
            field.max_abs(),
            field.trace_ginv_r.abs(),
            ric_max,
            e.abs(),
        ];
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
    }
    Ok(worst)
}

fn levi_civita_check(seed: u64) -> Result<[f64; 3], GeomError> {
    let mut worst = [0.0_f64; 3];
    for n in [2, 3] {
        let frame = sl_frame(n)?;
        let mut r = rng(seed, 2000 + n as u64);
        for _ in 0..50 {
            let g = random_symmetric_metric(&mut r, frame.dim(), 1e3);
            let gm = CentreMetric::constant(&g);
            let lc = koszul_levi_civita(&gm, &frame)?;
            let direct = torsion_part_formula(&g, frame.structure())?;
            let diff = lc.entries().iter().zip(direct.entries()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let t = torsion(&lc, &frame)?.entries().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let c = centre_compat_residual(&gm, &lc, &frame)?;
            for (w, v) in worst.iter_mut().zip([diff, t, c]) {
                *w = w.max(v);
            }
        }
    }
    Ok(worst)
}

fn closed_form_check(seed: u64) -> Result<f64, GeomError> {
    let mut worst = 0.0_f64;
    for n in [2, 3] {
        let frame = sl_frame(n)?;
        let k = killing_form(frame.structure());
        let mut r = rng(seed, 3000 + n as u64);
        for _ in 0..10 {
            let g = random_symmetric_metric(&mut r, frame.dim(), 1e3);
            let pipe = levi_civita_action(&CentreMetric::constant(&g), &frame, 1.0 / n as f64)?;
            let closed = action_closed_form(&g, frame.structure(), &k)?;
            worst = worst.max(((pipe - CLOSED_FORM_NORMALIZATION * closed) / pipe).abs());
        }
    }
    Ok(worst)
}

fn torus_checks(seed: u64) -> Result<[f64; 4], GeomError> {
    let frame = sl_frame(2)?;
    let k = killing_form(frame.structure());
    let mut split = 0.0_f64;
    let mut orders = [0.0; 2];
    for m in [1, 2] {
        let gq = random_spd_metric(&mut rng(seed, 4000 + m as u64), 3);
        let flat = MetricSpec::Constant(DMatrix::identity(m, m));
        let model = build_model(m, 2, 32, &flat, &MetricSpec::Constant(gq.clone()))?;
        let expect = action_closed_form_normalized(&gq, frame.structure(), &k)? * model.classical_volume();
        split = split.max(((total_action(&model)? - expect) / expect).abs());

        let varying = MetricSpec::scaled_mode(gq, 0.5, vec![1; m]);
        let model = build_model(m, 2, 16, &flat, &varying)?;
        orders[m - 1] = grid_convergence(&model, &[16, 32, 64])?.observed_order.unwrap_or(f64::INFINITY);
    }
    let gc = MetricSpec::Conformal {
        base: DMatrix::identity(2, 2),
        epsilon: 0.1,
        wave: vec![1, 0],
    };
    let model = build_model(2, 2, 64, &gc, &MetricSpec::Constant(DMatrix::identity(3, 3)))?;
    let grid = *model.grid();
    let samples: Vec<_> = (0..grid.len()).map(|p| model.classical_block(p).clone()).collect();
    let oracle = classical_eh_oracle(&samples, &grid)?;
    let engine = classical_block_density(&model)?;
    let peak = oracle.density.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let pointwise = engine.iter().zip(&oracle.density).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / peak;
    let abs_mass = grid.integrate(&oracle.density.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let integral = (classical_block_action(&model)? + oracle.integral).abs() / abs_mass;
    Ok([split, orders[0], orders[1], pointwise.max(integral)])
}

fn solver_check(seed: u64) -> Result<[f64; 3], GeomError> {
    let mut worst = [0.0_f64; 2];
    for i in 0..10 {
        let g = random_block_metric(&mut rng(seed, 5000 + i), 1e3);
        let start = noisy_critical_connection(&g, 0.1, seed + i)?;
        let (_, _, rep) = solve(&g, &start, &SolverConfig { seed: seed + i, ..Default::default() })?;
        let res = if rep.converged() { rep.residual_norm } else { f64::INFINITY };
        worst[0] = worst[0].max(res);
        worst[1] = worst[1].max(rep.action.abs());
    }
    let (_, _, rep) = solve(&BlockMetric::g0(), &nabla0(), &SolverConfig::default())?;
    let from_g0 = if rep.converged() { rep.action.abs() } else { 0.0 };
    Ok([worst[0], worst[1], from_g0])
}
