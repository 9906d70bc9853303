use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use ncgeom::engine::{curvature_tensor_with, koszul_levi_civita};
use ncgeom::lattice::{build_model, MetricSpec};
use ncgeom::palatini::{connection_residuals, critical_connection, field_residual};
use ncgeom::sampling::{random_block_metric, random_spd_metric, rng};
use ncgeom::scalar::Wide;
use ncgeom::solver::{noisy_critical_connection, solve, SolverConfig};
use ncgeom::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn metric_sweep(c: &mut Criterion) {
    let metrics: Vec<_> = (0..100).map(|i| random_block_metric(&mut rng(1, i), 1e6)).collect();
    let mut group = c.benchmark_group("critical_sweep_100");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                exec.map_slice(&metrics, |g| {
                    let conn = critical_connection::<Wide>(g).unwrap();
                    let f = field_residual(g, &conn).unwrap().max_abs();
                    let r = connection_residuals(g, &conn).unwrap();
                    r.iter().fold(f, |m, x| m.max(x.amax()))
                })
            })
        });
    }
    group.finish();
}

fn lattice_curvature(c: &mut Criterion) {
    let gq = MetricSpec::scaled_mode(random_spd_metric(&mut rng(2, 0), 3), 0.5, vec![1, 1]);
    let flat = MetricSpec::Constant(DMatrix::identity(2, 2));
    let mut group = c.benchmark_group("lattice_curvature_t2");
    group.sample_size(10);
    for n in [16, 32] {
        let model = build_model(2, 2, n, &flat, &gq).unwrap();
        let frame = model.frame().unwrap();
        let conn = koszul_levi_civita(&model.metric(), &frame).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| curvature_tensor_with(&conn, &frame, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn solver_run(c: &mut Criterion) {
    let g = random_block_metric(&mut rng(3, 0), 1e3);
    let start = noisy_critical_connection(&g, 0.1, 3).unwrap();
    let mut group = c.benchmark_group("solver_noisy_start");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SolverConfig {
            exec,
            certificate_directions: 0,
            ..Default::default()
        };
        group.bench_function(name, |b| b.iter(|| solve(&g, &start, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, metric_sweep, lattice_curvature, solver_run);
criterion_main!(benches);
