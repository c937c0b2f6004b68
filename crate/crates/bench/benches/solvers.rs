use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fused_kite::alm::{ssnal_solve, AlmParams};
use fused_kite::baselines::{run_baseline, BaselineParams};
use fused_kite::fused_prox;
use fused_kite::ssn::{solve_newton, InnerProblem, NewtonStrategy, NewtonSystem};
use fused_kite::SolverKind;
use fused_kite_bench::synthetic_problem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prox(c: &mut Criterion) {
    let mut g = c.benchmark_group("fused_prox");
    for n in [1_000usize, 10_000, 100_000] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        // piecewise-constant signal plus noise, the typical prox input
        let v: Vec<f64> = (0..n)
            .map(|i| ((i / 50) % 3) as f64 - 1.0 + 0.3 * rng.random_range(-1.0..1.0))
            .collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| {
            b.iter(|| fused_prox(black_box(v), 0.1, 0.5).unwrap())
        });
    }
    g.finish();
}

fn newton(c: &mut Criterion) {
    let problem = synthetic_problem(200, 2000, 1e-3, 2.0, 1);
    // a mid-run dual iterate and multiplier, so the active set is realistic
    let warm = ssnal_solve(&problem, &AlmParams { max_outer: 3, record_trace: false, ..AlmParams::default() }).unwrap();
    let inner = InnerProblem::new(&problem, &warm.x, warm.sigma).unwrap();
    let point = inner.eval(warm.y.clone());
    let rep = inner.jacobian(&point);
    let mut g = c.benchmark_group("newton_system");
    for s in NewtonStrategy::ALL {
        g.bench_function(format!("{s:?}"), |b| {
            b.iter(|| {
                let sys = NewtonSystem::new(problem.a(), warm.sigma, rep.clone(), s).unwrap();
                solve_newton(&sys, black_box(&point.grad), 1e-10 * point.grad_norm, 500).unwrap()
            })
        });
    }
    g.finish();
}

fn solvers(c: &mut Criterion) {
    let problem = synthetic_problem(100, 1000, 1e-3, 2.0, 2);
    let mut g = c.benchmark_group("solve_1e-6");
    g.sample_size(10);
    g.bench_function("ssnal", |b| b.iter(|| ssnal_solve(&problem, &AlmParams::default()).unwrap()));
    for kind in [SolverKind::Admm, SolverKind::Apg] {
        g.bench_function(kind.name(), |b| {
            b.iter(|| run_baseline(kind, &problem, &BaselineParams::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, prox, newton, solvers);
criterion_main!(benches);
