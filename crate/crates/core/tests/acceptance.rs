//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Set `FUSED_KITE_REAL_DATA=/path/to/file.libsvm` to run the optional
//! real-data spot check.

use std::time::Instant;

use fused_kite::alm::{kkt_residual, nnz_estimate, primal_objective, ssnal_solve, AlmParams};
use fused_kite::baselines::{run_baseline, BaselineParams};
use fused_kite::io::{generate_synthetic, lambda_from_alphas, normalize_columns, read_data, DataFormat, SyntheticSpec};
use fused_kite::jacobian::{build_gamma, default_tol_act, partition_blocks, JacobianRep};
use fused_kite::levelset::{levelset_solve, LevelSetParams};
use fused_kite::oracles::{brute_fused_prox, dense_gamma_oracle, dense_jacobian_oracle};
use fused_kite::ssn::{grad_psi, psi_value, solve_newton, InnerProblem, NewtonStrategy, NewtonSystem};
use fused_kite::{apply_b, fused_prox, DesignMatrix, Error, Problem, SolveStatus, SolverKind};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn synthetic(seed: u64, m: usize, n: usize, alpha1: f64, alpha2: f64) -> Problem {
    let spec = SyntheticSpec {
        m,
        n,
        seed,
        ..Default::default()
    };
    let s = generate_synthetic(&spec).unwrap();
    let (l1, l2) = lambda_from_alphas(&s.a, &s.b, alpha1, alpha2).unwrap();
    Problem::new(s.a, s.b, l1, l2).unwrap()
}

fn dense_gamma(h: &[bool], u: &[fused_kite::jacobian::UBlock]) -> DMatrix<f64> {
    let n = h.len();
    let mut g = DMatrix::from_diagonal(&DVector::from_iterator(n, h.iter().map(|&x| x as u8 as f64)));
    for b in u {
        for i in b.range() {
            for j in b.range() {
                g[(i, j)] += b.weight * b.weight;
            }
        }
    }
    g
}

fn prox_oracle_suite() -> Outcome {
    let start = Instant::now();
    let grid = [0.0, 0.1, 1.0, 10.0];
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let l1 = grid[k % 4];
        let l2 = grid[(k / 4) % 4];
        let n = rng.random_range(1..=12);
        let scale = [0.5, 3.0, 30.0][k % 3];
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        let fast = fused_prox(&v, l1, l2).unwrap().x;
        let slow = brute_fused_prox(&v, l1, l2).unwrap();
        worst = worst.max(max_abs_diff(&fast, &slow));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-8, || format!("max error {worst:.2e}"))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("1000 instances, max error {worst:.2e}, {secs:.2}s"))
}

fn jacobian_structural_suite() -> Outcome {
    let start = Instant::now();
    let mut worst_gamma = 0.0f64;
    let mut patterns = 0;
    for n in 1..=12usize {
        for mask in 0u32..(1 << (n - 1)) {
            let sigma: Vec<bool> = (0..n - 1).map(|i| mask >> i & 1 == 1).collect();
            let (h, u) = build_gamma(&partition_blocks(&sigma), n).unwrap();
            let oracle = dense_gamma_oracle(&sigma, n).unwrap();
            worst_gamma = worst_gamma.max((dense_gamma(&h, &u) - oracle).amax());
            patterns += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let (mut worst_sym, mut min_eig) = (0.0f64, f64::INFINITY);
    for _ in 0..500 {
        let n = rng.random_range(2..=60);
        let p_fuse = rng.random_range(0.0..1.0);
        let sigma: Vec<bool> = (0..n - 1).map(|_| rng.random_bool(p_fuse)).collect();
        let (h, u) = build_gamma(&partition_blocks(&sigma), n).unwrap();
        let oracle = dense_gamma_oracle(&sigma, n).unwrap();
        worst_gamma = worst_gamma.max((dense_gamma(&h, &u) - oracle).amax());

        // M at a random piecewise-constant point, where fusing actually happens
        let mut v = Vec::with_capacity(n);
        let mut level = rng.random_range(-2.0..2.0);
        for _ in 0..n {
            if rng.random_bool(0.2) {
                level = rng.random_range(-2.0..2.0);
            }
            v.push(level + rng.random_range(-0.3..0.3));
        }
        let (l1, l2) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let m = dense_jacobian_oracle(&v, l1, l2).unwrap();
        worst_sym = worst_sym.max((&m - m.transpose()).amax());
        let sym = (&m + m.transpose()) * 0.5;
        min_eig = min_eig.min(sym.symmetric_eigenvalues().min());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst_gamma <= 1e-10, || format!("gamma error {worst_gamma:.2e}"))?;
    ensure(worst_sym <= 1e-10, || format!("asymmetry {worst_sym:.2e}"))?;
    ensure(min_eig >= -1e-10, || format!("min eigenvalue {min_eig:.2e}"))?;
    ensure(secs < 120.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{patterns} exhaustive + 500 random, gamma error {worst_gamma:.2e}, asymmetry {worst_sym:.2e}, min eig {min_eig:.2e}, {secs:.2}s"
    ))
}

/// Margin of `v` from the classification boundaries of the prox.
fn margin(v: &[f64], l1: f64, l2: f64) -> f64 {
    let p = fused_prox(v, l1, l2).unwrap();
    let mut m = f64::INFINITY;
    for &x in &p.x_tv {
        m = m.min((x.abs() - l1).abs());
    }
    let bx = apply_b(&p.x_tv);
    for (z, d) in p.z.iter().zip(&bx) {
        // each edge is either strictly inside the dual ball or a clear jump
        m = m.min((l2 - z.abs()).max(d.abs()));
    }
    m
}

fn local_affine_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut worst = 0.0f64;
    let (mut accepted, mut tried) = (0, 0);
    while accepted < 200 {
        tried += 1;
        let n = rng.random_range(2..=40);
        let mut v = Vec::with_capacity(n);
        let mut level = rng.random_range(-3.0..3.0);
        for _ in 0..n {
            if rng.random_bool(0.25) {
                level = rng.random_range(-3.0..3.0);
            }
            v.push(level + rng.random_range(-0.2..0.2));
        }
        let (l1, l2) = (rng.random_range(0.0..1.0), rng.random_range(0.05..0.5));
        if margin(&v, l1, l2) < 1e-4 {
            continue;
        }
        accepted += 1;
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-6..1e-6)).collect();
        let w: Vec<f64> = v.iter().zip(&h).map(|(a, b)| a + b).collect();
        let pv = fused_prox(&v, l1, l2).unwrap();
        let pw = fused_prox(&w, l1, l2).unwrap();
        let rep = JacobianRep::from_prox(&pw, l1, l2, default_tol_act(l1, l2)).unwrap();
        let mh = fused_kite::jacobian::jacobian_mat_vec(&rep, &h).unwrap();
        let res: Vec<f64> = (0..n).map(|i| pw.x[i] - pv.x[i] - mh[i]).collect();
        worst = worst.max(norm(&res));
    }
    ensure(worst <= 1e-12, || format!("residual {worst:.2e}"))?;
    Ok(format!("200 points ({tried} drawn), max residual {worst:.2e}"))
}

fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize, l1: f64, l2: f64) -> Problem {
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0) / (m as f64).sqrt());
    let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    Problem::new(DesignMatrix::from_dense(a), b, l1, l2).unwrap()
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (m, n) = (rng.random_range(2..=50), rng.random_range(2..=50));
        let (l1, l2) = (rng.random_range(0.0..0.5), rng.random_range(0.0..0.5));
        let p = random_problem(&mut rng, m, n, l1, l2);
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xt: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let sigma = rng.random_range(0.1..5.0);
        let (g, _) = grad_psi(&y, &xt, sigma, &p).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..m)
            .map(|i| {
                let mut yp = y.clone();
                yp[i] += h;
                let mut ym = y.clone();
                ym[i] -= h;
                (psi_value(&yp, &xt, sigma, &p).unwrap() - psi_value(&ym, &xt, sigma, &p).unwrap()) / (2.0 * h)
            })
            .collect();
        worst = worst.max(norm(&diff(&g, &fd)) / norm(&g).max(1.0));
    }
    ensure(worst <= 1e-5, || format!("relative error {worst:.2e}"))?;
    Ok(format!("100 points, max relative error {worst:.2e}"))
}

fn newton_strategy_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (m, n) = (rng.random_range(5..=60), rng.random_range(5..=120));
        let p = random_problem(&mut rng, m, n, 0.05, 0.05);
        let xt: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sigma = rng.random_range(0.5..5.0);
        let inner = InnerProblem::new(&p, &xt, sigma).unwrap();
        let pt = inner.eval((0..m).map(|_| rng.random_range(-1.0..1.0)).collect());
        let rep = inner.jacobian(&pt);
        let tight = 1e-14 * pt.grad_norm.max(1.0);
        let dirs: Vec<Vec<f64>> = NewtonStrategy::ALL
            .iter()
            .map(|&s| {
                let sys = NewtonSystem::new(p.a(), sigma, rep.clone(), s).unwrap();
                solve_newton(&sys, &pt.grad, tight, 10 * m).unwrap().d
            })
            .collect();
        let base = norm(&dirs[0]).max(1e-300);
        for d in &dirs[1..] {
            worst = worst.max(norm(&diff(d, &dirs[0])) / base);
        }
    }
    ensure(worst <= 1e-7, || format!("relative disagreement {worst:.2e}"))?;
    Ok(format!("50 instances, max relative disagreement {worst:.2e}"))
}

fn solver_convergence() -> Outcome {
    let mut lines = Vec::new();
    for (seed, a2) in [(11u64, 1.0), (12, 0.01)] {
        let p = synthetic(seed, 200, 2000, 1e-3, a2);
        let out = ssnal_solve(&p, &AlmParams::default()).map_err(|e| e.to_string())?;
        let r = &out.report;
        ensure(r.status == SolveStatus::Optimal && r.eta <= 1e-6, || {
            format!("ssnal alpha2={a2}: status {:?} eta {:.2e}", r.status, r.eta)
        })?;
        ensure(r.outer_iters <= 100, || format!("ssnal alpha2={a2}: {} outer", r.outer_iters))?;
        ensure(r.wall_time_s < 10.0, || format!("ssnal alpha2={a2}: {:.2}s", r.wall_time_s))?;
        lines.push(format!("ssnal a2={a2}: {} outer/{:.2}s", r.outer_iters, r.wall_time_s));
        for kind in [SolverKind::Apg, SolverKind::Admm, SolverKind::Ladmm] {
            let params = BaselineParams {
                tol: 1e-4,
                ..Default::default()
            };
            let b = run_baseline(kind, &p, &params).map_err(|e| e.to_string())?;
            ensure(b.report.eta <= 1e-4 && b.report.outer_iters <= 20000, || {
                format!("{kind} alpha2={a2}: eta {:.2e} after {}", b.report.eta, b.report.outer_iters)
            })?;
            lines.push(format!("{kind}: {}", b.report.outer_iters));
        }
    }
    Ok(lines.join(", "))
}

fn cross_solver_agreement() -> Outcome {
    let mut lines = Vec::new();
    for (seed, a2) in [(11u64, 1.0), (12, 0.01)] {
        let p = synthetic(seed, 200, 2000, 1e-3, a2);
        let s = ssnal_solve(&p, &AlmParams::default()).map_err(|e| e.to_string())?;
        let a = run_baseline(SolverKind::Admm, &p, &BaselineParams::default()).map_err(|e| e.to_string())?;
        ensure(s.report.eta <= 1e-6 && a.report.eta <= 1e-6, || {
            format!("alpha2={a2}: eta ssnal {:.2e}, admm {:.2e}", s.report.eta, a.report.eta)
        })?;
        let (fs, fa) = (s.report.primal_obj, a.report.primal_obj);
        let rel = (fs - fa).abs() / (1.0 + fs.abs());
        let fit = norm(&p.a().mat_vec(&diff(&s.x, &a.x)).unwrap());
        let fit_tol = 1e-4 * (1.0 + p.b_norm());
        ensure(rel <= 1e-6, || format!("alpha2={a2}: objective gap {rel:.2e}"))?;
        ensure(fit <= fit_tol, || format!("alpha2={a2}: fitted gap {fit:.2e} > {fit_tol:.2e}"))?;
        lines.push(format!("a2={a2}: obj gap {rel:.1e}, fit gap {fit:.1e}"));
    }
    Ok(lines.join(", "))
}

fn superlinear_tail() -> Outcome {
    let mut worst = f64::INFINITY;
    for run in 0..20u64 {
        let a2 = [1.0, 0.01, 0.1, 10.0][run as usize % 4];
        let p = synthetic(100 + run, 100, 800, 1e-3, a2);
        let out = ssnal_solve(&p, &AlmParams::default()).map_err(|e| e.to_string())?;
        ensure(out.report.status.is_optimal(), || format!("run {run} did not converge"))?;
        let last = out
            .trace
            .iter()
            .rev()
            .find(|r| r.inner_grad_norms.len() >= 2)
            .ok_or_else(|| format!("run {run}: no Newton steps"))?;
        let g = &last.inner_grad_norms;
        let ratio = g[g.len() - 2] / g[g.len() - 1];
        worst = worst.min(ratio);
    }
    ensure(worst >= 10.0, || format!("smallest final reduction {worst:.2}"))?;
    Ok(format!("20 runs, smallest final-step reduction {worst:.3e}"))
}

fn levelset_suite() -> Outcome {
    let mut lines = Vec::new();
    for (i, gamma) in [0.1, 0.2, 0.3].into_iter().enumerate() {
        let s = generate_synthetic(&SyntheticSpec {
            m: 200,
            n: 2000,
            seed: 21 + i as u64,
            ..Default::default()
        })
        .unwrap();
        // normalized regularizer ‖x‖₁ + 2‖Bx‖₁
        let p = Problem::new(s.a, s.b, 1.0, 2.0).unwrap();
        let delta = gamma * p.b_norm();
        let start = Instant::now();
        let out = levelset_solve(&p, delta, &LevelSetParams::default()).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let gap = (out.phi - delta).abs() / delta.max(1.0);
        ensure(out.converged && gap <= 1e-6, || format!("gamma={gamma}: gap {gap:.2e}"))?;
        ensure(out.iterations <= 60, || format!("gamma={gamma}: {} iterations", out.iterations))?;
        ensure(secs < 60.0, || format!("gamma={gamma}: {secs:.1}s"))?;
        let mut probes = out.trace.clone();
        probes.sort_by(|a, b| a.mu.total_cmp(&b.mu));
        for w in probes.windows(2) {
            ensure(w[0].phi <= w[1].phi + 2e-8, || {
                format!("gamma={gamma}: phi not monotone at mu={:.4e}", w[1].mu)
            })?;
        }
        lines.push(format!("gamma={gamma}: {} iters/{secs:.2}s", out.iterations));
    }
    Ok(lines.join(", "))
}

/// Independent lasso reference: cyclic coordinate descent.
fn lasso_cd(a: &DMatrix<f64>, b: &[f64], lambda: f64) -> Vec<f64> {
    let (m, n) = a.shape();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.to_vec();
    let col_sq: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    for _ in 0..100_000 {
        let mut max_change = 0.0f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho: f64 = (0..m).map(|i| a[(i, j)] * r[i]).sum::<f64>() + col_sq[j] * x[j];
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / col_sq[j];
            let d = new - x[j];
            if d != 0.0 {
                for i in 0..m {
                    r[i] -= a[(i, j)] * d;
                }
                x[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        if max_change < 1e-13 {
            break;
        }
    }
    x
}

fn degenerate_paths() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let a = DMatrix::from_fn(40, 60, |_, _| rng.random_range(-1.0..1.0));
    let (a, _) = normalize_columns(&DesignMatrix::from_dense(a));
    let b: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
    let base = Problem::new(a.clone(), b.clone(), 0.0, 0.0).unwrap();
    let lmax = base.atb_inf_norm();
    let dense = a.to_dense();
    let mut worst = 0.0f64;
    let params = AlmParams {
        kkt_tol: 1e-10,
        ..Default::default()
    };
    for frac in [0.9, 0.5, 0.2, 0.1, 0.05] {
        let p = base.with_weights(frac * lmax, 0.0).unwrap();
        let out = ssnal_solve(&p, &params).map_err(|e| e.to_string())?;
        let reference = lasso_cd(&dense, &b, frac * lmax);
        let f_ref = primal_objective(&reference, &p).unwrap();
        let gap = (out.report.primal_obj - f_ref).abs() / (1.0 + f_ref.abs());
        worst = worst.max(gap);
    }
    ensure(worst <= 1e-8, || format!("lasso path objective gap {worst:.2e}"))?;

    let tv = base.with_weights(0.0, 0.1 * lmax).unwrap();
    let out = ssnal_solve(&tv, &AlmParams::default()).map_err(|e| e.to_string())?;
    ensure(out.report.status.is_optimal() && kkt_residual(&out.x, &tv).unwrap() <= 1e-6, || {
        format!("pure TV regularized: eta {:.2e}", out.report.eta)
    })?;
    ensure(
        matches!(levelset_solve(&tv, 0.5 * tv.b_norm(), &LevelSetParams::default()), Err(Error::PureTvConstrained)),
        || "pure TV constrained mode did not raise".into(),
    )?;

    let p = base.with_weights(1.0, 1.0).unwrap();
    let start = Instant::now();
    let out = levelset_solve(&p, p.b_norm(), &LevelSetParams::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(out.iterations == 0 && out.x.iter().all(|&v| v == 0.0) && secs < 0.1, || {
        "delta >= ||b|| did not return x = 0 at once".into()
    })?;
    Ok(format!("lasso path gap {worst:.1e}, pure TV eta {:.1e}, delta>=||b|| in {secs:.1e}s", out.report.eta))
}

fn real_data_spot_check() -> Option<Outcome> {
    let path = std::env::var_os("FUSED_KITE_REAL_DATA")?;
    let run = || -> Outcome {
        let path = std::path::PathBuf::from(path);
        let (a, b) = read_data(&path, DataFormat::from_path(&path)).map_err(|e| e.to_string())?;
        let (a, _) = normalize_columns(&a);
        let (l1, l2) = lambda_from_alphas(&a, &b, 1e-3, 1.0).map_err(|e| e.to_string())?;
        let p = Problem::new(a, b, l1, l2).map_err(|e| e.to_string())?;
        let out = ssnal_solve(&p, &AlmParams::default()).map_err(|e| e.to_string())?;
        ensure(out.report.eta <= 1e-6, || format!("eta {:.2e}", out.report.eta))?;
        ensure(
            out.report.nnz_x == nnz_estimate(&out.x) && out.report.nnz_bx == nnz_estimate(&apply_b(&out.x)),
            || "nnz fields disagree with the estimator".into(),
        )?;
        Ok(format!(
            "eta {:.2e}, nnz(x) {}, nnz(Bx) {}",
            out.report.eta, out.report.nnz_x, out.report.nnz_bx
        ))
    };
    Some(run())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("prox oracle suite", prox_oracle_suite),
        ("jacobian structural suite", jacobian_structural_suite),
        ("local-affine identity", local_affine_identity),
        ("gradient check", gradient_check),
        ("newton strategy equivalence", newton_strategy_equivalence),
        ("solver convergence", solver_convergence),
        ("cross-solver agreement", cross_solver_agreement),
        ("superlinear tail", superlinear_tail),
        ("level-set", levelset_suite),
        ("degenerate paths", degenerate_paths),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} [{secs:.2}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.2}s]: {detail}");
            }
        }
    }
    match real_data_spot_check() {
        Some(Ok(detail)) => println!("PASS  real-data spot check (optional): {detail}"),
        Some(Err(detail)) => {
            failed += 1;
            println!("FAIL  real-data spot check (optional): {detail}");
        }
        None => println!("SKIP  real-data spot check (optional): FUSED_KITE_REAL_DATA not set"),
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
