//! First-order reference solvers
//!
//! All of them stop on the same relative KKT residual as SSNAL.
//!
//! * ADMM on the dual splitting `min ½‖y‖² + ⟨b,y⟩ + p*(u)  s.t.  Aᵀy + u = 0`,
//!   with an exact (factorized) or inexact (CG) `y`-update.
//! * Linearized ADMM, where the `y`-update is a single proximal-gradient step.
//! * FISTA on the primal.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alm::nnz_estimate;
use crate::error::{Error, Result};
use crate::linops::{apply_b, DesignMatrix};
use crate::problem::Problem;
use crate::prox::fused_prox_unchecked;
use crate::report::{IterRecord, SolveReport, SolveStatus, SolverKind};
use crate::vecops::{axpy, dist2, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmmMode {
    Exact,
    Inexact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    pub tol: f64,
    pub max_iter: usize,
    pub time_limit: Option<f64>,
    /// Initial ADMM penalty.
    pub sigma0: f64,
    /// Multiplier step length, in `(0, (1+√5)/2)`.
    pub step: f64,
    /// Residual balancing of `σ` every `sigma_update_every` iterations (0 disables).
    pub sigma_update_every: usize,
    /// Linearization constant factor: `τ_lin = lin_factor · σ · ‖A‖₂²`.
    pub lin_factor: f64,
    /// FISTA restart when the objective increases.
    pub apg_restart: bool,
    /// Keep every `trace_every`-th iterate in the trace (0 disables).
    pub trace_every: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 20000,
            time_limit: None,
            sigma0: 1.0,
            step: 1.618,
            sigma_update_every: 10,
            lin_factor: 1.01,
            apg_restart: false,
            trace_every: 0,
        }
    }
}

impl BaselineParams {
    fn validate(&self) -> Result<()> {
        let golden = 0.5 * (1.0 + 5f64.sqrt());
        if !(self.step > 0.0 && self.step < golden) {
            return Err(Error::InvalidParameter(format!(
                "ADMM step must lie in (0, {golden:.6}), got {}",
                self.step
            )));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::InvalidParameter("sigma0 must be finite and positive".into()));
        }
        if !(self.lin_factor >= 1.0) {
            return Err(Error::InvalidParameter("lin_factor must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutput {
    pub x: Vec<f64>,
    pub report: SolveReport,
    pub trace: Vec<IterRecord>,
    /// `‖Aᵀy + u‖` at exit (ADMM variants only).
    pub constraint_residual: Option<f64>,
}

/// Estimate of `‖A‖₂²` by power iteration on `AᵀA` from a fixed random start.
/// The flag reports whether the relative change fell below `tol`.
pub fn power_method_norm(a: &DesignMatrix, tol: f64, max_iter: usize) -> (f64, bool) {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return (0.0, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![0.0; a.nrows()];
    let mut w = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..max_iter {
        a.mat_vec_into(&v, &mut av);
        a.rmat_vec_into(&av, &mut w);
        let new = norm2(&w);
        if new == 0.0 {
            return (0.0, true);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / new;
        }
        if (new - est).abs() <= tol * new {
            return (new, true);
        }
        est = new;
    }
    (est, false)
}

/// Shared stopping and reporting logic.
struct Monitor<'a> {
    problem: &'a Problem,
    params: &'a BaselineParams,
    start: Instant,
    trace: Vec<IterRecord>,
}

impl<'a> Monitor<'a> {
    fn new(problem: &'a Problem, params: &'a BaselineParams) -> Self {
        Self {
            problem,
            params,
            start: Instant::now(),
            trace: Vec::new(),
        }
    }

    /// `(η, objective)` given `x` and `r = Ax − b`.
    fn kkt(&self, x: &[f64], r: &[f64]) -> (f64, f64) {
        let mut v = vec![0.0; x.len()];
        self.problem.a().rmat_vec_into(r, &mut v);
        for (vi, xi) in v.iter_mut().zip(x) {
            *vi = xi - *vi;
        }
        let pen = self.problem.penalty();
        let p = fused_prox_unchecked(&v, pen.lambda1, pen.lambda2);
        let rn = norm2(r);
        (
            dist2(x, &p.x) / (1.0 + norm2(x) + rn),
            0.5 * rn * rn + pen.value(x),
        )
    }

    fn record(&mut self, iter: usize, eta: f64, obj: f64, sigma: f64) {
        let every = self.params.trace_every;
        if every > 0 && iter.is_multiple_of(every) {
            self.trace.push(IterRecord {
                iter,
                eta,
                primal_obj: obj,
                sigma,
                inner_iters: None,
                criteria: None,
                inner_grad_norms: Vec::new(),
            });
        }
    }

    fn out_of_time(&self) -> bool {
        self.params
            .time_limit
            .is_some_and(|t| self.start.elapsed().as_secs_f64() > t)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        solver: SolverKind,
        status: SolveStatus,
        x: Vec<f64>,
        eta: f64,
        obj: f64,
        iters: usize,
        cg_iters: usize,
        dual: Option<&[f64]>,
        constraint_residual: Option<f64>,
    ) -> BaselineOutput {
        let b = self.problem.b();
        let report = SolveReport {
            solver,
            status,
            eta,
            primal_obj: obj,
            dual_quadratic: dual.map(|y| 0.5 * dot(y, y) + dot(y, b)),
            outer_iters: iters,
            ssn_iters: 0,
            cg_iters,
            nnz_x: nnz_estimate(&x),
            nnz_bx: nnz_estimate(&apply_b(&x)),
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        BaselineOutput {
            x,
            report,
            trace: self.trace,
            constraint_residual,
        }
    }
}

/// Solver for `(I + σAAᵀ) y = rhs`.
enum YSolver {
    /// Cholesky of `I + σAAᵀ` (`m ≤ n`).
    Primal(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// Cholesky of `σ⁻¹I + AᵀA`, used through Woodbury (`n < m`).
    Woodbury(nalgebra::Cholesky<f64, nalgebra::Dyn>, DMatrix<f64>),
    Cg,
}

const EXACT_DIM_CAP: usize = 8000;

impl YSolver {
    fn factor(a: &DesignMatrix, sigma: f64) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        if m.min(n) > EXACT_DIM_CAP {
            return Err(Error::Factorization(format!(
                "exact ADMM needs a {0}x{0} factorization; use the inexact mode",
                m.min(n)
            )));
        }
        let dense = a.to_dense();
        let fail = || Error::Factorization("I + sigma*A*A^T is not numerically positive definite; use the inexact mode".into());
        if m <= n {
            let mut k = DMatrix::identity(m, m);
            k.gemm(sigma, &dense, &dense.transpose(), 1.0);
            Ok(YSolver::Primal(k.cholesky().ok_or_else(fail)?))
        } else {
            let mut k = dense.tr_mul(&dense);
            for i in 0..n {
                k[(i, i)] += 1.0 / sigma;
            }
            Ok(YSolver::Woodbury(k.cholesky().ok_or_else(fail)?, dense))
        }
    }

    /// Solves in place; `y` holds the warm start for CG. Returns CG iterations.
    fn solve(&self, a: &DesignMatrix, sigma: f64, rhs: &[f64], y: &mut [f64], cg_tol: f64) -> usize {
        match self {
            YSolver::Primal(ch) => {
                let s = ch.solve(&DVector::from_column_slice(rhs));
                y.copy_from_slice(s.as_slice());
                0
            }
            YSolver::Woodbury(ch, dense) => {
                let r = DVector::from_column_slice(rhs);
                let t = ch.solve(&dense.tr_mul(&r));
                let s = r - dense * t;
                y.copy_from_slice(s.as_slice());
                0
            }
            YSolver::Cg => cg_shifted_gram(a, sigma, rhs, y, cg_tol, 10 * a.nrows().max(50)),
        }
    }
}

/// CG on `(I + σAAᵀ) y = rhs` from the given `y`, stopping once the residual
/// drops below `rel_tol` times its starting value.
fn cg_shifted_gram(
    a: &DesignMatrix,
    sigma: f64,
    rhs: &[f64],
    y: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> usize {
    let (m, n) = (a.nrows(), a.ncols());
    let mut tmp = vec![0.0; n];
    let apply = |v: &[f64], out: &mut [f64], tmp: &mut [f64]| {
        a.rmat_vec_into(v, tmp);
        a.mat_vec_into(tmp, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi + sigma * *o;
        }
    };
    let mut r = vec![0.0; m];
    apply(y, &mut r, &mut tmp);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut q = vec![0.0; m];
    let mut rr = dot(&r, &r);
    let tol = (rel_tol * rr.sqrt()).max(1e-15 * norm2(rhs));
    let mut it = 0;
    while rr.sqrt() > tol && it < max_iter {
        apply(&p, &mut q, &mut tmp);
        let alpha = rr / dot(&p, &q);
        axpy(alpha, &p, y);
        axpy(-alpha, &q, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        it += 1;
    }
    it
}

/// Dual ADMM; `Exact` factorizes `I + σAAᵀ` (refactorized whenever `σ`
/// changes), `Inexact` runs warm-started CG until the residual has shrunk by
/// `min(0.1, k^{-1.5})`.
pub fn admm_solve(problem: &Problem, params: &BaselineParams, mode: AdmmMode) -> Result<BaselineOutput> {
    params.validate()?;
    let a = problem.a();
    let (m, n) = (problem.m(), problem.n());
    let pen = problem.penalty();
    let mut mon = Monitor::new(problem, params);
    let mut sigma = params.sigma0;
    let mut ysolver = match mode {
        AdmmMode::Exact => YSolver::factor(a, sigma)?,
        AdmmMode::Inexact => YSolver::Cg,
    };

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; m];
    let mut u = vec![0.0; n];
    let mut aty = vec![0.0; n];
    let mut r = problem.residual(&x);
    let (mut eta, mut obj) = mon.kkt(&x, &r);
    let mut ax = vec![0.0; m];
    let mut au = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut cg_total = 0;
    let mut iters = 0;
    let mut status = if eta <= params.tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    let mut cres = 0.0;

    while status != SolveStatus::Optimal && iters < params.max_iter {
        if mon.out_of_time() {
            status = SolveStatus::TimeLimit;
            break;
        }
        iters += 1;
        // y-update: (I + σAAᵀ) y = Ax − b − σAu
        a.mat_vec_into(&u, &mut au);
        for i in 0..m {
            ax[i] = r[i] + problem.b()[i];
            rhs[i] = r[i] - sigma * au[i];
        }
        let cg_tol = (0.1f64).min((iters as f64).powf(-1.5));
        cg_total += ysolver.solve(a, sigma, &rhs, &mut y, cg_tol);
        a.rmat_vec_into(&y, &mut aty);

        // u-update: u = Prox_{p*/σ}(x/σ − Aᵀy) = (w − Prox_{σp}(w))/σ, w = x − σAᵀy
        let w: Vec<f64> = x.iter().zip(&aty).map(|(xi, ai)| xi - sigma * ai).collect();
        let ps = fused_prox_unchecked(&w, sigma * pen.lambda1, sigma * pen.lambda2);
        let u_old = std::mem::take(&mut u);
        u = w.iter().zip(&ps.x).map(|(wi, pi)| (wi - pi) / sigma).collect();

        // multiplier update
        let mut prim = 0.0;
        for j in 0..n {
            let c = aty[j] + u[j];
            prim += c * c;
            x[j] -= params.step * sigma * c;
        }
        cres = prim.sqrt();

        r = problem.residual(&x);
        (eta, obj) = mon.kkt(&x, &r);
        mon.record(iters, eta, obj, sigma);
        if eta <= params.tol {
            status = SolveStatus::Optimal;
            break;
        }

        if params.sigma_update_every > 0 && iters % params.sigma_update_every == 0 {
            let du: Vec<f64> = u.iter().zip(&u_old).map(|(a, b)| a - b).collect();
            let mut adu = vec![0.0; m];
            a.mat_vec_into(&du, &mut adu);
            let dual = sigma * norm2(&adu);
            let new_sigma = if cres > 10.0 * dual {
                sigma * 2.0
            } else if dual > 10.0 * cres {
                sigma / 2.0
            } else {
                sigma
            };
            if new_sigma != sigma {
                sigma = new_sigma.clamp(1e-6, 1e8);
                if mode == AdmmMode::Exact {
                    ysolver = YSolver::factor(a, sigma)?;
                }
            }
        }
    }
    let kind = match mode {
        AdmmMode::Exact => SolverKind::Admm,
        AdmmMode::Inexact => SolverKind::Iadmm,
    };
    Ok(mon.finish(kind, status, x, eta, obj, iters, cg_total, Some(&y), Some(cres)))
}

/// Linearized ADMM: the `y`-subproblem is replaced by one proximal step with
/// constant `τ_lin = lin_factor·σ·‖A‖₂²`.
pub fn ladmm_solve(problem: &Problem, params: &BaselineParams) -> Result<BaselineOutput> {
    params.validate()?;
    let a = problem.a();
    let (m, n) = (problem.m(), problem.n());
    let pen = problem.penalty();
    let (lip, _) = power_method_norm(a, 1e-6, 1000);
    let lip = lip * 1.01;
    let mut mon = Monitor::new(problem, params);
    let mut sigma = params.sigma0;

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; m];
    let mut u = vec![0.0; n];
    let mut aty = vec![0.0; n];
    let mut r = problem.residual(&x);
    let (mut eta, mut obj) = mon.kkt(&x, &r);
    let mut grad = vec![0.0; m];
    let mut iters = 0;
    let mut status = if eta <= params.tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };
    let mut cres = 0.0;
    let mut cons = vec![0.0; n];

    while status != SolveStatus::Optimal && iters < params.max_iter {
        if mon.out_of_time() {
            status = SolveStatus::TimeLimit;
            break;
        }
        iters += 1;
        let tau_lin = params.lin_factor * sigma * lip;
        // y ← argmin ½‖y‖² + ⟨b − Ax, y⟩ + σ⟨A(Aᵀyᵏ + u), y⟩ + (τ/2)‖y − yᵏ‖²
        for j in 0..n {
            cons[j] = aty[j] + u[j];
        }
        a.mat_vec_into(&cons, &mut grad);
        for i in 0..m {
            y[i] = (r[i] - sigma * grad[i] + tau_lin * y[i]) / (1.0 + tau_lin);
        }
        a.rmat_vec_into(&y, &mut aty);

        let w: Vec<f64> = x.iter().zip(&aty).map(|(xi, ai)| xi - sigma * ai).collect();
        let ps = fused_prox_unchecked(&w, sigma * pen.lambda1, sigma * pen.lambda2);
        let u_old = std::mem::take(&mut u);
        u = w.iter().zip(&ps.x).map(|(wi, pi)| (wi - pi) / sigma).collect();

        let mut prim = 0.0;
        for j in 0..n {
            let c = aty[j] + u[j];
            prim += c * c;
            x[j] -= params.step * sigma * c;
        }
        cres = prim.sqrt();

        r = problem.residual(&x);
        (eta, obj) = mon.kkt(&x, &r);
        mon.record(iters, eta, obj, sigma);
        if eta <= params.tol {
            status = SolveStatus::Optimal;
            break;
        }
        if params.sigma_update_every > 0 && iters % params.sigma_update_every == 0 {
            let du: Vec<f64> = u.iter().zip(&u_old).map(|(a, b)| a - b).collect();
            let mut adu = vec![0.0; m];
            a.mat_vec_into(&du, &mut adu);
            let dual = sigma * norm2(&adu);
            if cres > 10.0 * dual {
                sigma = (sigma * 2.0).min(1e8);
            } else if dual > 10.0 * cres {
                sigma = (sigma / 2.0).max(1e-6);
            }
        }
    }
    Ok(mon.finish(SolverKind::Ladmm, status, x, eta, obj, iters, 0, Some(&y), Some(cres)))
}

/// FISTA with step `1/L`, `L = 1.01·‖A‖₂²` from the power method.
pub fn apg_solve(problem: &Problem, params: &BaselineParams) -> Result<BaselineOutput> {
    let a = problem.a();
    let n = problem.n();
    let pen = problem.penalty();
    let (lip, _) = power_method_norm(a, 1e-6, 1000);
    let lip = (lip * 1.01).max(f64::MIN_POSITIVE);
    let mut mon = Monitor::new(problem, params);

    let mut x = vec![0.0; n];
    let mut w = x.clone();
    let mut t = 1.0f64;
    let mut r = problem.residual(&x);
    let (mut eta, mut obj) = mon.kkt(&x, &r);
    let mut grad = vec![0.0; n];
    let mut iters = 0;
    let mut status = if eta <= params.tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIter
    };

    while status != SolveStatus::Optimal && iters < params.max_iter {
        if mon.out_of_time() {
            status = SolveStatus::TimeLimit;
            break;
        }
        iters += 1;
        let rw = problem.residual(&w);
        a.rmat_vec_into(&rw, &mut grad);
        let v: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi - gi / lip).collect();
        let x_new = fused_prox_unchecked(&v, pen.lambda1 / lip, pen.lambda2 / lip).x;
        let r_new = problem.residual(&x_new);
        let (eta_new, obj_new) = mon.kkt(&x_new, &r_new);

        if params.apg_restart && obj_new > obj {
            // restart momentum from the current point
            t = 1.0;
            w.clone_from(&x);
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        for j in 0..n {
            w[j] = x_new[j] + beta * (x_new[j] - x[j]);
        }
        t = t_new;
        x = x_new;
        r = r_new;
        (eta, obj) = (eta_new, obj_new);
        mon.record(iters, eta, obj, 1.0 / lip);
        if eta <= params.tol {
            status = SolveStatus::Optimal;
        }
    }
    let _ = r;
    Ok(mon.finish(SolverKind::Apg, status, x, eta, obj, iters, 0, None, None))
}

/// Dispatch on [`SolverKind`] with SSNAL excluded.
pub fn run_baseline(kind: SolverKind, problem: &Problem, params: &BaselineParams) -> Result<BaselineOutput> {
    match kind {
        SolverKind::Admm => admm_solve(problem, params, AdmmMode::Exact),
        SolverKind::Iadmm => admm_solve(problem, params, AdmmMode::Inexact),
        SolverKind::Ladmm => ladmm_solve(problem, params),
        SolverKind::Apg => apg_solve(problem, params),
        SolverKind::Ssnal => Err(Error::InvalidParameter("ssnal is not a baseline".into())),
    }
}
