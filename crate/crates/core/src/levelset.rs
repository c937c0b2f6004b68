//! Level-set method for the constrained problem
//!
//! ```text
//! min λ₁‖x‖₁ + λ₂‖Bx‖₁   s.t.  ‖Ax − b‖ ≤ δ
//! ```
//!
//! The value function `φ(μ) = ‖Ax*(μ) − b‖`, with `x*(μ)` solving the
//! regularized problem at weights `(μλ₁, μλ₂)`, is nondecreasing in `μ` and
//! equals `‖b‖` for `μ ≥ ‖Aᵀb‖∞/λ₁`. Bisection finds `φ(μ) = δ`, each probe
//! warm-started from the previous one.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alm::{nnz_estimate, ssnal_solve_from, AlmParams};
use crate::error::{Error, Result};
use crate::linops::apply_b;
use crate::problem::Problem;
use crate::report::{SolveReport, SolveStatus, SolverKind};
use crate::vecops::norm2;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetParams {
    /// Stop when `|φ − δ| / max(1, δ) ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// KKT tolerance of each probe.
    pub inner_tol: f64,
    /// Start each probe from the previous solution.
    pub warm_start: bool,
    pub alm: AlmParams,
}

impl Default for LevelSetParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 60,
            inner_tol: 1e-8,
            warm_start: true,
            alm: AlmParams {
                record_trace: false,
                ..AlmParams::default()
            },
        }
    }
}

/// One bisection probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub k: usize,
    pub mu: f64,
    pub phi: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub outer_iters: usize,
    pub ssn_iters: usize,
}

#[derive(Debug, Clone)]
pub struct LevelSetOutput {
    pub x: Vec<f64>,
    /// Scale of `(λ₁, λ₂)` at the returned point.
    pub mu: f64,
    pub phi: f64,
    pub delta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<Probe>,
    /// Aggregate over all probes; `eta` is the KKT residual of the last probe.
    pub report: SolveReport,
}

/// `‖Aᵀb‖∞ / λ₁`, beyond which `x = 0` solves every probe.
pub fn mu_upper_bound(problem: &Problem) -> Result<f64> {
    if problem.lambda1() <= 0.0 {
        return Err(Error::PureTvConstrained);
    }
    Ok(problem.atb_inf_norm() / problem.lambda1())
}

/// Solution of one probe.
#[derive(Debug, Clone)]
pub struct PhiEval {
    pub phi: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub report: SolveReport,
}

/// `φ(μ)` by solving the regularized problem with weights `(μλ₁, μλ₂)`.
pub fn phi_eval(
    mu: f64,
    problem: &Problem,
    warm: Option<(&[f64], &[f64])>,
    params: &LevelSetParams,
) -> Result<PhiEval> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be finite and nonnegative, got {mu}")));
    }
    let probe = problem.with_weights(mu * problem.lambda1(), mu * problem.lambda2())?;
    let alm = AlmParams {
        kkt_tol: params.inner_tol,
        ..params.alm.clone()
    };
    let (x0, y0) = match warm {
        Some((x, y)) => (Some(x), Some(y)),
        None => (None, None),
    };
    let out = ssnal_solve_from(&probe, &alm, x0, y0)?;
    let phi = norm2(&probe.residual(&out.x));
    Ok(PhiEval {
        phi,
        x: out.x,
        y: out.y,
        report: out.report,
    })
}

pub fn levelset_solve(problem: &Problem, delta: f64, params: &LevelSetParams) -> Result<LevelSetOutput> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be finite and positive, got {delta}")));
    }
    let mu_inf = mu_upper_bound(problem)?;
    let start = Instant::now();
    let n = problem.n();
    let b_norm = problem.b_norm();
    let scale = delta.max(1.0);

    let mut report = SolveReport {
        solver: SolverKind::Ssnal,
        status: SolveStatus::Optimal,
        eta: 0.0,
        primal_obj: 0.0,
        dual_quadratic: None,
        outer_iters: 0,
        ssn_iters: 0,
        cg_iters: 0,
        nnz_x: 0,
        nnz_bx: 0,
        wall_time_s: 0.0,
    };

    if delta >= b_norm {
        report.wall_time_s = start.elapsed().as_secs_f64();
        return Ok(LevelSetOutput {
            x: vec![0.0; n],
            mu: mu_inf,
            phi: b_norm,
            delta,
            iterations: 0,
            converged: true,
            trace: Vec::new(),
            report,
        });
    }

    let (mut lo, mut hi) = (0.0, mu_inf);
    let mut trace = Vec::new();
    let mut warm: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut best: Option<(f64, PhiEval)> = None;
    let mut converged = false;
    let mut k = 0;

    while k < params.max_iter {
        k += 1;
        let mu = 0.5 * (lo + hi);
        let w = if params.warm_start {
            warm.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice()))
        } else {
            None
        };
        let ev = phi_eval(mu, problem, w, params)?;
        report.outer_iters += ev.report.outer_iters;
        report.ssn_iters += ev.report.ssn_iters;
        report.cg_iters += ev.report.cg_iters;
        if ev.report.status == SolveStatus::Stalled {
            report.status = SolveStatus::Stalled;
        }
        if ev.phi > delta {
            hi = mu;
        } else {
            lo = mu;
        }
        trace.push(Probe {
            k,
            mu,
            phi: ev.phi,
            mu_lo: lo,
            mu_hi: hi,
            outer_iters: ev.report.outer_iters,
            ssn_iters: ev.report.ssn_iters,
        });
        log::debug!("levelset k={k} mu={mu:.6e} phi={:.9e} delta={delta:.9e}", ev.phi);
        let done = (ev.phi - delta).abs() / scale <= params.tol;
        if params.warm_start {
            warm = Some((ev.x.clone(), ev.y.clone()));
        }
        best = Some((mu, ev));
        if done {
            converged = true;
            break;
        }
    }

    if !converged && lo == 0.0 {
        // every probe overshot δ: the target may be below the least-squares floor
        let ls = phi_eval(0.0, problem, None, params)?;
        if ls.phi - delta > params.tol * scale {
            return Err(Error::InfeasibleDelta {
                delta,
                floor: ls.phi,
            });
        }
    }

    let (mu, ev) = best.expect("at least one probe when delta < ||b||");
    report.status = if converged {
        report.status
    } else {
        SolveStatus::MaxIter
    };
    report.eta = ev.report.eta;
    report.primal_obj = problem.penalty().value(&ev.x);
    report.nnz_x = nnz_estimate(&ev.x);
    report.nnz_bx = nnz_estimate(&apply_b(&ev.x));
    report.dual_quadratic = ev.report.dual_quadratic;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(LevelSetOutput {
        x: ev.x,
        mu,
        phi: ev.phi,
        delta,
        iterations: k,
        converged,
        trace,
        report,
    })
}
