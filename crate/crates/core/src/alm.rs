//! Semismooth Newton augmented Lagrangian method (SSNAL) on the dual
//!
//! ```text
//! min_y ½‖y‖² + ⟨b, y⟩ + p*(−Aᵀy)
//! ```
//!
//! Each outer step minimizes `Ψ_k(y) = 𝓛_{σ_k}(y; x^k)` inexactly with
//! [`crate::ssn`], then sets `x^{k+1} = Prox_{σ_k p}(x^k − σ_k Aᵀy^{k+1})`.
//! The iteration stops on the relative KKT residual of `x`.

use std::time::Instant;

use crate::error::{check_len, Error, Result};
use crate::linops::apply_b;
use crate::problem::Problem;
use crate::prox::fused_prox_unchecked;
use crate::report::{InnerCriteria, IterRecord, SolveReport, SolveStatus, SolverKind};
use crate::ssn::{ssn_iterate, InnerProblem, SsnParams, SsnStatus};
use crate::vecops::{dist2, dot, norm1, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct AlmParams {
    pub sigma0: f64,
    pub sigma_growth: f64,
    pub sigma_max: f64,
    /// `ε_k = eps0 · eps_rate^k`
    pub eps0: f64,
    pub eps_rate: f64,
    /// `δ_k = delta0 · delta_rate^k`
    pub delta0: f64,
    pub delta_rate: f64,
    /// `δ'_k = delta_prime0 / (k + 1)`
    pub delta_prime0: f64,
    pub kkt_tol: f64,
    pub max_outer: usize,
    pub time_limit: Option<f64>,
    /// Inner solves also stop once `‖∇Ψ‖` drops below
    /// `inner_floor · (1 + ‖b‖)`, where rounding dominates the three criteria.
    pub inner_floor: f64,
    pub ssn: SsnParams,
    pub record_trace: bool,
}

impl Default for AlmParams {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            sigma_growth: 3.0,
            sigma_max: 1e6,
            eps0: 1.0,
            eps_rate: 0.5,
            delta0: 1.0,
            delta_rate: 0.5,
            delta_prime0: 1.0,
            kkt_tol: 1e-6,
            max_outer: 100,
            time_limit: None,
            inner_floor: 1e-13,
            ssn: SsnParams::default(),
            record_trace: true,
        }
    }
}

impl AlmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("ALM parameter {what}")));
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad("sigma0 must be finite and positive");
        }
        if !(self.sigma_growth >= 1.0) {
            return bad("sigma_growth must be at least 1");
        }
        if !(self.sigma_max >= self.sigma0) {
            return bad("sigma_max must be at least sigma0");
        }
        if !(self.eps0 > 0.0 && self.delta0 > 0.0 && self.delta_prime0 > 0.0) {
            return bad("tolerance sequences must be positive");
        }
        if !(self.eps_rate > 0.0 && self.eps_rate < 1.0 && self.delta_rate > 0.0 && self.delta_rate < 1.0) {
            return bad("sequence rates must lie in (0, 1) for summability");
        }
        if !(self.kkt_tol >= 0.0) {
            return bad("kkt_tol must be nonnegative");
        }
        self.ssn.validate()
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.eps0 * self.eps_rate.powi(k as i32)
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.delta0 * self.delta_rate.powi(k as i32)
    }

    pub fn delta_prime(&self, k: usize) -> f64 {
        self.delta_prime0 / (k as f64 + 1.0)
    }
}

/// `min(σ_max, growth · σ)`
pub fn sigma_schedule(prev_sigma: f64, params: &AlmParams) -> f64 {
    (params.sigma_growth * prev_sigma).min(params.sigma_max)
}

/// `η = ‖x − Prox_p(x − Aᵀ(Ax − b))‖ / (1 + ‖x‖ + ‖Ax − b‖)`
pub fn kkt_residual(x: &[f64], problem: &Problem) -> Result<f64> {
    check_len("kkt_residual", problem.n(), x.len())?;
    Ok(kkt_parts(x, problem).0)
}

/// `(η, ½‖Ax − b‖² + p(x))` sharing one residual.
fn kkt_parts(x: &[f64], problem: &Problem) -> (f64, f64) {
    let r = problem.residual(x);
    let mut v = vec![0.0; problem.n()];
    problem.a().rmat_vec_into(&r, &mut v);
    for (vi, xi) in v.iter_mut().zip(x) {
        *vi = xi - *vi;
    }
    let pen = problem.penalty();
    let p = fused_prox_unchecked(&v, pen.lambda1, pen.lambda2);
    let rn = norm2(&r);
    let eta = dist2(x, &p.x) / (1.0 + norm2(x) + rn);
    (eta, 0.5 * rn * rn + pen.value(x))
}

/// `½‖Ax − b‖² + λ₁‖x‖₁ + λ₂‖Bx‖₁`
pub fn primal_objective(x: &[f64], problem: &Problem) -> Result<f64> {
    check_len("primal_objective", problem.n(), x.len())?;
    let r = problem.residual(x);
    Ok(0.5 * dot(&r, &r) + problem.penalty().value(x))
}

/// Smallest `k` such that the `k` largest magnitudes carry 99.9% of `‖y‖₁`.
pub fn nnz_estimate(y: &[f64]) -> usize {
    let total = norm1(y);
    if total == 0.0 {
        return 0;
    }
    let mut mags: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let target = 0.999 * total;
    let mut acc = 0.0;
    for (k, v) in mags.iter().enumerate() {
        acc += v;
        if acc >= target {
            return k + 1;
        }
    }
    mags.len()
}

/// Result of [`ssnal_solve`].
#[derive(Debug, Clone)]
pub struct AlmOutput {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub report: SolveReport,
    pub trace: Vec<IterRecord>,
    /// Final `σ`, for callers that chain solves.
    pub sigma: f64,
}

pub fn ssnal_solve(problem: &Problem, params: &AlmParams) -> Result<AlmOutput> {
    ssnal_solve_from(problem, params, None, None)
}

/// [`ssnal_solve`] from a given `(x⁰, y⁰)`; missing parts default to zero.
pub fn ssnal_solve_from(
    problem: &Problem,
    params: &AlmParams,
    x0: Option<&[f64]>,
    y0: Option<&[f64]>,
) -> Result<AlmOutput> {
    params.validate()?;
    let (m, n) = (problem.m(), problem.n());
    let mut x = match x0 {
        Some(x0) => {
            check_len("ssnal_solve x0", n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut y = match y0 {
        Some(y0) => {
            check_len("ssnal_solve y0", m, y0.len())?;
            y0.to_vec()
        }
        None => vec![0.0; m],
    };

    let start = Instant::now();
    let floor = params.inner_floor * (1.0 + problem.b_norm());
    let mut sigma = params.sigma0;
    let mut trace = Vec::new();
    let (mut ssn_iters, mut cg_iters) = (0, 0);
    let (mut eta, mut obj) = kkt_parts(&x, problem);
    let mut status = SolveStatus::MaxIter;
    let mut outer = 0;
    let mut stalls = 0;

    // A warm start may already be optimal; a cold start always takes one step
    // so that the returned pair is consistent.
    if x0.is_some() && eta <= params.kkt_tol {
        status = SolveStatus::Optimal;
    }

    while status != SolveStatus::Optimal && outer < params.max_outer {
        if let Some(limit) = params.time_limit {
            if start.elapsed().as_secs_f64() > limit {
                status = SolveStatus::TimeLimit;
                break;
            }
        }
        let k = outer;
        let sq = sigma.sqrt();
        let (bound_a, c_b1, c_b2) = (
            params.eps(k) / sq,
            params.delta(k) / sq,
            params.delta_prime(k) / sigma,
        );
        let x_k = x.clone();
        let inner = InnerProblem::new(problem, &x_k, sigma)?;
        let mut point = inner.eval(std::mem::take(&mut y));
        let mut floor_hit = false;
        let mut stop = |g: f64, u: &[f64]| {
            if g <= floor {
                floor_hit = true;
                return true;
            }
            let dx = dist2(u, &x_k);
            g <= bound_a && g <= c_b1 * dx && g <= c_b2 * dx
        };
        let (ssn_status, stats) = ssn_iterate(&inner, &mut point, &mut stop, &params.ssn)?;
        ssn_iters += stats.iterations;
        cg_iters += stats.cg_iters;
        if ssn_status == SsnStatus::LineSearchFailed {
            stalls += 1;
        }

        let dx = dist2(&point.prox.x, &x_k);
        let criteria = InnerCriteria {
            grad_norm: point.grad_norm,
            bound_a,
            bound_b1: c_b1 * dx,
            bound_b2: c_b2 * dx,
            floor_hit: floor_hit && !(point.grad_norm <= bound_a.min(c_b1 * dx).min(c_b2 * dx)),
        };
        x = point.prox.x;
        y = point.y;
        outer += 1;
        (eta, obj) = kkt_parts(&x, problem);
        log::debug!(
            "ssnal k={k} sigma={sigma:.3e} eta={eta:.3e} obj={obj:.6e} ssn={} |g|={:.3e}",
            stats.iterations,
            criteria.grad_norm
        );
        if params.record_trace {
            trace.push(IterRecord {
                iter: outer,
                eta,
                primal_obj: obj,
                sigma,
                inner_iters: Some(stats.iterations),
                criteria: Some(criteria),
                inner_grad_norms: stats.grad_norms,
            });
        }
        if eta <= params.kkt_tol {
            status = SolveStatus::Optimal;
        } else if stalls >= 3 && ssn_status == SsnStatus::LineSearchFailed {
            status = SolveStatus::Stalled;
            break;
        }
        sigma = sigma_schedule(sigma, params);
    }

    let report = SolveReport {
        solver: SolverKind::Ssnal,
        status,
        eta,
        primal_obj: obj,
        dual_quadratic: Some(0.5 * dot(&y, &y) + dot(&y, problem.b())),
        outer_iters: outer,
        ssn_iters,
        cg_iters,
        nnz_x: nnz_estimate(&x),
        nnz_bx: nnz_estimate(&apply_b(&x)),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(AlmOutput {
        x,
        y,
        report,
        trace,
        sigma,
    })
}
