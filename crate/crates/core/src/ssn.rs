//! Semismooth Newton solver for the augmented Lagrangian subproblem
//!
//! ```text
//! min_y Ψ(y) = ½‖y‖² + ⟨b, y⟩ + (‖w‖² − ‖x̃‖²)/(2σ) − e_{σp}(w),   w = x̃ − σAᵀy
//! ```
//!
//! where `e_{σp}(w) = p(u) + ‖u − w‖²/(2σ)` with `u = Prox_{σp}(w)`. `Ψ` is
//! strongly convex and continuously differentiable with
//! `∇Ψ(y) = y + b − A·Prox_{σp}(w)`; its generalized Hessian is
//! `V = I + σ·A M Aᵀ` for the Jacobian element `M` of the prox.
//!
//! The Newton system is never formed from `M` directly. With the index sets of
//! [`JacobianRep`], `AMAᵀ = A_β A_βᵀ + (A_αŨ)(A_αŨ)ᵀ`, and one of four
//! strategies is picked from the sizes involved: a dense `m×m` Cholesky
//! factorization, one of two Sherman–Morrison–Woodbury reductions, or
//! matrix-free conjugate gradients.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::jacobian::{default_tol_act, JacobianRep};
use crate::linops::DesignMatrix;
use crate::problem::Problem;
use crate::prox::{fused_prox_unchecked, ProxResult};
use crate::vecops::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStrategy {
    /// Cholesky of `I + σ(A_βA_βᵀ + (A_αŨ)(A_αŨ)ᵀ)`.
    FullM,
    /// Woodbury with `W = [A_β, A_αŨ]`.
    SmwRb,
    /// Woodbury with `W₁ = [A_β, A_αŨŨᵀ]`, `W₂ = [A_β, A_α]`.
    SmwAb,
    /// Matrix-free conjugate gradients.
    Cg,
}

impl NewtonStrategy {
    pub const ALL: [NewtonStrategy; 4] = [
        NewtonStrategy::FullM,
        NewtonStrategy::SmwRb,
        NewtonStrategy::SmwAb,
        NewtonStrategy::Cg,
    ];

    fn slot(self) -> usize {
        match self {
            NewtonStrategy::FullM => 0,
            NewtonStrategy::SmwRb => 1,
            NewtonStrategy::SmwAb => 2,
            NewtonStrategy::Cg => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    /// Woodbury is used while the reduced size is at most `c1·m`.
    pub c1: f64,
    /// Largest `m` for which the `m×m` system is factorized.
    pub m_dense_cap: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            c1: 1.0 / 3.0,
            m_dense_cap: 4000,
        }
    }
}

pub fn choose_strategy(
    m: usize,
    n_alpha: usize,
    n_beta: usize,
    r: usize,
    cfg: &StrategyConfig,
) -> NewtonStrategy {
    let cap = cfg.c1 * m as f64;
    if (r + n_beta) as f64 <= cap {
        NewtonStrategy::SmwRb
    } else if (n_alpha + n_beta) as f64 <= cap {
        NewtonStrategy::SmwAb
    } else if m <= cfg.m_dense_cap {
        NewtonStrategy::FullM
    } else {
        NewtonStrategy::Cg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsnParams {
    /// Armijo constant `µ ∈ (0, ½)`.
    pub mu_ls: f64,
    /// `η̄ ∈ (0, 1)` in the residual rule `‖Vd + g‖ ≤ min(η̄, ‖g‖^{1+τ})`.
    pub eta_bar: f64,
    /// `τ ∈ (0, 1]`.
    pub tau: f64,
    /// Backtracking factor `δ ∈ (0, 1)`.
    pub delta_ls: f64,
    pub max_iter: usize,
    pub cg_max_iter: usize,
    pub max_backtracks: usize,
    pub strategy: StrategyConfig,
    /// Bypasses [`choose_strategy`].
    pub forced_strategy: Option<NewtonStrategy>,
}

impl Default for SsnParams {
    fn default() -> Self {
        Self {
            mu_ls: 1e-4,
            eta_bar: 0.5,
            tau: 0.5,
            delta_ls: 0.5,
            max_iter: 50,
            cg_max_iter: 500,
            max_backtracks: 50,
            strategy: StrategyConfig::default(),
            forced_strategy: None,
        }
    }
}

impl SsnParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("SSN parameter {what}")));
        if !(self.mu_ls > 0.0 && self.mu_ls < 0.5) {
            return bad("mu_ls must lie in (0, 1/2)");
        }
        if !(self.eta_bar > 0.0 && self.eta_bar < 1.0) {
            return bad("eta_bar must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.delta_ls > 0.0 && self.delta_ls < 1.0) {
            return bad("delta_ls must lie in (0, 1)");
        }
        Ok(())
    }

    /// `min(η̄, ‖g‖^{1+τ})`
    pub fn residual_bound(&self, grad_norm: f64) -> f64 {
        self.eta_bar.min(grad_norm.powf(1.0 + self.tau))
    }
}

/// `Ψ` for fixed `(x̃, σ)`.
pub struct InnerProblem<'a> {
    problem: &'a Problem,
    x_tilde: &'a [f64],
    sigma: f64,
}

/// `Ψ`, `∇Ψ` and the prox at one dual point.
#[derive(Debug, Clone)]
pub struct InnerPoint {
    pub y: Vec<f64>,
    /// `Aᵀy`
    pub aty: Vec<f64>,
    /// `Prox_{σp}(x̃ − σAᵀy)`
    pub prox: ProxResult,
    pub psi: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
}

impl<'a> InnerProblem<'a> {
    pub fn new(problem: &'a Problem, x_tilde: &'a [f64], sigma: f64) -> Result<Self> {
        check_len("InnerProblem x_tilde", problem.n(), x_tilde.len())?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        Ok(Self {
            problem,
            x_tilde,
            sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eval(&self, y: Vec<f64>) -> InnerPoint {
        let mut aty = vec![0.0; self.problem.n()];
        self.problem.a().rmat_vec_into(&y, &mut aty);
        self.eval_with_aty(y, aty)
    }

    pub(crate) fn eval_with_aty(&self, y: Vec<f64>, aty: Vec<f64>) -> InnerPoint {
        let sigma = self.sigma;
        let pen = self.problem.penalty().scaled(sigma);
        let w: Vec<f64> = self
            .x_tilde
            .iter()
            .zip(&aty)
            .map(|(xt, a)| xt - sigma * a)
            .collect();
        let prox = fused_prox_unchecked(&w, pen.lambda1, pen.lambda2);
        let b = self.problem.b();

        // (‖w‖² − ‖x̃‖²)/(2σ) = −½⟨Aᵀy, w + x̃⟩
        let shift: f64 = -0.5
            * aty
                .iter()
                .zip(w.iter().zip(self.x_tilde))
                .map(|(a, (wi, xi))| a * (wi + xi))
                .sum::<f64>();
        let gap: f64 = prox
            .x
            .iter()
            .zip(&w)
            .map(|(u, wi)| (u - wi) * (u - wi))
            .sum();
        let envelope = prox.p_val / sigma + gap / (2.0 * sigma);
        let psi = 0.5 * dot(&y, &y) + dot(b, &y) + shift - envelope;

        let mut grad = vec![0.0; y.len()];
        self.problem.a().mat_vec_into(&prox.x, &mut grad);
        for ((g, yi), bi) in grad.iter_mut().zip(&y).zip(b) {
            *g = yi + bi - *g;
        }
        let grad_norm = norm2(&grad);
        InnerPoint {
            y,
            aty,
            prox,
            psi,
            grad,
            grad_norm,
        }
    }

    pub fn jacobian(&self, point: &InnerPoint) -> JacobianRep {
        let pen = self.problem.penalty().scaled(self.sigma);
        JacobianRep::from_prox(
            &point.prox,
            pen.lambda1,
            pen.lambda2,
            default_tol_act(pen.lambda1, pen.lambda2),
        )
        .expect("prox output is consistent with its own dimension")
    }
}

/// `∇Ψ(y)` together with the prox it was computed from.
pub fn grad_psi(
    y: &[f64],
    x_tilde: &[f64],
    sigma: f64,
    problem: &Problem,
) -> Result<(Vec<f64>, ProxResult)> {
    check_len("grad_psi y", problem.m(), y.len())?;
    let p = InnerProblem::new(problem, x_tilde, sigma)?.eval(y.to_vec());
    Ok((p.grad, p.prox))
}

/// `Ψ(y)` in closed form.
pub fn psi_value(y: &[f64], x_tilde: &[f64], sigma: f64, problem: &Problem) -> Result<f64> {
    check_len("psi_value y", problem.m(), y.len())?;
    Ok(InnerProblem::new(problem, x_tilde, sigma)?
        .eval(y.to_vec())
        .psi)
}

/// `V = I + σ(A_βA_βᵀ + CCᵀ)` with `C = A_αŨ`, plus whatever the chosen
/// strategy needs.
pub struct NewtonSystem<'a> {
    a: &'a DesignMatrix,
    sigma: f64,
    rep: JacobianRep,
    a_beta: DMatrix<f64>,
    c: DMatrix<f64>,
    strategy: NewtonStrategy,
}

impl<'a> NewtonSystem<'a> {
    pub fn new(
        a: &'a DesignMatrix,
        sigma: f64,
        rep: JacobianRep,
        strategy: NewtonStrategy,
    ) -> Result<Self> {
        check_len("NewtonSystem", a.ncols(), rep.dim())?;
        let a_beta = a.gather_cols_unchecked(rep.beta());
        let ranges: Vec<(usize, usize)> = rep.u_tilde().iter().map(|b| (b.start, b.len)).collect();
        let weights: Vec<f64> = rep.u_tilde().iter().map(|b| b.weight).collect();
        let c = a.block_sum_cols_unchecked(&ranges, &weights, Some(rep.theta()));
        Ok(Self {
            a,
            sigma,
            rep,
            a_beta,
            c,
            strategy,
        })
    }

    pub fn strategy(&self) -> NewtonStrategy {
        self.strategy
    }

    pub fn rep(&self) -> &JacobianRep {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `V d`
    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        let mut out = d.to_vec();
        self.apply_into(d, &mut out);
        out
    }

    fn apply_into(&self, d: &[f64], out: &mut [f64]) {
        out.copy_from_slice(d);
        let dv = DVector::from_column_slice(d);
        if self.a_beta.ncols() > 0 {
            let t = self.a_beta.tr_mul(&dv);
            let s = &self.a_beta * t;
            axpy(self.sigma, s.as_slice(), out);
        }
        if self.c.ncols() > 0 {
            let t = self.c.tr_mul(&dv);
            let s = &self.c * t;
            axpy(self.sigma, s.as_slice(), out);
        }
    }

    /// Dense `V`; used by the `FullM` strategy and by tests.
    pub fn dense(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut v = DMatrix::identity(m, m);
        if self.a_beta.ncols() > 0 {
            v.gemm(self.sigma, &self.a_beta, &self.a_beta.transpose(), 1.0);
        }
        if self.c.ncols() > 0 {
            v.gemm(self.sigma, &self.c, &self.c.transpose(), 1.0);
        }
        v
    }

    fn solve_direct(&self, g: &[f64]) -> Option<Vec<f64>> {
        let gv = DVector::from_column_slice(g);
        match self.strategy {
            NewtonStrategy::FullM => {
                let chol = self.dense().cholesky()?;
                Some((-chol.solve(&gv)).as_slice().to_vec())
            }
            NewtonStrategy::SmwRb => {
                let k = self.a_beta.ncols() + self.c.ncols();
                if k == 0 {
                    return Some(g.iter().map(|x| -x).collect());
                }
                let w = concat_cols(&self.a_beta, &self.c);
                let mut small = w.tr_mul(&w);
                for i in 0..k {
                    small[(i, i)] += 1.0 / self.sigma;
                }
                let chol = small.cholesky()?;
                let t = chol.solve(&w.tr_mul(&gv));
                Some((&w * t - gv).as_slice().to_vec())
            }
            NewtonStrategy::SmwAb => {
                let alpha = self.rep.alpha();
                if alpha.is_empty() {
                    return Some(g.iter().map(|x| -x).collect());
                }
                let a_alpha = self.a.gather_cols_unchecked(alpha);
                let cu = self.c_times_u_tilde_t();
                let w1 = concat_cols(&self.a_beta, &cu);
                let w2 = concat_cols(&self.a_beta, &a_alpha);
                let k = w1.ncols();
                let mut small = w2.tr_mul(&w1);
                for i in 0..k {
                    small[(i, i)] += 1.0 / self.sigma;
                }
                let t = small.lu().solve(&w2.tr_mul(&gv))?;
                if t.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                Some((&w1 * t - gv).as_slice().to_vec())
            }
            NewtonStrategy::Cg => None,
        }
    }

    /// `A_α Ũ Ũᵀ` as an `m×|α|` matrix.
    fn c_times_u_tilde_t(&self) -> DMatrix<f64> {
        let alpha = self.rep.alpha();
        let m = self.dim();
        let mut out = DMatrix::zeros(m, alpha.len());
        for (j, b) in self.rep.u_tilde().iter().enumerate() {
            let lo = alpha.partition_point(|&k| k < b.start);
            let hi = alpha.partition_point(|&k| k < b.start + b.len);
            for col in lo..hi {
                let src = self.c.column(j) * b.weight;
                out.column_mut(col).copy_from(&src);
            }
        }
        out
    }
}

fn concat_cols(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows().max(b.nrows());
    let mut out = DMatrix::zeros(m, a.ncols() + b.ncols());
    if a.ncols() > 0 {
        out.columns_mut(0, a.ncols()).copy_from(a);
    }
    if b.ncols() > 0 {
        out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    }
    out
}

/// Result of [`solve_newton`].
#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub d: Vec<f64>,
    /// `‖Vd + g‖`, recomputed with one extra product.
    pub residual: f64,
    pub bound: f64,
    pub cg_iters: usize,
    /// Strategy that produced `d` (differs from the requested one after a fallback).
    pub strategy: NewtonStrategy,
    pub fell_back: bool,
    pub converged: bool,
}

/// Solves `V d = −g` to `‖Vd + g‖ ≤ bound`.
///
/// Direct strategies are followed by a residual check; if the factorization
/// fails or its residual misses the bound, CG takes over (warm-started from the
/// direct solution when there is one).
pub fn solve_newton(
    system: &NewtonSystem<'_>,
    g: &[f64],
    bound: f64,
    cg_max_iter: usize,
) -> Result<NewtonSolution> {
    check_len("solve_newton", system.dim(), g.len())?;
    let direct = system.solve_direct(g);
    let mut strategy = system.strategy;
    let mut fell_back = false;
    let mut cg_iters = 0;
    let (d, residual) = match direct {
        Some(d) if d.iter().all(|v| v.is_finite()) => {
            let r = residual_norm(system, &d, g);
            if r <= bound {
                (d, r)
            } else {
                fell_back = true;
                let (d, r, it) = conjugate_gradient(system, g, Some(d), bound, cg_max_iter);
                cg_iters = it;
                (d, r)
            }
        }
        _ => {
            if strategy != NewtonStrategy::Cg {
                fell_back = true;
                log::debug!("{strategy:?} factorization failed, falling back to CG");
            }
            strategy = NewtonStrategy::Cg;
            let (d, r, it) = conjugate_gradient(system, g, None, bound, cg_max_iter);
            cg_iters = it;
            (d, r)
        }
    };
    Ok(NewtonSolution {
        d,
        residual,
        bound,
        cg_iters,
        strategy: if fell_back { NewtonStrategy::Cg } else { strategy },
        fell_back,
        converged: residual <= bound,
    })
}

fn residual_norm(system: &NewtonSystem<'_>, d: &[f64], g: &[f64]) -> f64 {
    let mut vd = system.apply(d);
    axpy(1.0, g, &mut vd);
    norm2(&vd)
}

/// CG on `V d = −g`; returns `(d, ‖Vd + g‖, iterations)`.
fn conjugate_gradient(
    system: &NewtonSystem<'_>,
    g: &[f64],
    start: Option<Vec<f64>>,
    bound: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, usize) {
    let m = g.len();
    let mut d = start.unwrap_or_else(|| vec![0.0; m]);
    // r = −g − Vd
    let mut r = system.apply(&d);
    for (ri, gi) in r.iter_mut().zip(g) {
        *ri = -gi - *ri;
    }
    let mut rr = dot(&r, &r);
    let mut p = r.clone();
    let mut vp = vec![0.0; m];
    let mut iters = 0;
    while rr.sqrt() > bound && iters < max_iter {
        system.apply_into(&p, &mut vp);
        let pvp = dot(&p, &vp);
        if pvp <= 0.0 {
            break;
        }
        let step = rr / pvp;
        axpy(step, &p, &mut d);
        axpy(-step, &vp, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        iters += 1;
    }
    let res = residual_norm(system, &d, g);
    (d, res, iters)
}

/// Outcome of an Armijo backtracking search.
#[derive(Debug, Clone)]
pub struct LineSearch {
    pub step: f64,
    pub backtracks: usize,
    pub accepted: bool,
    pub point: InnerPoint,
}

/// Armijo backtracking `α = δ^m`, smallest `m` with
/// `Ψ(y + αd) ≤ Ψ(y) + µα⟨∇Ψ(y), d⟩`.
pub fn line_search(
    inner: &InnerProblem<'_>,
    current: &InnerPoint,
    d: &[f64],
    params: &SsnParams,
) -> LineSearch {
    let slope = dot(&current.grad, d);
    let mut atd = vec![0.0; current.aty.len()];
    inner.problem.a().rmat_vec_into(d, &mut atd);
    let mut step = 1.0;
    let mut last = None;
    for backtracks in 0..=params.max_backtracks {
        let y: Vec<f64> = current.y.iter().zip(d).map(|(a, b)| a + step * b).collect();
        let aty: Vec<f64> = current.aty.iter().zip(&atd).map(|(a, b)| a + step * b).collect();
        let trial = inner.eval_with_aty(y, aty);
        if trial.psi <= current.psi + params.mu_ls * step * slope {
            return LineSearch {
                step,
                backtracks,
                accepted: true,
                point: trial,
            };
        }
        last = Some(trial);
        step *= params.delta_ls;
    }
    LineSearch {
        step: step / params.delta_ls,
        backtracks: params.max_backtracks,
        accepted: false,
        point: last.expect("at least one trial"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsnStatus {
    Converged,
    MaxIter,
    LineSearchFailed,
}

#[derive(Debug, Clone, Default)]
pub struct SsnStats {
    pub iterations: usize,
    pub cg_iters: usize,
    /// Indexed by `FullM, SmwRb, SmwAb, Cg`.
    pub strategy_counts: [usize; 4],
    /// `‖∇Ψ‖` at every iterate, including the starting point.
    pub grad_norms: Vec<f64>,
    pub psi_values: Vec<f64>,
    pub steps: Vec<f64>,
    /// `‖Vd + g‖` and its bound for every Newton direction.
    pub newton_residuals: Vec<(f64, f64)>,
}

impl SsnStats {
    pub fn strategy_count(&self, s: NewtonStrategy) -> usize {
        self.strategy_counts[s.slot()]
    }
}

pub struct SsnOutcome {
    pub point: InnerPoint,
    pub status: SsnStatus,
    pub stats: SsnStats,
}

/// Runs semismooth Newton from `y0` until `stop(‖∇Ψ‖, Prox_{σp}(x(y)))` holds.
pub fn ssn_solve<F>(
    problem: &Problem,
    x_tilde: &[f64],
    sigma: f64,
    y0: &[f64],
    mut stop: F,
    params: &SsnParams,
) -> Result<SsnOutcome>
where
    F: FnMut(f64, &[f64]) -> bool,
{
    params.validate()?;
    check_len("ssn_solve y0", problem.m(), y0.len())?;
    let inner = InnerProblem::new(problem, x_tilde, sigma)?;
    let mut point = inner.eval(y0.to_vec());
    ssn_iterate(&inner, &mut point, &mut stop, params).map(|(status, stats)| SsnOutcome {
        point,
        status,
        stats,
    })
}

pub(crate) fn ssn_iterate<F>(
    inner: &InnerProblem<'_>,
    point: &mut InnerPoint,
    stop: &mut F,
    params: &SsnParams,
) -> Result<(SsnStatus, SsnStats)>
where
    F: FnMut(f64, &[f64]) -> bool,
{
    let a = inner.problem.a();
    let m = inner.problem.m();
    let mut stats = SsnStats::default();
    stats.grad_norms.push(point.grad_norm);
    stats.psi_values.push(point.psi);
    loop {
        if stop(point.grad_norm, &point.prox.x) {
            return Ok((SsnStatus::Converged, stats));
        }
        if stats.iterations >= params.max_iter {
            return Ok((SsnStatus::MaxIter, stats));
        }
        let rep = inner.jacobian(point);
        let strategy = params.forced_strategy.unwrap_or_else(|| {
            choose_strategy(
                m,
                rep.alpha().len(),
                rep.beta().len(),
                rep.r(),
                &params.strategy,
            )
        });
        let system = NewtonSystem::new(a, inner.sigma, rep, strategy)?;
        let bound = params.residual_bound(point.grad_norm);
        let sol = solve_newton(&system, &point.grad, bound, params.cg_max_iter)?;
        stats.cg_iters += sol.cg_iters;
        stats.strategy_counts[sol.strategy.slot()] += 1;
        stats.newton_residuals.push((sol.residual, sol.bound));
        let mut d = sol.d;
        if dot(&d, &point.grad) >= 0.0 {
            // Not a descent direction (inexact solve gone wrong); use −∇Ψ.
            d = point.grad.iter().map(|g| -g).collect();
        }
        let ls = line_search(inner, point, &d, params);
        stats.iterations += 1;
        if !ls.accepted {
            return Ok((SsnStatus::LineSearchFailed, stats));
        }
        *point = ls.point;
        stats.steps.push(ls.step);
        stats.grad_norms.push(point.grad_norm);
        stats.psi_values.push(point.psi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::dense_newton_oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize, l1: f64, l2: f64) -> Problem {
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0) / (m as f64).sqrt());
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        Problem::new(DesignMatrix::from_dense(a), b, l1, l2).unwrap()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-s..s)).collect()
    }

    #[test]
    fn strategy_regimes() {
        let cfg = StrategyConfig::default();
        assert_eq!(choose_strategy(10000, 50, 5, 5, &cfg), NewtonStrategy::SmwRb);
        assert_eq!(choose_strategy(50, 5000, 100, 10, &cfg), NewtonStrategy::FullM);
        assert_eq!(choose_strategy(100_000, 90_000, 50_000, 20_000, &cfg), NewtonStrategy::Cg);
        assert_eq!(choose_strategy(300, 60, 20, 90, &cfg), NewtonStrategy::SmwAb);
    }

    #[test]
    fn params_validation() {
        assert!(SsnParams::default().validate().is_ok());
        let p = SsnParams {
            mu_ls: 0.6,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SsnParams {
            tau: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn gradient_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // Huge weights: the prox vanishes and ∇Ψ(y) = y + b.
        let p = random_problem(&mut rng, 6, 9, 1e6, 1e6);
        let y = rand_vec(&mut rng, 6, 1.0);
        let xt = rand_vec(&mut rng, 9, 1.0);
        let (g, prox) = grad_psi(&y, &xt, 0.7, &p).unwrap();
        assert!(prox.x.iter().all(|&v| v == 0.0));
        for i in 0..6 {
            assert!((g[i] - (y[i] + p.b()[i])).abs() < 1e-15);
        }

        // Zero weights: prox is the identity.
        let p = p.with_weights(0.0, 0.0).unwrap();
        let sigma = 0.7;
        let (g, _) = grad_psi(&y, &xt, sigma, &p).unwrap();
        let aty = p.a().rmat_vec(&y).unwrap();
        let w: Vec<f64> = xt.iter().zip(&aty).map(|(a, b)| a - sigma * b).collect();
        let aw = p.a().mat_vec(&w).unwrap();
        for i in 0..6 {
            assert!((g[i] - (y[i] + p.b()[i] - aw[i])).abs() < 1e-13);
        }
        let psi = psi_value(&y, &xt, sigma, &p).unwrap();
        let want = 0.5 * dot(&y, &y) + dot(p.b(), &y) + 0.5 * sigma * dot(&aty, &aty)
            - dot(&xt, &aty);
        assert!((psi - want).abs() < 1e-12);
    }

    #[test]
    fn psi_at_origin_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_problem(&mut rng, 5, 8, 0.3, 0.2);
        assert_eq!(psi_value(&[0.0; 5], &[0.0; 8], 2.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let (m, n) = (rng.random_range(2..20), rng.random_range(2..30));
            let (l1, l2) = (rng.random_range(0.0..0.5), rng.random_range(0.0..0.5));
            let p = random_problem(&mut rng, m, n, l1, l2);
            let y = rand_vec(&mut rng, m, 1.0);
            let xt = rand_vec(&mut rng, n, 2.0);
            let sigma = rng.random_range(0.1..5.0);
            let (g, _) = grad_psi(&y, &xt, sigma, &p).unwrap();
            let h = 1e-6;
            let mut fd = vec![0.0; m];
            for i in 0..m {
                let mut yp = y.clone();
                yp[i] += h;
                let mut ym = y.clone();
                ym[i] -= h;
                fd[i] = (psi_value(&yp, &xt, sigma, &p).unwrap()
                    - psi_value(&ym, &xt, sigma, &p).unwrap())
                    / (2.0 * h);
            }
            let err = norm2(&crate::vecops::sub(&g, &fd));
            assert!(err <= 1e-5 * norm2(&g).max(1.0), "err {err}");
        }
    }

    #[test]
    fn all_strategies_agree_with_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (m, n) = (rng.random_range(5..40), rng.random_range(5..60));
            let p = random_problem(&mut rng, m, n, 0.05, 0.05);
            let xt = rand_vec(&mut rng, n, 3.0);
            let y = rand_vec(&mut rng, m, 1.0);
            let sigma = 1.5;
            let inner = InnerProblem::new(&p, &xt, sigma).unwrap();
            let pt = inner.eval(y);
            let rep = inner.jacobian(&pt);
            let dense = NewtonSystem::new(p.a(), sigma, rep.clone(), NewtonStrategy::FullM)
                .unwrap()
                .dense();
            let want = dense_newton_oracle(&dense, &pt.grad).unwrap();
            for s in NewtonStrategy::ALL {
                let sys = NewtonSystem::new(p.a(), sigma, rep.clone(), s).unwrap();
                let sol = solve_newton(&sys, &pt.grad, 1e-13 * pt.grad_norm.max(1.0), 1000).unwrap();
                let err = norm2(&crate::vecops::sub(&sol.d, &want)) / norm2(&want).max(1e-300);
                assert!(err <= 1e-8, "{s:?} err {err}");
                assert!(!sol.fell_back, "{s:?} fell back");
            }
        }
    }

    #[test]
    fn zero_jacobian_gives_steepest_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_problem(&mut rng, 8, 12, 1e6, 0.0);
        let xt = rand_vec(&mut rng, 12, 1.0);
        let inner = InnerProblem::new(&p, &xt, 1.0).unwrap();
        let pt = inner.eval(rand_vec(&mut rng, 8, 1.0));
        let rep = inner.jacobian(&pt);
        assert!(rep.alpha().is_empty());
        for s in NewtonStrategy::ALL {
            let sys = NewtonSystem::new(p.a(), 1.0, rep.clone(), s).unwrap();
            let sol = solve_newton(&sys, &pt.grad, 1e-14, 10).unwrap();
            for (d, g) in sol.d.iter().zip(&pt.grad) {
                assert!((d + g).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unpenalized_newton_matches_dense_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_problem(&mut rng, 10, 7, 0.0, 0.0);
        let xt = rand_vec(&mut rng, 7, 1.0);
        let sigma = 2.0;
        let inner = InnerProblem::new(&p, &xt, sigma).unwrap();
        let pt = inner.eval(rand_vec(&mut rng, 10, 1.0));
        let rep = inner.jacobian(&pt);
        let sys = NewtonSystem::new(p.a(), sigma, rep, NewtonStrategy::FullM).unwrap();
        let a = p.a().to_dense();
        let v = DMatrix::identity(10, 10) + &a * a.transpose() * sigma;
        let want = dense_newton_oracle(&v, &pt.grad).unwrap();
        let sol = solve_newton(&sys, &pt.grad, 1e-14, 10).unwrap();
        for (x, y) in sol.d.iter().zip(&want) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn line_search_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Quadratic case: exact Newton step is accepted at once.
        let p = random_problem(&mut rng, 10, 7, 0.0, 0.0);
        let xt = rand_vec(&mut rng, 7, 1.0);
        let inner = InnerProblem::new(&p, &xt, 1.0).unwrap();
        let pt = inner.eval(rand_vec(&mut rng, 10, 1.0));
        let sys = NewtonSystem::new(p.a(), 1.0, inner.jacobian(&pt), NewtonStrategy::FullM).unwrap();
        let sol = solve_newton(&sys, &pt.grad, 1e-14, 10).unwrap();
        let params = SsnParams::default();
        let ls = line_search(&inner, &pt, &sol.d, &params);
        assert!(ls.accepted && ls.backtracks == 0 && ls.step == 1.0);

        let big: Vec<f64> = sol.d.iter().map(|d| 100.0 * d).collect();
        let ls = line_search(&inner, &pt, &big, &params);
        assert!(ls.accepted && ls.step < 1.0);
    }

    #[test]
    fn ssn_converges_and_descends() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = DMatrix::from_fn(40, 200, |_, _| rng.random_range(-1.0..1.0) / 40f64.sqrt());
        let b: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = Problem::new(DesignMatrix::from_dense(a), b, 0.02, 0.05).unwrap();
        let xt = vec![0.0; 200];
        let out = ssn_solve(&p, &xt, 1.0, &[0.0; 40], |g, _| g <= 1e-10, &SsnParams::default())
            .unwrap();
        assert_eq!(out.status, SsnStatus::Converged);
        assert!(out.stats.iterations <= 15);
        for w in out.stats.psi_values.windows(2) {
            assert!(w[1] < w[0]);
        }
        for &(r, bound) in &out.stats.newton_residuals {
            assert!(r <= bound);
        }
        // Warm start at the solution: nothing to do.
        let again = ssn_solve(&p, &xt, 1.0, &out.point.y, |g, _| g <= 1e-10, &SsnParams::default())
            .unwrap();
        assert_eq!(again.stats.iterations, 0);
    }

    #[test]
    fn huge_weights_solve_in_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_problem(&mut rng, 10, 20, 1e8, 1e8);
        let xt = vec![0.0; 20];
        let y0 = rand_vec(&mut rng, 10, 1.0);
        let out = ssn_solve(&p, &xt, 1.0, &y0, |g, _| g <= 1e-12, &SsnParams::default()).unwrap();
        assert_eq!(out.stats.iterations, 1);
        for (y, b) in out.point.y.iter().zip(p.b()) {
            assert!((y + b).abs() < 1e-12);
        }
    }
}
