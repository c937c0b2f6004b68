//! Brute-force reference implementations used by tests and the acceptance
//! suite. Compiled only under `cfg(test)` or the `oracles` feature; none of
//! this is reachable from the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::prox::fused_prox;

/// Dimension caps for the oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseOracleLimit {
    pub n_max: usize,
}

impl DenseOracleLimit {
    pub const ENUMERATION: Self = Self { n_max: 12 };
    pub const PSEUDOINVERSE: Self = Self { n_max: 60 };
    pub const NEWTON: Self = Self { n_max: 200 };

    pub fn check(&self, dim: usize) -> Result<()> {
        if dim > self.n_max {
            return Err(Error::OracleCap {
                dim,
                cap: self.n_max,
            });
        }
        Ok(())
    }
}

const FEAS_TOL: f64 = 1e-12;

/// Minimizer of `λ₁‖x‖₁ + λ₂‖Bx‖₁ + ½‖x − v‖²` by enumerating sign patterns.
///
/// A pattern fixes the fused groups of `x`, the sign of each group value and
/// the sign of each jump between groups. Given a pattern the stationarity
/// conditions pin down every group value in closed form; the remaining
/// subgradient multipliers are checked for feasibility (interval propagation
/// across zero groups). Patterns are enumerated depth-first from the left so
/// that infeasible prefixes are discarded early. Among feasible patterns the
/// one with the smallest objective is returned.
pub fn brute_fused_prox(v: &[f64], lambda1: f64, lambda2: f64) -> Result<Vec<f64>> {
    DenseOracleLimit::ENUMERATION.check(v.len())?;
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidParameter("negative weight".into()));
    }
    let n = v.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if lambda2 == 0.0 {
        return Ok(v.iter().map(|&vi| brute_scalar_shrink(vi, lambda1)).collect());
    }
    let mut search = PatternSearch {
        v,
        l1: lambda1,
        l2: lambda2,
        groups: Vec::new(),
        best: None,
    };
    search.extend(0, None);
    let (_, x) = search
        .best
        .ok_or_else(|| Error::InvalidParameter("no feasible sign pattern found".into()))?;
    Ok(x)
}

/// Per-coordinate enumeration of `sign(x) ∈ {−1, 0, 1}`.
fn brute_scalar_shrink(v: f64, l1: f64) -> f64 {
    for s in [-1.0, 1.0] {
        let x = v - l1 * s;
        if x * s > 0.0 {
            return x;
        }
    }
    0.0
}

struct Group {
    start: usize,
    end: usize,
    value: f64,
}

struct PatternSearch<'a> {
    v: &'a [f64],
    l1: f64,
    l2: f64,
    groups: Vec<Group>,
    best: Option<(f64, Vec<f64>)>,
}

impl PatternSearch<'_> {
    /// `left` is `(previous group value, jump sign on edge start−1)`.
    fn extend(&mut self, start: usize, left: Option<(f64, f64)>) {
        let n = self.v.len();
        if start == n {
            self.record();
            return;
        }
        let tl = left.map_or(0.0, |(_, t)| t);
        for end in start..n {
            let right_choices: &[f64] = if end + 1 == n { &[0.0] } else { &[-1.0, 1.0] };
            for &tr in right_choices {
                for s in [-1.0, 0.0, 1.0] {
                    let Some(c) = self.group_value(start, end, s, tl, tr) else {
                        continue;
                    };
                    if let Some((c_prev, t)) = left {
                        if (c_prev - c) * t <= 0.0 {
                            continue;
                        }
                    }
                    self.groups.push(Group {
                        start,
                        end,
                        value: c,
                    });
                    self.extend(end + 1, Some((c, tr)));
                    self.groups.pop();
                }
            }
        }
    }

    /// Group value for the pattern, or `None` when its multipliers are infeasible.
    fn group_value(&self, a: usize, b: usize, s: f64, tl: f64, tr: f64) -> Option<f64> {
        let (l1, l2) = (self.l1, self.l2);
        let v = &self.v[a..=b];
        let len = v.len() as f64;
        let slack = FEAS_TOL * (1.0 + l1 + l2 + v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        if s != 0.0 {
            let c = (v.iter().sum::<f64>() - l1 * len * s - l2 * (tr - tl)) / len;
            if c * s <= 0.0 {
                return None;
            }
            // Interior edge multipliers: l2·w_i = l2·w_{i−1} + v_i − c − l1·s.
            let mut zw = l2 * tl;
            for &vi in &v[..v.len() - 1] {
                zw += vi - c - l1 * s;
                if zw.abs() > l2 + slack {
                    return None;
                }
            }
            Some(c)
        } else {
            // x = 0 on the group; u_i ∈ [−1, 1] free. Track the reachable
            // interval of l2·w_i.
            let (mut lo, mut hi) = (l2 * tl, l2 * tl);
            for (k, &vi) in v.iter().enumerate() {
                lo += vi - l1;
                hi += vi + l1;
                if k + 1 < v.len() {
                    lo = lo.max(-l2);
                    hi = hi.min(l2);
                    if lo > hi + slack {
                        return None;
                    }
                }
            }
            let target = l2 * tr;
            if target < lo - slack || target > hi + slack {
                return None;
            }
            Some(0.0)
        }
    }

    fn record(&mut self) {
        let mut x = vec![0.0; self.v.len()];
        for g in &self.groups {
            x[g.start..=g.end].iter_mut().for_each(|xi| *xi = g.value);
        }
        let obj = objective(self.v, &x, self.l1, self.l2);
        if self.best.as_ref().is_none_or(|(b, _)| obj < *b) {
            self.best = Some((obj, x));
        }
    }
}

/// `λ₁‖x‖₁ + λ₂‖Bx‖₁ + ½‖x − v‖²`
pub fn objective(v: &[f64], x: &[f64], l1: f64, l2: f64) -> f64 {
    let quad: f64 = x.iter().zip(v).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    quad + crate::prox::penalty_value(x, l1, l2)
}

/// Dense `B` as an `(n−1)×n` matrix.
fn dense_b(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n.saturating_sub(1), n, |i, j| {
        if j == i {
            1.0
        } else if j == i + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// `Γ = I_n − Bᵀ(ΣBBᵀΣ)†B` evaluated densely with an SVD pseudoinverse.
pub fn dense_gamma_oracle(sigma: &[bool], n: usize) -> Result<DMatrix<f64>> {
    DenseOracleLimit::PSEUDOINVERSE.check(n)?;
    crate::error::check_len("dense_gamma_oracle", n.saturating_sub(1), sigma.len())?;
    if n <= 1 {
        return Ok(DMatrix::identity(n, n));
    }
    let b = dense_b(n);
    let s = DMatrix::from_diagonal(&DVector::from_iterator(
        n - 1,
        sigma.iter().map(|&f| if f { 1.0 } else { 0.0 }),
    ));
    let inner = &s * &b * b.transpose() * &s;
    let pinv = inner
        .pseudo_inverse(1e-10)
        .map_err(|e| Error::Factorization(e.to_string()))?;
    Ok(DMatrix::identity(n, n) - b.transpose() * pinv * b)
}

/// Dense `M = ΘΓ` at `v` using the same classification rule as the solver.
pub fn dense_jacobian_oracle(v: &[f64], lambda1: f64, lambda2: f64) -> Result<DMatrix<f64>> {
    let n = v.len();
    DenseOracleLimit::PSEUDOINVERSE.check(n)?;
    let prox = fused_prox(v, lambda1, lambda2)?;
    let tol = crate::jacobian::default_tol_act(lambda1, lambda2);
    let flags = crate::jacobian::classify_active(&prox, lambda1, lambda2, tol)?;
    let gamma = dense_gamma_oracle(&flags.sigma, n)?;
    let theta = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        flags.theta.iter().map(|&f| if f { 1.0 } else { 0.0 }),
    ));
    Ok(theta * gamma)
}

/// Solves `V d = −g` densely.
pub fn dense_newton_oracle(v: &DMatrix<f64>, g: &[f64]) -> Result<Vec<f64>> {
    DenseOracleLimit::NEWTON.check(v.nrows())?;
    crate::error::check_len("dense_newton_oracle", v.nrows(), g.len())?;
    let rhs = -DVector::from_column_slice(g);
    let lu = v.clone().lu();
    let d = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Factorization("singular Newton matrix".into()))?;
    Ok(d.as_slice().to_vec())
}
