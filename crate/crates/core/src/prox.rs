//! Proximal operators of the fused lasso penalty
//! `p(x) = λ₁‖x‖₁ + λ₂‖Bx‖₁`.
//!
//! The fused prox factors as soft-thresholding applied after the 1D
//! total-variation prox, so the whole map costs one linear-time TV pass plus
//! one elementwise shrink. The TV dual `z` (with `x_tv = v − Bᵀz`) is recovered
//! from cumulative sums and feeds the generalized Jacobian.

use crate::error::{Error, Result};

/// Output of [`fused_prox`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    /// `Prox_p(v)`.
    pub x: Vec<f64>,
    /// The total-variation stage `x_λ₂(v)`.
    pub x_tv: Vec<f64>,
    /// TV dual with `x_tv = v − Bᵀz`; empty when `λ₂ = 0` or `n ≤ 1`.
    pub z: Vec<f64>,
    /// `p(x)` at the weights the prox was taken with.
    pub p_val: f64,
}

/// The penalty weights `(λ₁, λ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FusedPenalty {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl FusedPenalty {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        check_weights(lambda1, lambda2)?;
        Ok(Self { lambda1, lambda2 })
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            lambda1: t * self.lambda1,
            lambda2: t * self.lambda2,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        penalty_value(x, self.lambda1, self.lambda2)
    }

    pub fn prox(&self, v: &[f64]) -> ProxResult {
        fused_prox_unchecked(v, self.lambda1, self.lambda2)
    }
}

fn check_weights(lambda1: f64, lambda2: f64) -> Result<()> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "penalty weights must be finite and nonnegative, got ({lambda1}, {lambda2})"
        )));
    }
    Ok(())
}

/// `sign(v) ∘ max(|v| − t, 0)`
pub fn soft_threshold(v: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {t}"
        )));
    }
    let mut out = v.to_vec();
    soft_threshold_in_place(&mut out, t);
    Ok(out)
}

#[inline]
pub(crate) fn soft_threshold_in_place(v: &mut [f64], t: f64) {
    for x in v.iter_mut() {
        let a = x.abs() - t;
        *x = if a > 0.0 { a.copysign(*x) } else { 0.0 };
    }
}

/// Exact minimizer of `t‖Bx‖₁ + ½‖x − v‖²`.
pub fn tv_prox(v: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "TV weight must be finite and nonnegative, got {t}"
        )));
    }
    let mut out = vec![0.0; v.len()];
    tv_prox_into(v, t, &mut out);
    Ok(out)
}

/// Direct taut-string style 1D TV denoiser (Condat's algorithm).
///
/// Scans left to right keeping the lowest and highest admissible values for
/// the current segment together with the running dual slack on each side.
/// When either side runs out of slack the segment is emitted and the scan
/// restarts just after it.
pub(crate) fn tv_prox_into(input: &[f64], lambda: f64, output: &mut [f64]) {
    let width = input.len();
    debug_assert_eq!(output.len(), width);
    if width == 0 {
        return;
    }
    if lambda == 0.0 || width == 1 {
        output.copy_from_slice(input);
        return;
    }
    let twolambda = 2.0 * lambda;
    let minlambda = -lambda;
    let (mut k, mut k0) = (0usize, 0usize);
    let (mut kplus, mut kminus) = (0usize, 0usize);
    let mut umin = lambda;
    let mut umax = minlambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;
    loop {
        while k == width - 1 {
            if umin < 0.0 {
                // Segment ends at kminus with value vmin.
                while k0 <= kminus {
                    output[k0] = vmin;
                    k0 += 1;
                }
                k = k0;
                kminus = k0;
                vmin = input[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                while k0 <= kplus {
                    output[k0] = vmax;
                    k0 += 1;
                }
                k = k0;
                kplus = k0;
                vmax = input[k0];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    output[k0] = vmin;
                    k0 += 1;
                }
                return;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < minlambda {
            // Negative jump: emit the segment at vmin.
            while k0 <= kminus {
                output[k0] = vmin;
                k0 += 1;
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = input[k0];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            // Positive jump: emit the segment at vmax.
            while k0 <= kplus {
                output[k0] = vmax;
                k0 += 1;
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = input[k0];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= minlambda {
            kplus = k;
            vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
            umax = minlambda;
        }
    }
}

/// Recovers the TV dual from `x = v − Bᵀz`: `z_i = Σ_{t≤i} (v_t − x_t)`.
pub fn recover_tv_dual(v: &[f64], x: &[f64]) -> Vec<f64> {
    let n = v.len().min(x.len());
    let mut z = Vec::with_capacity(n.saturating_sub(1));
    let mut acc = 0.0;
    for i in 0..n.saturating_sub(1) {
        acc += v[i] - x[i];
        z.push(acc);
    }
    z
}

/// `λ₁‖x‖₁ + λ₂‖Bx‖₁`
pub fn penalty_value(x: &[f64], lambda1: f64, lambda2: f64) -> f64 {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let tv: f64 = x.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
    lambda1 * l1 + lambda2 * tv
}

/// `Prox_p(v)` for `p = λ₁‖·‖₁ + λ₂‖B·‖₁`, with the intermediate TV stage and
/// its dual.
pub fn fused_prox(v: &[f64], lambda1: f64, lambda2: f64) -> Result<ProxResult> {
    check_weights(lambda1, lambda2)?;
    Ok(fused_prox_unchecked(v, lambda1, lambda2))
}

pub(crate) fn fused_prox_unchecked(v: &[f64], lambda1: f64, lambda2: f64) -> ProxResult {
    let n = v.len();
    let (x_tv, z) = if lambda2 == 0.0 || n <= 1 {
        (v.to_vec(), Vec::new())
    } else {
        let mut x_tv = vec![0.0; n];
        tv_prox_into(v, lambda2, &mut x_tv);
        let z = recover_tv_dual(v, &x_tv);
        (x_tv, z)
    };
    let mut x = x_tv.clone();
    soft_threshold_in_place(&mut x, lambda1);
    let p_val = penalty_value(&x, lambda1, lambda2);
    ProxResult { x, x_tv, z, p_val }
}

/// `Prox_{t·p}(v)`; `t·p` is a fused penalty with weights `(tλ₁, tλ₂)`.
pub fn fused_prox_scaled(v: &[f64], t: f64, lambda1: f64, lambda2: f64) -> Result<ProxResult> {
    check_positive(t)?;
    fused_prox(v, t * lambda1, t * lambda2)
}

/// `Prox_{p*/t}(v)` via the Moreau identity
/// `Prox_{tp}(w) + t·Prox_{p*/t}(w/t) = w` with `w = t·v`.
pub fn conjugate_prox(v: &[f64], t: f64, lambda1: f64, lambda2: f64) -> Result<Vec<f64>> {
    check_positive(t)?;
    let w: Vec<f64> = v.iter().map(|vi| vi * t).collect();
    let px = fused_prox_scaled(&w, t, lambda1, lambda2)?.x;
    Ok(w.iter().zip(&px).map(|(wi, pi)| (wi - pi) / t).collect())
}

fn check_positive(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale must be finite and positive, got {t}"
        )));
    }
    Ok(())
}
