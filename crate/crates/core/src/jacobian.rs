//! Generalized Jacobian of the fused lasso prox in structural form.
//!
//! For `v` with TV stage `x_tv` and TV dual `z`, the Jacobian element used by
//! the Newton solver is `M = ΘP` where
//!
//! * `Θ = Diag(θ)`, `θ_i = 1` iff `|x_tv,i| > λ₁` (coordinates that survive the shrink),
//! * `P = I − Bᵀ(ΣBBᵀΣ)†B = H + U_J U_Jᵀ`, with `Σ = Diag(σ)` and `σ_i = 0`
//!   on edges whose dual sits on the bound `|z_i| = λ₂`.
//!
//! Edges with `σ_i = 1` fuse their endpoints. Each maximal run of such edges
//! becomes an averaging block `(1/(k+1))·E` over its `k+1` nodes, every other
//! node is an identity entry of `H`. Nothing here is stored densely: `H` and
//! `Θ` are bit vectors and each column of `U_J` is a contiguous node range
//! with a single weight.

use crate::error::{check_len, Error, Result};
use crate::linops::apply_b;
use crate::prox::ProxResult;

/// Active-set flags `θ` (length `n`) and `σ` (length `n − 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveFlags {
    pub theta: Vec<bool>,
    pub sigma: Vec<bool>,
    pub tol_act: f64,
}

/// Default classification tolerance `1e−11·(1 + λ₁ + λ₂)`.
pub fn default_tol_act(lambda1: f64, lambda2: f64) -> f64 {
    1e-11 * (1.0 + lambda1 + lambda2)
}

/// Classifies coordinates and edges of a prox evaluation.
///
/// Ties go to the side that enlarges the active edge set and shrinks `θ`:
/// `θ_i = 0` when `|x_tv,i| ≤ λ₁ + tol`, and `σ_i = 0` when `λ₂ − |z_i| ≤ tol`
/// or when `x_tv` jumps across edge `i`.
pub fn classify_active(
    prox: &ProxResult,
    lambda1: f64,
    lambda2: f64,
    tol_act: f64,
) -> Result<ActiveFlags> {
    if !(tol_act >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "activity tolerance must be nonnegative, got {tol_act}"
        )));
    }
    let n = prox.x_tv.len();
    let theta = prox
        .x_tv
        .iter()
        .map(|xi| xi.abs() > lambda1 + tol_act)
        .collect();
    let edges = n.saturating_sub(1);
    let sigma = if prox.z.is_empty() {
        // λ₂ = 0: every dual entry sits on the (zero) bound.
        vec![false; edges]
    } else {
        check_len("classify_active dual", edges, prox.z.len())?;
        let jumps = apply_b(&prox.x_tv);
        prox.z
            .iter()
            .zip(&jumps)
            .map(|(zi, ji)| !(lambda2 - zi.abs() <= tol_act || ji.abs() > tol_act))
            .collect()
    };
    Ok(ActiveFlags {
        theta,
        sigma,
        tol_act,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// `Λ = O`: edges on the dual bound.
    Zero,
    /// `Λ = I`: fused edges.
    Identity,
}

/// Maximal runs of equal `σ` values. Consecutive blocks alternate in kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    pub sizes: Vec<usize>,
    pub kinds: Vec<BlockKind>,
    /// Indices (0-based) of identity blocks.
    pub identity_blocks: Vec<usize>,
}

impl BlockPartition {
    pub fn num_edges(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Row count of each block's piece of `Γ`: `n_i + 1` for identity blocks,
    /// `n_i` for zero blocks at either end, `n_i − 1` for interior zero blocks
    /// (a lone zero block covers all `n_i + 1` nodes).
    pub fn gamma_dims(&self) -> Vec<usize> {
        let last = self.sizes.len().saturating_sub(1);
        self.sizes
            .iter()
            .zip(&self.kinds)
            .enumerate()
            .map(|(i, (&s, &k))| match k {
                BlockKind::Identity => s + 1,
                BlockKind::Zero if last == 0 => s + 1,
                BlockKind::Zero if i == 0 || i == last => s,
                BlockKind::Zero => s - 1,
            })
            .collect()
    }
}

pub fn partition_blocks(sigma: &[bool]) -> BlockPartition {
    let mut sizes: Vec<usize> = Vec::new();
    let mut kinds = Vec::new();
    for &s in sigma {
        let kind = if s {
            BlockKind::Identity
        } else {
            BlockKind::Zero
        };
        if kinds.last() == Some(&kind) {
            *sizes.last_mut().unwrap() += 1;
        } else {
            sizes.push(1);
            kinds.push(kind);
        }
    }
    let identity_blocks = kinds
        .iter()
        .enumerate()
        .filter(|(_, &k)| k == BlockKind::Identity)
        .map(|(i, _)| i)
        .collect();
    BlockPartition {
        sizes,
        kinds,
        identity_blocks,
    }
}

/// One column of `U_J`: value `weight` on nodes `start..start + len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UBlock {
    pub start: usize,
    pub len: usize,
    pub weight: f64,
}

impl UBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Structural `Γ = Diag(h) + Σ_j u_j u_jᵀ` for a block partition of `n − 1` edges.
pub fn build_gamma(partition: &BlockPartition, n: usize) -> Result<(Vec<bool>, Vec<UBlock>)> {
    if partition.num_edges() != n.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} edges, dimension {n} needs {}",
            partition.num_edges(),
            n.saturating_sub(1)
        )));
    }
    if partition
        .kinds
        .windows(2)
        .any(|w| w[0] == w[1])
        || partition.sizes.contains(&0)
        || partition.sizes.len() != partition.kinds.len()
    {
        return Err(Error::InvalidParameter(
            "blocks must be nonempty and alternate in kind".into(),
        ));
    }
    let mut h = vec![true; n];
    let mut u_blocks = Vec::with_capacity(partition.identity_blocks.len());
    let mut edge = 0;
    for (&size, &kind) in partition.sizes.iter().zip(&partition.kinds) {
        if kind == BlockKind::Identity {
            let block = UBlock {
                start: edge,
                len: size + 1,
                weight: 1.0 / ((size + 1) as f64).sqrt(),
            };
            h[block.range()].iter_mut().for_each(|hi| *hi = false);
            u_blocks.push(block);
        }
        edge += size;
    }
    Ok((h, u_blocks))
}

/// Index sets for the reduced Newton matrix `AMAᵀ = A_β A_βᵀ + A_α Ũ Ũᵀ A_αᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSets {
    /// `{i : θ_i = 1}`
    pub alpha: Vec<usize>,
    /// `{i ∈ α : h_i = 1}`, the surviving identity entries of `H`.
    pub beta: Vec<usize>,
    /// Columns of `ΘU_J` with at least one surviving row. Rows outside `α`
    /// are masked by `θ` wherever these are applied.
    pub u_tilde: Vec<UBlock>,
    pub r: usize,
}

pub fn derive_index_sets(theta: &[bool], h: &[bool], u_blocks: &[UBlock]) -> Result<IndexSets> {
    check_len("derive_index_sets", theta.len(), h.len())?;
    let alpha: Vec<usize> = (0..theta.len()).filter(|&i| theta[i]).collect();
    let beta: Vec<usize> = alpha.iter().copied().filter(|&i| h[i]).collect();
    let mut u_tilde = Vec::new();
    for b in u_blocks {
        if b.start + b.len > theta.len() {
            return Err(Error::IndexOutOfRange {
                index: b.start + b.len - 1,
                dim: theta.len(),
            });
        }
        if theta[b.range()].iter().any(|&t| t) {
            u_tilde.push(*b);
        }
    }
    let r = u_tilde.len();
    Ok(IndexSets {
        alpha,
        beta,
        u_tilde,
        r,
    })
}

/// The Jacobian element `M` in compressed form.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianRep {
    pub flags: ActiveFlags,
    pub partition: BlockPartition,
    /// Diagonal of `H`.
    pub h: Vec<bool>,
    pub u_blocks: Vec<UBlock>,
    pub sets: IndexSets,
}

impl JacobianRep {
    pub fn from_prox(prox: &ProxResult, lambda1: f64, lambda2: f64, tol_act: f64) -> Result<Self> {
        let flags = classify_active(prox, lambda1, lambda2, tol_act)?;
        Self::from_flags(flags)
    }

    pub fn from_flags(flags: ActiveFlags) -> Result<Self> {
        let n = flags.theta.len();
        check_len("JacobianRep sigma", n.saturating_sub(1), flags.sigma.len())?;
        let partition = partition_blocks(&flags.sigma);
        let (h, u_blocks) = build_gamma(&partition, n)?;
        let sets = derive_index_sets(&flags.theta, &h, &u_blocks)?;
        Ok(Self {
            flags,
            partition,
            h,
            u_blocks,
            sets,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn theta(&self) -> &[bool] {
        &self.flags.theta
    }

    pub fn alpha(&self) -> &[usize] {
        &self.sets.alpha
    }

    pub fn beta(&self) -> &[usize] {
        &self.sets.beta
    }

    pub fn u_tilde(&self) -> &[UBlock] {
        &self.sets.u_tilde
    }

    pub fn r(&self) -> usize {
        self.sets.r
    }
}

/// `Θ(H + U_J U_Jᵀ)Θ w` in `O(n)`.
///
/// The outer `Θ` on the right equals `ΘP` whenever `θ` is constant on each
/// fused group, which holds for exact prox outputs; keeping it makes the
/// product symmetric for any classification.
pub fn jacobian_mat_vec(rep: &JacobianRep, w: &[f64]) -> Result<Vec<f64>> {
    check_len("jacobian_mat_vec", rep.dim(), w.len())?;
    let theta = rep.theta();
    let mut out: Vec<f64> = w
        .iter()
        .zip(theta)
        .zip(&rep.h)
        .map(|((&wi, &t), &h)| if t && h { wi } else { 0.0 })
        .collect();
    for b in rep.u_tilde() {
        let s: f64 = b
            .range()
            .filter(|&k| theta[k])
            .map(|k| w[k])
            .sum::<f64>()
            * b.weight
            * b.weight;
        for k in b.range() {
            if theta[k] {
                out[k] += s;
            }
        }
    }
    Ok(out)
}
