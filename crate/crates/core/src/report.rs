//! Solve reports and per-iteration trace records shared by every solver.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    TimeLimit,
    Stalled,
}

impl SolveStatus {
    pub fn is_optimal(&self) -> bool {
        matches!(self, SolveStatus::Optimal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ssnal,
    Admm,
    Iadmm,
    Ladmm,
    Apg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Ssnal,
        SolverKind::Admm,
        SolverKind::Iadmm,
        SolverKind::Ladmm,
        SolverKind::Apg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Ssnal => "ssnal",
            SolverKind::Admm => "admm",
            SolverKind::Iadmm => "iadmm",
            SolverKind::Ladmm => "ladmm",
            SolverKind::Apg => "apg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown solver '{s}'")))
    }
}

/// Summary of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub status: SolveStatus,
    /// Relative KKT residual of the returned primal point.
    pub eta: f64,
    /// `½‖Ax − b‖² + p(x)`
    pub primal_obj: f64,
    /// `½‖y‖² + ⟨y, b⟩` at the returned dual point, when the solver keeps one.
    pub dual_quadratic: Option<f64>,
    pub outer_iters: usize,
    pub ssn_iters: usize,
    pub cg_iters: usize,
    pub nnz_x: usize,
    pub nnz_bx: usize,
    pub wall_time_s: f64,
}

/// Inner-solve acceptance bookkeeping for one augmented Lagrangian step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerCriteria {
    pub grad_norm: f64,
    /// `ε_k / √σ_k`
    pub bound_a: f64,
    /// `(δ_k / √σ_k)·‖x^{k+1} − x^k‖`
    pub bound_b1: f64,
    /// `(δ'_k / σ_k)·‖x^{k+1} − x^k‖`
    pub bound_b2: f64,
    /// The inner solve stopped at the numerical floor rather than the three bounds.
    pub floor_hit: bool,
}

impl InnerCriteria {
    pub fn satisfied(&self) -> bool {
        self.grad_norm <= self.bound_a
            && self.grad_norm <= self.bound_b1
            && self.grad_norm <= self.bound_b2
    }
}

/// One row of a solver trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub eta: f64,
    pub primal_obj: f64,
    pub sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inner_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub criteria: Option<InnerCriteria>,
    /// Gradient norms of the inner Newton iterates, first to last.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub inner_grad_norms: Vec<f64>,
}
