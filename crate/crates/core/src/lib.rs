//! Solvers for fused lasso problems
//!
//! ```text
//! min ½‖Ax − b‖² + λ₁‖x‖₁ + λ₂‖Bx‖₁          (regularized)
//! min λ₁‖x‖₁ + λ₂‖Bx‖₁  s.t. ‖Ax − b‖ ≤ δ     (constrained)
//! ```
//!
//! where `B` takes forward differences. The regularized form is solved by a
//! semismooth Newton augmented Lagrangian method ([`alm::ssnal_solve`]) that
//! works on the dual and exploits the low-rank-plus-diagonal structure of the
//! generalized Jacobian of the fused prox. The constrained form is solved by
//! bisection on the penalty scale ([`levelset::levelset_solve`]). First-order
//! baselines (ADMM variants, accelerated proximal gradient) share the same
//! prox and stopping metric.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alm;
pub mod baselines;
mod error;
pub mod io;
pub mod jacobian;
pub mod levelset;
pub mod linops;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
mod problem;
pub mod prox;
pub mod report;
pub mod ssn;
mod vecops;

pub use alm::{kkt_residual, nnz_estimate, primal_objective, ssnal_solve, AlmParams};
pub use error::{Error, Result};
pub use linops::{apply_b, apply_bt, CscMatrix, DesignMatrix, DiffOperator};
pub use problem::Problem;
pub use prox::{fused_prox, FusedPenalty, ProxResult};
pub use report::{IterRecord, SolveReport, SolveStatus, SolverKind};
