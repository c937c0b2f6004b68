use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linops::DesignMatrix;
use crate::prox::FusedPenalty;
use crate::vecops::{norm2, norm_inf};

/// `min ½‖Ax − b‖² + λ₁‖x‖₁ + λ₂‖Bx‖₁`.
///
/// The matrix and response are reference-counted so that problems differing
/// only in their weights (level-set probes, benchmark runs) share storage.
#[derive(Debug, Clone)]
pub struct Problem {
    a: Arc<DesignMatrix>,
    b: Arc<[f64]>,
    penalty: FusedPenalty,
}

impl Problem {
    pub fn new(a: DesignMatrix, b: Vec<f64>, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::from_shared(Arc::new(a), b.into(), lambda1, lambda2)
    }

    pub fn from_shared(
        a: Arc<DesignMatrix>,
        b: Arc<[f64]>,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        check_len("Problem response", a.nrows(), b.len())?;
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("response contains non-finite values".into()));
        }
        Ok(Self {
            a,
            b,
            penalty: FusedPenalty::new(lambda1, lambda2)?,
        })
    }

    /// Same data, different weights.
    pub fn with_weights(&self, lambda1: f64, lambda2: f64) -> Result<Self> {
        Ok(Self {
            a: Arc::clone(&self.a),
            b: Arc::clone(&self.b),
            penalty: FusedPenalty::new(lambda1, lambda2)?,
        })
    }

    pub fn a(&self) -> &DesignMatrix {
        &self.a
    }

    pub fn shared_a(&self) -> Arc<DesignMatrix> {
        Arc::clone(&self.a)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn shared_b(&self) -> Arc<[f64]> {
        Arc::clone(&self.b)
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn penalty(&self) -> FusedPenalty {
        self.penalty
    }

    pub fn lambda1(&self) -> f64 {
        self.penalty.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.penalty.lambda2
    }

    /// `‖Aᵀb‖∞`
    pub fn atb_inf_norm(&self) -> f64 {
        let mut atb = vec![0.0; self.n()];
        self.a.rmat_vec_into(&self.b, &mut atb);
        norm_inf(&atb)
    }

    pub fn b_norm(&self) -> f64 {
        norm2(&self.b)
    }

    /// `Ax − b`
    pub(crate) fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.m()];
        self.a.mat_vec_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(self.b.iter()) {
            *ri -= bi;
        }
        r
    }
}
