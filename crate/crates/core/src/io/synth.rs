//! Piecewise-constant test problems.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::normalize_columns;
use crate::error::{Error, Result};
use crate::linops::{CscMatrix, DesignMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    /// Number of constant segments in `x_true` (clamped to `[1, n]`).
    pub k_blocks: usize,
    pub noise_sd: f64,
    /// Fraction of nonzero entries of `A`; at least 1 gives dense storage.
    pub density: f64,
    /// Fraction of segments set to zero.
    pub zero_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            m: 200,
            n: 2000,
            k_blocks: 20,
            noise_sd: 0.01,
            density: 1.0,
            zero_fraction: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub a: DesignMatrix,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
}

/// Standard normal `A` (column-normalized), piecewise-constant `x_true`,
/// `b = A·x_true + noise`. Bit-identical for a fixed spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticProblem> {
    let SyntheticSpec { m, n, .. } = *spec;
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("m and n must be positive".into()));
    }
    if !(spec.density > 0.0) || !(spec.noise_sd >= 0.0) || !(0.0..=1.0).contains(&spec.zero_fraction) {
        return Err(Error::InvalidParameter(
            "need density > 0, noise_sd >= 0 and zero_fraction in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let k = spec.k_blocks.clamp(1, n);
    let mut cuts: Vec<usize> = sample(&mut rng, n - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let n_zero = (spec.zero_fraction * k as f64).round() as usize;
    let zeroed = sample(&mut rng, k, n_zero.min(k)).into_vec();
    let mut x_true = vec![0.0; n];
    let mut lo = 0;
    for blk in 0..k {
        let hi = cuts.get(blk).copied().unwrap_or(n);
        let level = if zeroed.contains(&blk) {
            0.0
        } else {
            let mag: f64 = rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        };
        x_true[lo..hi].iter_mut().for_each(|v| *v = level);
        lo = hi;
    }

    let a = if spec.density >= 1.0 {
        DesignMatrix::from_dense(DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal)))
    } else {
        let mut trip = Vec::new();
        for j in 0..n {
            for i in 0..m {
                if rng.random_bool(spec.density) {
                    trip.push((i, j, rng.sample::<f64, _>(StandardNormal)));
                }
            }
        }
        DesignMatrix::from_csc(CscMatrix::from_triplets(m, n, &trip)?)
    };
    let (a, _) = normalize_columns(&a);
    let mut b = a.mat_vec(&x_true)?;
    if spec.noise_sd > 0.0 {
        for bi in &mut b {
            *bi += spec.noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(SyntheticProblem { a, b, x_true })
}
