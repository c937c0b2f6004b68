//! Shared fixtures for the criterion benchmarks.

use fused_kite::io::{generate_synthetic, lambda_from_alphas, SyntheticSpec};
use fused_kite::Problem;

/// Synthetic problem with `λ₁ = α₁‖Aᵀb‖∞`, `λ₂ = α₂λ₁`.
pub fn synthetic_problem(m: usize, n: usize, alpha1: f64, alpha2: f64, seed: u64) -> Problem {
    let spec = SyntheticSpec {
        m,
        n,
        k_blocks: (n / 100).max(2),
        seed,
        ..SyntheticSpec::default()
    };
    let p = generate_synthetic(&spec).expect("valid spec");
    let (l1, l2) = lambda_from_alphas(&p.a, &p.b, alpha1, alpha2).expect("valid alphas");
    Problem::new(p.a, p.b, l1, l2).expect("consistent problem")
}
