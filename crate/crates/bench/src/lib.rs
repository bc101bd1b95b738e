//! Fixtures shared by the benchmarks.

use norm_descent::problems::{make_quadratic, QuadraticProblem};

/// Rotated quadratic with one outlier eigenvalue.
pub fn outlier_quadratic(d: usize, seed: u64) -> QuadraticProblem {
    make_quadratic(d, 50.0, 0.6, seed).expect("valid benchmark problem")
}

/// Deterministic starting point with mixed signs.
pub fn start(d: usize) -> Vec<f64> {
    (0..d)
        .map(|i| if i % 2 == 0 { 1.0 } else { -0.5 })
        .collect()
}
