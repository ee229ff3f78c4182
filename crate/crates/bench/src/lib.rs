//! Shared fixtures for the benchmarks.

use retirement_core::boundary::DEFAULT_ROOT_TOL;
use retirement_core::{solve_boundary, BoundarySolution, Model, ModelParams};

pub const M0: f64 = 0.004;

pub fn baseline() -> Model {
    Model::new(ModelParams::baseline()).expect("baseline satisfies its assumptions")
}

/// Baseline boundary on `n` steps.
pub fn solved(model: &Model, n: usize) -> BoundarySolution {
    solve_boundary(model, M0, n, DEFAULT_ROOT_TOL).expect("baseline solves")
}
