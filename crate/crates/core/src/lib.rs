//! Optimal retirement with a free boundary: the integral-equation solver for the
//! retirement boundary, the post-retirement closed form, primal feedback policies and
//! independent lattice and Monte Carlo checks.

pub mod boundary;
pub mod csv_io;
pub mod error;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod params;
pub mod post_retirement;
pub mod primal;

pub use boundary::{j_hat, j_hat_on_path, residuals, solve_boundary, solve_boundary_with, BoundarySolution, Scheme};
pub use error::{Error, Result};
pub use kernel::g_kernel;
pub use model::{Model, Phase};
pub use oracle::{lattice_solve, mc_evaluate, LatticeSpec, McEstimate, McSettings, OracleReport};
pub use params::{AssumptionCheck, DerivedConstants, GammaRegime, ModelParams};
pub use post_retirement::{post_retirement_consumption, post_retirement_value, PostRetirementValue, QProfile};
pub use primal::{feedback_policies, invert_multiplier, primal_value, wealth_boundary, PolicyOutput, PrimalState};
