//! Independent checks of the integral-equation solution: a lattice solver of the
//! reduced stopping problem and a Monte Carlo evaluator of boundary exercise rules.

mod lattice;
mod monte_carlo;

pub use lattice::{lattice_solve, LatticeSpec, DEFAULT_STENCIL};
pub use monte_carlo::{mc_evaluate, McEstimate, McSettings, MIN_PATHS};

/// `-zeta(1/2) / sqrt(2 pi)`: the shift between boundaries monitored at discrete
/// dates and continuously, in units of `sigma sqrt(dt)`.
pub const DISCRETE_MONITORING_SHIFT: f64 = 0.5825971579390107;

/// Lattice output, optionally with a Monte Carlo estimate attached.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub fingerprint: String,
    pub watermarked: bool,
    pub m_initial: f64,
    /// Calendar times of the lattice slices, `0..=T`.
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// Zero-level `x` of the lattice value per slice; the last slice holds the
    /// terminal level.
    pub boundary_lattice: Vec<f64>,
    /// Lattice value per slice (outer index) and node (inner index).
    pub value_grid: Vec<Vec<f64>>,
    pub mc_value: Option<McEstimate>,
}

impl OracleReport {
    /// Lattice boundary at reversed time `xi = T - t`, linear between slices.
    pub fn boundary_at(&self, xi: f64) -> Option<f64> {
        let horizon = *self.t_grid.last()?;
        let t = horizon - xi;
        if !(t >= -1e-12 && t <= horizon + 1e-12) {
            return None;
        }
        let n = self.t_grid.len() - 1;
        let pos = (t / horizon * n as f64).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).min(n - 1);
        let frac = pos - i as f64;
        Some(self.boundary_lattice[i] + frac * (self.boundary_lattice[i + 1] - self.boundary_lattice[i]))
    }

    /// [`OracleReport::boundary_at`] moved by the discrete-monitoring shift
    /// `exp(0.5826 sigma1 sqrt(dt))` towards the stopping side, which approximates the
    /// boundary of the continuously exercised problem.
    pub fn boundary_corrected_at(&self, xi: f64, sigma1: f64) -> Option<f64> {
        let dt = self.t_grid.get(1)? - self.t_grid[0];
        Some(self.boundary_at(xi)? * (DISCRETE_MONITORING_SHIFT * sigma1 * dt.sqrt()).exp())
    }
}
