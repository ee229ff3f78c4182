use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;

use super::OracleReport;
use crate::error::{Error, Result};
use crate::model::{gompertz_time, Model};
use crate::params::GammaRegime;

/// Gauss-Hermite nodes per expectation.
pub const DEFAULT_STENCIL: usize = 7;

/// Grid for the lattice solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub n_time: usize,
    pub n_space: usize,
    /// `(x_lo, x_hi)` in reduced units; nodes are uniform in `ln x`.
    pub x_range: (f64, f64),
    pub m_initial: f64,
    pub stencil: usize,
}

impl LatticeSpec {
    /// A grid whose range comfortably brackets the boundary: `[L/4, 6L]` for
    /// `gamma > 1`, `[L/8, 16L]` for `gamma < 1`, where the larger volatility needs
    /// more room on the continuation side.
    pub fn for_model(model: &Model, m_initial: f64, n_time: usize, n_space: usize) -> Self {
        let l = model.constants().l_terminal;
        let x_range = match model.constants().gamma_regime {
            GammaRegime::High => (0.25 * l, 6.0 * l),
            GammaRegime::Low => (0.125 * l, 16.0 * l),
        };
        LatticeSpec {
            n_time,
            n_space,
            x_range,
            m_initial,
            stencil: DEFAULT_STENCIL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_time < 16 || self.n_space < 16 {
            return Err(Error::InvalidLattice(format!(
                "n_time = {} and n_space = {} must both be at least 16",
                self.n_time, self.n_space
            )));
        }
        let (lo, hi) = self.x_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "x_range [{lo}, {hi}] must satisfy 0 < x_lo < x_hi"
            )));
        }
        if self.stencil < 3 {
            return Err(Error::InvalidLattice(format!(
                "stencil {} must have at least 3 nodes",
                self.stencil
            )));
        }
        if !(self.m_initial > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "m_initial = {} must be positive",
                self.m_initial
            )));
        }
        Ok(())
    }
}

/// Linear interpolation in `ln x` on a uniform log grid, flat beyond the ends.
fn interpolate(values: &[f64], ln_lo: f64, dln: f64, ln_x: f64) -> f64 {
    let pos = (ln_x - ln_lo) / dln;
    let last = values.len() - 1;
    if pos <= 0.0 {
        return values[0];
    }
    if pos >= last as f64 {
        return values[last];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// Zero crossing of the continuation value, interpolated in `ln x`.
fn zero_level(cont: &[f64], ln_grid: &[f64], regime: GammaRegime) -> Option<f64> {
    // scan from the continuation side towards the stopping side
    let n = cont.len();
    let order: Box<dyn Iterator<Item = usize>> = match regime {
        GammaRegime::High => Box::new(0..n - 1),
        GammaRegime::Low => Box::new((1..n).rev()),
    };
    for i in order {
        let j = match regime {
            GammaRegime::High => i + 1,
            GammaRegime::Low => i - 1,
        };
        if cont[i] > 0.0 && cont[j] <= 0.0 {
            let frac = cont[i] / (cont[i] - cont[j]);
            return Some((ln_grid[i] + frac * (ln_grid[j] - ln_grid[i])).exp());
        }
    }
    None
}

/// Backward induction for the reduced stopping problem on a log-x grid.
pub fn lattice_solve(model: &Model, spec: &LatticeSpec) -> Result<OracleReport> {
    spec.validate()?;
    let p = model.params();
    let c = model.constants();
    let horizon = p.t_horizon;
    let dt = horizon / spec.n_time as f64;
    let (lo, hi) = spec.x_range;
    let ln_lo = lo.ln();
    let dln = (hi.ln() - ln_lo) / (spec.n_space - 1) as f64;
    let ln_grid: Vec<f64> = (0..spec.n_space).map(|i| ln_lo + i as f64 * dln).collect();
    let x_grid: Vec<f64> = ln_grid.iter().map(|l| l.exp()).collect();
    let reward: Vec<f64> = x_grid.iter().map(|&x| model.running_reward(x)).collect();

    let rule = GaussHermite::new(NonZeroUsize::new(spec.stencil).expect("validated"));
    let norm = std::f64::consts::PI.sqrt();
    let stencil: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(z, w)| (std::f64::consts::SQRT_2 * z, w / norm))
        .collect();
    let shock = c.sigma1 * dt.sqrt();
    let discount = (-c.kappa * dt).exp();

    let t_grid: Vec<f64> = (0..=spec.n_time).map(|i| i as f64 * dt).collect();
    let mut value_grid = vec![Vec::new(); spec.n_time + 1];
    let mut boundary = vec![0.0; spec.n_time + 1];
    value_grid[spec.n_time] = vec![0.0; spec.n_space];
    boundary[spec.n_time] = c.l_terminal;

    let mut cont = vec![0.0; spec.n_space];
    for i in (0..spec.n_time).rev() {
        let m = model.mortality_at(spec.m_initial, t_grid[i]);
        let drift = (c.rho + 1.0) * ((p.beta - p.r) * dt + m * gompertz_time(p.a, dt))
            + (c.mu1 - 0.5 * c.sigma1 * c.sigma1) * dt;
        let next = &value_grid[i + 1];
        for (k, ln_x) in ln_grid.iter().enumerate() {
            let expect: f64 = stencil
                .iter()
                .map(|&(z, w)| w * interpolate(next, ln_lo, dln, ln_x + drift + shock * z))
                .sum();
            cont[k] = dt * reward[k] + discount * expect;
        }
        boundary[i] = zero_level(&cont, &ln_grid, c.gamma_regime).ok_or(Error::GridTooCoarse {
            slice: i,
            t: t_grid[i],
        })?;
        value_grid[i] = cont.iter().map(|&v| v.max(0.0)).collect();
    }

    Ok(OracleReport {
        fingerprint: model.fingerprint(),
        watermarked: model.is_watermarked(),
        m_initial: spec.m_initial,
        t_grid,
        x_grid,
        boundary_lattice: boundary,
        value_grid,
        mc_value: None,
    })
}
