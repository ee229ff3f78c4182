use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::boundary::BoundarySolution;
use crate::error::{Error, Result};
use crate::model::{gompertz_time, Model};

/// Fewest paths [`mc_evaluate`] accepts.
pub const MIN_PATHS: usize = 1000;

/// Simulation controls for [`mc_evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_paths: usize,
    pub seed: u64,
    /// Pair every path with its mirror image; `n_paths` then counts both.
    pub antithetic: bool,
    /// Monitoring dates per boundary grid step.
    pub substeps: usize,
}

impl McSettings {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        McSettings {
            n_paths,
            seed,
            antithetic: false,
            substeps: 1,
        }
    }
}

/// Sample mean of the discounted reward collected until the boundary is hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Independent samples behind `stderr` (pairs when antithetic).
    pub n_samples: usize,
}

/// Monitoring dates from `xi0` down to 0: the first lands on the grid node below.
fn monitoring_dates(sol: &BoundarySolution, xi0: f64, substeps: usize) -> Vec<f64> {
    let h = sol.step();
    let pos = xi0 / h;
    let snapped = pos.round();
    let top = if (pos - snapped).abs() <= 1e-9 { snapped } else { pos.floor() } as usize;
    let mut dates = vec![xi0];
    let mut push = |xi: f64| {
        if xi < *dates.last().unwrap() - 1e-12 {
            dates.push(xi);
        }
    };
    if (top as f64) * h < xi0 - 1e-12 {
        push(top as f64 * h);
    }
    for j in (0..top).rev() {
        for k in (0..substeps).rev() {
            push(j as f64 * h + k as f64 * h / substeps as f64);
        }
    }
    dates
}

struct PathPlan {
    /// Per interval: `(dt, log drift, vol, elapsed at the interval end)`.
    steps: Vec<(f64, f64, f64, f64)>,
    bounds: Vec<f64>,
}

/// Discounted running reward along one path, stopped at the first monitoring date on
/// the stopping side; the reward is integrated with the trapezoid rule.
fn run_path(model: &Model, sol: &BoundarySolution, plan: &PathPlan, x0: f64, shocks: impl Iterator<Item = f64>) -> f64 {
    let kappa = model.constants().kappa;
    let mut ln_x = x0.ln();
    let mut prev = model.running_reward(x0);
    let mut total = 0.0;
    for ((&(dt, drift, vol, elapsed), &b), z) in plan.steps.iter().zip(&plan.bounds[1..]).zip(shocks) {
        ln_x += drift + vol * z;
        let x = ln_x.exp();
        let next = (-kappa * elapsed).exp() * model.running_reward(x);
        total += 0.5 * dt * (prev + next);
        if sol.regime.is_stopping(x, b) {
            break;
        }
        prev = next;
    }
    total
}

/// Expected discounted running reward from reduced state `x0` at reversed time `xi0`
/// under the exercise rule "stop once `x` crosses `sol`". Mortality follows the
/// solved path. Results are reproducible for a given seed regardless of thread count.
pub fn mc_evaluate(model: &Model, sol: &BoundarySolution, xi0: f64, x0: f64, settings: &McSettings) -> Result<McEstimate> {
    sol.check_model(model)?;
    if !(x0 > 0.0) {
        return Err(Error::NonPositiveArgument { name: "x", value: x0 });
    }
    if settings.n_paths < MIN_PATHS {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            value: settings.n_paths as f64,
            reason: "at least 1000 paths are required",
        });
    }
    if settings.substeps == 0 {
        return Err(Error::InvalidParameter {
            name: "substeps",
            value: 0.0,
            reason: "at least one monitoring date per grid step is required",
        });
    }
    let b0 = sol.boundary_at(xi0)?;
    let pairs = if settings.antithetic { settings.n_paths / 2 } else { settings.n_paths };
    if sol.regime.is_stopping(x0, b0) || xi0 <= 0.0 {
        return Ok(McEstimate {
            mean: 0.0,
            stderr: 0.0,
            n_samples: pairs,
        });
    }

    let p = model.params();
    let c = model.constants();
    let dates = monitoring_dates(sol, xi0, settings.substeps);
    let mut steps = Vec::with_capacity(dates.len() - 1);
    let mut bounds = Vec::with_capacity(dates.len());
    bounds.push(b0);
    for w in dates.windows(2) {
        let dt = w[0] - w[1];
        let m = sol.path_mortality(model, w[0]);
        let drift = (c.rho + 1.0) * ((p.beta - p.r) * dt + m * gompertz_time(p.a, dt))
            + (c.mu1 - 0.5 * c.sigma1 * c.sigma1) * dt;
        steps.push((dt, drift, c.sigma1 * dt.sqrt(), xi0 - w[1]));
        bounds.push(sol.boundary_at(w[1])?);
    }
    let plan = PathPlan { steps, bounds };
    let n_steps = plan.steps.len();

    let samples: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(i as u64);
            let z: Vec<f64> = (0..n_steps).map(|_| rng.sample(StandardNormal)).collect();
            let v = run_path(model, sol, &plan, x0, z.iter().copied());
            if settings.antithetic {
                0.5 * (v + run_path(model, sol, &plan, x0, z.iter().map(|s| -s)))
            } else {
                v
            }
        })
        .collect();

    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        n_samples: samples.len(),
    })
}
