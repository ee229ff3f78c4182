//! Recursive trapezoid solution of the free-boundary integral equation and the value
//! approximation built on it.
//!
//! Time runs backwards: `xi = T - t`, so `xi = 0` is the mandatory retirement date
//! where the boundary equals the terminal level `L`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::kernel::KernelSlice;
use crate::model::Model;
use crate::params::GammaRegime;

pub const DEFAULT_ROOT_TOL: f64 = 1e-8;
/// Cap on bracket expansions per step.
pub const MAX_BRACKET_EXPANSIONS: usize = 20;
const MAX_BISECTIONS: usize = 200;
/// Relative mismatch tolerated between a supplied mortality and the solved path.
const MORTALITY_PATH_TOL: f64 = 1e-9;
/// Gauss-Legendre nodes on the panels nearest the evaluation date, where the
/// integrand still feels the `sqrt(s)` singularity at `s = 0`.
const LEGENDRE_NODES_NEAR: usize = 8;
/// Gauss-Legendre nodes on the remaining panels.
const LEGENDRE_NODES_FAR: usize = 4;
/// Panels, counted from the evaluation date, that use the denser rule.
const NEAR_PANELS: usize = 3;

/// Discretization of the boundary equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Trapezoid rule on the uniform grid, with the one-half convention at `s = 0`.
    Trapezoid,
    /// Exact integration against the piecewise-linear boundary through the grid
    /// values: adaptive on the panel next to the evaluation date, where the integrand
    /// is singular in `s`, and Gauss-Legendre on the others. [`j_hat`] uses the same
    /// rule, so the solved boundary is the zero level set of the value approximation.
    #[default]
    PiecewiseLinear,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Trapezoid => "trapezoid",
            Scheme::PiecewiseLinear => "piecewise-linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "trapezoid" => Some(Scheme::Trapezoid),
            "piecewise-linear" => Some(Scheme::PiecewiseLinear),
            _ => None,
        }
    }
}

/// The solved boundary on the reversed-time grid for one initial mortality.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySolution {
    pub fingerprint: String,
    pub watermarked: bool,
    /// Force of mortality at `t = 0`.
    pub m_initial: f64,
    pub horizon: f64,
    pub n_steps: usize,
    pub root_tol: f64,
    pub scheme: Scheme,
    pub regime: GammaRegime,
    pub xi_grid: Vec<f64>,
    pub b_star: Vec<f64>,
    /// Value of the discretized equation at each solved point (0 at the terminal node).
    pub residuals: Vec<f64>,
}

impl BoundarySolution {
    /// A boundary held at `level` on the whole grid; useful as an exercise rule.
    pub fn constant(model: &Model, m_initial: f64, n_steps: usize, level: f64) -> Self {
        let horizon = model.horizon();
        let dxi = horizon / n_steps as f64;
        BoundarySolution {
            fingerprint: model.fingerprint(),
            watermarked: model.is_watermarked(),
            m_initial,
            horizon,
            n_steps,
            root_tol: DEFAULT_ROOT_TOL,
            scheme: Scheme::default(),
            regime: model.constants().gamma_regime,
            xi_grid: (0..=n_steps).map(|j| j as f64 * dxi).collect(),
            b_star: vec![level; n_steps + 1],
            residuals: vec![0.0; n_steps + 1],
        }
    }

    /// Every boundary value multiplied by `factor`; residuals no longer apply and are zeroed.
    pub fn scaled(&self, factor: f64) -> Self {
        BoundarySolution {
            b_star: self.b_star.iter().map(|b| b * factor).collect(),
            residuals: vec![0.0; self.residuals.len()],
            ..self.clone()
        }
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Calendar time of grid node `j`.
    pub fn t_of(&self, j: usize) -> f64 {
        self.horizon - self.xi_grid[j]
    }

    pub fn terminal(&self) -> f64 {
        self.b_star[0]
    }

    /// Boundary at reversed time `xi`, linear between grid nodes.
    pub fn boundary_at(&self, xi: f64) -> Result<f64> {
        let slack = 1e-12 * self.horizon;
        if !(xi >= -slack && xi <= self.horizon + slack) {
            return Err(Error::OutsideHorizon {
                t: self.horizon - xi,
                horizon: self.horizon,
            });
        }
        let pos = (xi / self.step()).clamp(0.0, self.n_steps as f64);
        let j = (pos.floor() as usize).min(self.n_steps - 1);
        let frac = pos - j as f64;
        if frac == 0.0 {
            return Ok(self.b_star[j]);
        }
        Ok(self.b_star[j] + frac * (self.b_star[j + 1] - self.b_star[j]))
    }

    /// Boundary at calendar time `t`.
    pub fn boundary_at_time(&self, t: f64) -> Result<f64> {
        self.boundary_at(self.horizon - t)
    }

    /// Mortality on the solved path at reversed time `xi`.
    pub fn path_mortality(&self, model: &Model, xi: f64) -> f64 {
        model.mortality_at(self.m_initial, self.horizon - xi)
    }

    pub fn check_model(&self, model: &Model) -> Result<()> {
        let fp = model.fingerprint();
        if fp != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                solved: self.fingerprint.clone(),
                model: fp,
            });
        }
        Ok(())
    }

    /// Ensures `m` is the mortality the solved path reaches at `xi`.
    pub fn check_mortality(&self, model: &Model, xi: f64, m: f64) -> Result<()> {
        let expected = self.path_mortality(model, xi);
        if !((m - expected).abs() <= MORTALITY_PATH_TOL * expected) {
            return Err(Error::MortalityOffPath {
                t: self.horizon - xi,
                m,
                expected,
            });
        }
        Ok(())
    }
}

fn unit_rule(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero"))
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Gauss-Legendre nodes on `[0, 1]` with weights summing to one, for the panel at
/// position `panel` (0 = next to the evaluation date).
fn unit_legendre(panel: usize) -> &'static [(f64, f64)] {
    static NEAR: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static FAR: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    if panel < NEAR_PANELS {
        NEAR.get_or_init(|| unit_rule(LEGENDRE_NODES_NEAR))
    } else {
        FAR.get_or_init(|| unit_rule(LEGENDRE_NODES_FAR))
    }
}

/// Kernel slices `s_i = i dxi`, `i = 0..=k`, for the step ending at `xi_k`.
fn step_slices(model: &Model, m_k: f64, dxi: f64, k: usize) -> Vec<KernelSlice> {
    (0..=k)
        .map(|i| KernelSlice::new(model, i as f64 * dxi, m_k))
        .collect()
}

/// Adaptive integral of `G(s, x, b_lin(s))` over `[0, h]`, where `b_lin` runs linearly
/// from `b_near` at `s = 0` to `b_far` at `s = h`.
fn first_panel(model: &Model, m: f64, h: f64, x: f64, b_near: f64, b_far: f64) -> f64 {
    quadrature::integrate(
        |s| {
            let b = b_near + (b_far - b_near) * (s / h);
            KernelSlice::new(model, s, m).eval(x, b)
        },
        0.0,
        h,
        1e-12 * h,
    )
    .integral
}

/// Quadrature nodes for the panels between grid nodes `top` and 0, seen from reversed
/// time `xi > xi_grid[top]`: kernel slice, boundary value and weight per node.
struct TailNodes {
    slices: Vec<KernelSlice>,
    ln_bounds: Vec<f64>,
    weights: Vec<f64>,
    power: f64,
}

impl TailNodes {
    fn new(model: &Model, m: f64, xi: f64, grid: &[f64], b: &[f64], top: usize) -> Self {
        let cap = top * LEGENDRE_NODES_NEAR;
        let mut out = TailNodes {
            slices: Vec::with_capacity(cap),
            ln_bounds: Vec::with_capacity(cap),
            weights: Vec::with_capacity(cap),
            power: model.constants().power,
        };
        for j in (1..=top).rev() {
            let s0 = xi - grid[j];
            let width = grid[j] - grid[j - 1];
            // panel 0 is the head panel, integrated separately
            for &(u, w) in unit_legendre(top + 1 - j) {
                out.slices.push(KernelSlice::new(model, s0 + u * width, m));
                out.ln_bounds.push((b[j] + (b[j - 1] - b[j]) * u).ln());
                out.weights.push(w * width);
            }
        }
        out
    }

    fn integrate(&self, x: f64) -> f64 {
        let ln_x = x.ln();
        let x_pow = x.powf(self.power);
        self.slices
            .iter()
            .zip(&self.ln_bounds)
            .zip(&self.weights)
            .map(|((sl, &ln_b), &w)| w * sl.eval_prepared(ln_b - ln_x, x_pow))
            .sum()
    }
}

/// The discretized equation at one step, as a function of the trial boundary value.
enum StepEquation<'a> {
    Trapezoid {
        slices: Vec<KernelSlice>,
        b_star: &'a [f64],
        dxi: f64,
    },
    PiecewiseLinear {
        model: &'a Model,
        m: f64,
        dxi: f64,
        b_prev: f64,
        tail: TailNodes,
    },
}

impl<'a> StepEquation<'a> {
    fn new(model: &'a Model, scheme: Scheme, m_initial: f64, grid: &[f64], b_star: &'a [f64], k: usize) -> Self {
        let dxi = grid[1] - grid[0];
        let m_k = model.mortality_at(m_initial, model.horizon() - grid[k]);
        match scheme {
            Scheme::Trapezoid => StepEquation::Trapezoid {
                slices: step_slices(model, m_k, dxi, k),
                b_star: &b_star[..k],
                dxi,
            },
            Scheme::PiecewiseLinear => StepEquation::PiecewiseLinear {
                model,
                m: m_k,
                dxi,
                b_prev: b_star[k - 1],
                tail: TailNodes::new(model, m_k, grid[k], grid, b_star, k - 1),
            },
        }
    }

    fn residual(&self, b: f64) -> f64 {
        match self {
            StepEquation::Trapezoid { slices, b_star, dxi } => {
                let k = slices.len() - 1;
                let mut sum = slices[0].eval(b, b) + slices[k].eval(b, b_star[0]);
                for i in 1..k {
                    sum += 2.0 * slices[i].eval(b, b_star[k - i]);
                }
                0.5 * dxi * sum
            }
            StepEquation::PiecewiseLinear {
                model,
                m,
                dxi,
                b_prev,
                tail,
            } => first_panel(model, *m, *dxi, b, b, *b_prev) + tail.integrate(b),
        }
    }
}

/// Bisection for one step, with the bracket grown away from `L` until it changes sign.
fn solve_step<F: Fn(f64) -> f64>(
    f: F,
    regime: GammaRegime,
    l: f64,
    tol: f64,
    step: usize,
) -> Result<(f64, f64)> {
    // true when the residual says the root lies above the trial point
    let root_above = |r: f64| match regime {
        GammaRegime::High => r > 0.0,
        GammaRegime::Low => r < 0.0,
    };
    let (mut lo, mut hi) = match regime {
        GammaRegime::High => (l, 2.0 * l),
        GammaRegime::Low => (0.5 * l, l),
    };
    let anchor = f(l);
    let anchor_ok = match regime {
        GammaRegime::High => root_above(anchor) || anchor == 0.0,
        GammaRegime::Low => !root_above(anchor),
    };
    let mut far = f(match regime {
        GammaRegime::High => hi,
        GammaRegime::Low => lo,
    });
    let mut expansions = 0;
    let far_ok = |r: f64| match regime {
        GammaRegime::High => !root_above(r),
        GammaRegime::Low => root_above(r),
    };
    while anchor_ok && !far_ok(far) {
        if expansions == MAX_BRACKET_EXPANSIONS {
            break;
        }
        expansions += 1;
        match regime {
            GammaRegime::High => {
                lo = hi;
                hi *= 2.0;
                far = f(hi);
            }
            GammaRegime::Low => {
                hi = lo;
                lo *= 0.5;
                far = f(lo);
            }
        }
    }
    if !anchor_ok || !far_ok(far) {
        let (f_lo, f_hi) = match regime {
            GammaRegime::High => (anchor, far),
            GammaRegime::Low => (far, anchor),
        };
        return Err(Error::BracketNotFound {
            step,
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations == MAX_BISECTIONS {
            return Err(Error::RootToleranceNotMet {
                step,
                tol,
                width: hi - lo,
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket is down to adjacent floats
            break;
        }
        if root_above(f(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    if hi - lo > tol {
        return Err(Error::RootToleranceNotMet {
            step,
            tol,
            width: hi - lo,
        });
    }
    let b = 0.5 * (lo + hi);
    Ok((b, f(b)))
}

/// Solves for the boundary on `n_steps` reversed-time steps starting from mortality
/// `m_initial` at `t = 0`, with the default [`Scheme`].
pub fn solve_boundary(
    model: &Model,
    m_initial: f64,
    n_steps: usize,
    root_tol: f64,
) -> Result<BoundarySolution> {
    solve_boundary_with(model, m_initial, n_steps, root_tol, Scheme::default())
}

/// [`solve_boundary`] with an explicit discretization.
pub fn solve_boundary_with(
    model: &Model,
    m_initial: f64,
    n_steps: usize,
    root_tol: f64,
    scheme: Scheme,
) -> Result<BoundarySolution> {
    if n_steps < 2 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            value: n_steps as f64,
            reason: "must be at least 2",
        });
    }
    if !(m_initial > 0.0 && m_initial.is_finite()) {
        return Err(Error::NonPositiveArgument {
            name: "m",
            value: m_initial,
        });
    }
    if !(root_tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "root_tol",
            value: root_tol,
            reason: "must be positive",
        });
    }
    let c = model.constants();
    let horizon = model.horizon();
    let dxi = horizon / n_steps as f64;
    let mut b_star = Vec::with_capacity(n_steps + 1);
    let mut residuals = Vec::with_capacity(n_steps + 1);
    b_star.push(c.l_terminal);
    residuals.push(0.0);
    let xi_grid: Vec<f64> = (0..=n_steps).map(|j| j as f64 * dxi).collect();
    for k in 1..=n_steps {
        let eq = StepEquation::new(model, scheme, m_initial, &xi_grid, &b_star, k);
        let (b, r) = solve_step(
            |b| eq.residual(b),
            c.gamma_regime,
            c.l_terminal,
            root_tol,
            k,
        )?;
        b_star.push(b);
        residuals.push(r);
    }
    Ok(BoundarySolution {
        fingerprint: model.fingerprint(),
        watermarked: model.is_watermarked(),
        m_initial,
        horizon,
        n_steps,
        root_tol,
        scheme,
        regime: c.gamma_regime,
        xi_grid,
        b_star,
        residuals,
    })
}

/// Re-evaluates the discretized equation at the stored boundary values.
pub fn residuals(model: &Model, sol: &BoundarySolution) -> Result<Vec<f64>> {
    sol.check_model(model)?;
    let mut out = vec![0.0];
    for k in 1..=sol.n_steps {
        let eq = StepEquation::new(model, sol.scheme, sol.m_initial, &sol.xi_grid, &sol.b_star, k);
        out.push(eq.residual(sol.b_star[k]));
    }
    Ok(out)
}

/// Value approximation at reversed time `xi`, reduced state `x` and mortality `m`,
/// which must be the mortality the solved path reaches at `xi`.
pub fn j_hat(model: &Model, sol: &BoundarySolution, xi: f64, x: f64, m: f64) -> Result<f64> {
    sol.check_mortality(model, xi, m)?;
    j_hat_on_path(model, sol, xi, x)
}

/// [`j_hat`] with the mortality taken from the solved path.
///
/// Zero on the stopping side. On the continuation side the integral runs against the
/// piecewise-linear boundary with the same rule as [`Scheme::PiecewiseLinear`]; for
/// off-grid `xi` the panel next to the evaluation date is shorter than the grid step.
pub fn j_hat_on_path(model: &Model, sol: &BoundarySolution, xi: f64, x: f64) -> Result<f64> {
    sol.check_model(model)?;
    if !(x > 0.0) {
        return Err(Error::NonPositiveArgument { name: "x", value: x });
    }
    let b_xi = sol.boundary_at(xi)?;
    let xi = xi.clamp(0.0, sol.horizon);
    if xi == 0.0 || sol.regime.is_stopping(x, b_xi) {
        return Ok(0.0);
    }
    let m = sol.path_mortality(model, xi);
    let dxi = sol.step();
    // snap to a node when within rounding of it, otherwise take the node just below
    let pos = xi / dxi;
    let nearest = pos.round();
    let (xi, top) = if (pos - nearest).abs() < 1e-9 {
        if nearest == 0.0 {
            return Ok(0.0);
        }
        (nearest * dxi, nearest as usize - 1)
    } else {
        (xi, pos.floor() as usize)
    };
    let head = xi - sol.xi_grid[top];
    let value = first_panel(model, m, head, x, b_xi, sol.b_star[top])
        + TailNodes::new(model, m, xi, &sol.xi_grid, &sol.b_star, top).integrate(x);

    if value < 0.0 {
        let tol = 10.0 * sol.root_tol;
        if value >= -tol {
            return Ok(0.0);
        }
        return Err(Error::NegativeValueBeyondTolerance { xi, x, value, tol });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn model() -> &'static Model {
        static M: OnceLock<Model> = OnceLock::new();
        M.get_or_init(|| Model::new(ModelParams::baseline()).unwrap())
    }

    fn solution() -> &'static BoundarySolution {
        static S: OnceLock<BoundarySolution> = OnceLock::new();
        S.get_or_init(|| solve_boundary(model(), 0.004, 100, DEFAULT_ROOT_TOL).unwrap())
    }

    #[test]
    fn terminal_level_and_shape() {
        let sol = solution();
        assert_eq!(sol.b_star[0], model().constants().l_terminal);
        assert!(sol.b_star.windows(2).all(|w| w[1] >= w[0]));
        assert!(sol.residuals.iter().all(|r| r.abs() <= sol.root_tol));
    }

    #[test]
    fn trapezoid_matches_reference() {
        let sol = solve_boundary_with(model(), 0.004, 100, DEFAULT_ROOT_TOL, Scheme::Trapezoid).unwrap();
        // frozen from an independent implementation of the same recursion
        assert_relative_eq!(sol.b_star[100], 2.5006110646, max_relative = 1e-8);
        assert!(sol.residuals.iter().all(|r| r.abs() <= sol.root_tol));
    }

    #[test]
    fn residuals_recompute() {
        let sol = solution();
        let r = residuals(model(), sol).unwrap();
        for (a, b) in r.iter().zip(&sol.residuals) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn interpolation() {
        let sol = solution();
        assert_eq!(sol.boundary_at(0.0).unwrap(), sol.b_star[0]);
        assert_eq!(sol.boundary_at(10.0).unwrap(), sol.b_star[100]);
        let mid = sol.boundary_at(0.25).unwrap();
        assert_relative_eq!(mid, 0.5 * (sol.b_star[2] + sol.b_star[3]), max_relative = 1e-14);
        assert!(sol.boundary_at(10.5).is_err());
        assert_eq!(sol.boundary_at_time(10.0).unwrap(), sol.b_star[0]);
    }

    #[test]
    fn j_hat_basic() {
        let m = model();
        let sol = solution();
        assert_eq!(j_hat_on_path(m, sol, 0.0, 1.0).unwrap(), 0.0);
        let b = sol.boundary_at(5.0).unwrap();
        assert_eq!(j_hat_on_path(m, sol, 5.0, b).unwrap(), 0.0);
        assert_eq!(j_hat_on_path(m, sol, 5.0, 3.0 * b).unwrap(), 0.0);
        let cap = (1.0 - (-0.04f64 * 5.0).exp()) / 0.04;
        let v = j_hat_on_path(m, sol, 5.0, 1.0).unwrap();
        assert!(v > 0.0 && v <= cap + 1e-4, "{v}");
        let near = j_hat_on_path(m, sol, 5.0, b * (1.0 - 1e-6)).unwrap();
        assert!(near >= 0.0 && near < 1e-3);
        let tiny = j_hat_on_path(m, sol, 5.0, 1e-9).unwrap();
        assert_relative_eq!(tiny, cap, max_relative = 2e-3);
    }

    #[test]
    fn j_hat_checks_mortality_and_fingerprint() {
        let m = model();
        let sol = solution();
        let on_path = sol.path_mortality(m, 5.0);
        assert!(j_hat(m, sol, 5.0, 1.0, on_path).is_ok());
        assert!(matches!(
            j_hat(m, sol, 5.0, 1.0, 2.0 * on_path),
            Err(Error::MortalityOffPath { .. })
        ));
        let other = Model::new(ModelParams {
            k: 3.0,
            ..ModelParams::baseline()
        })
        .unwrap();
        assert!(matches!(
            j_hat_on_path(&other, sol, 5.0, 1.0),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn low_gamma_regime() {
        let p = ModelParams {
            gamma: 0.5,
            beta: 0.05,
            ..ModelParams::baseline()
        };
        let m = Model::new(p).unwrap();
        let sol = solve_boundary(&m, 0.004, 40, DEFAULT_ROOT_TOL).unwrap();
        let l = m.constants().l_terminal;
        assert_eq!(sol.regime, GammaRegime::Low);
        assert!(sol.b_star.iter().all(|&b| b <= l));
        assert!(sol.b_star.windows(2).all(|w| w[1] <= w[0]));
        let b = sol.boundary_at(5.0).unwrap();
        assert_eq!(j_hat_on_path(&m, &sol, 5.0, 0.5 * b).unwrap(), 0.0);
        assert!(j_hat_on_path(&m, &sol, 5.0, 2.0 * b).unwrap() > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = model();
        assert!(solve_boundary(m, 0.004, 1, 1e-8).is_err());
        assert!(solve_boundary(m, 0.0, 10, 1e-8).is_err());
        assert!(solve_boundary(m, 0.004, 10, 0.0).is_err());
    }

    #[test]
    fn constant_and_scaled() {
        let m = model();
        let c = BoundarySolution::constant(m, 0.004, 10, 3.0);
        assert!(c.b_star.iter().all(|&b| b == 3.0));
        let s = solution().scaled(1.05);
        assert_relative_eq!(s.b_star[7], 1.05 * solution().b_star[7]);
    }
}
