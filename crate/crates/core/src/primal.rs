//! Maps dual results back to wealth and income: the multiplier, the wealth boundary,
//! the primal value and the feedback consumption and investment rules.

use crate::boundary::{j_hat_on_path, BoundarySolution};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::params::GammaRegime;
use crate::post_retirement::{post_retirement_consumption, post_retirement_value};

/// Relative finite-difference step for the x-derivatives of the value approximation.
pub const FD_REL_STEP: f64 = 1e-4;
/// Relative tolerance of the multiplier inversion.
pub const MULTIPLIER_TOL: f64 = 1e-10;
const MAX_MULTIPLIER_EXPANSIONS: usize = 60;

/// A point in primal coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalState {
    pub t: f64,
    pub w: f64,
    pub m: f64,
    pub y: f64,
}

/// Feedback rules at one primal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput {
    pub z_star: f64,
    /// Pre-retirement consumption, or post-retirement consumption when `retire_now`.
    pub c_star: f64,
    /// Amount held in the risky asset.
    pub pi_star: f64,
    pub retire_now: bool,
    pub b_hat: f64,
}

/// `J_tilde = J_hat + Q - q(t)` and its first two x-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JTilde {
    pub value: f64,
    pub dx: f64,
    pub dxx: f64,
}

/// Full dual value `J(t, z, m, y)` with the derivatives the policies need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualValue {
    /// Reduced state `z^(1/(1-gamma)) y^(gamma/(1-gamma))`.
    pub x: f64,
    pub j: f64,
    pub j_z: f64,
    pub j_zz: f64,
    pub j_zy: f64,
}

fn xi_of(sol: &BoundarySolution, t: f64) -> Result<f64> {
    if !(t >= -1e-12 * sol.horizon && t <= sol.horizon * (1.0 + 1e-12)) {
        return Err(Error::OutsideHorizon {
            t,
            horizon: sol.horizon,
        });
    }
    Ok((sol.horizon - t).clamp(0.0, sol.horizon))
}

/// Reduced state for multiplier `z` and income `y`.
pub fn reduced_state(model: &Model, z: f64, y: f64) -> f64 {
    let g = model.params().gamma;
    z.powf(1.0 / (1.0 - g)) * y.powf(g / (1.0 - g))
}

/// `J_tilde(t, x, m)` with derivatives. The value-approximation part uses finite
/// differences, one-sided from the continuation side when a stencil point would
/// cross the boundary; on the stopping side only the analytic `Q` terms remain.
pub fn j_tilde(model: &Model, sol: &BoundarySolution, t: f64, x: f64, m: f64) -> Result<JTilde> {
    let xi = xi_of(sol, t)?;
    sol.check_model(model)?;
    sol.check_mortality(model, xi, m)?;
    let q = model.q_profile();
    let base = JTilde {
        value: q.q_reduced(x, m)? - model.q_factor(t),
        dx: q.q_reduced_x(x, m)?,
        dxx: q.q_reduced_xx(x, m)?,
    };
    let b = sol.boundary_at(xi)?;
    if xi == 0.0 || sol.regime.is_stopping(x, b) {
        return Ok(base);
    }
    let jh = |x: f64| j_hat_on_path(model, sol, xi, x);
    let h = FD_REL_STEP * x;
    let f0 = jh(x)?;
    // direction pointing away from the boundary, into the continuation region
    let inward = match sol.regime {
        GammaRegime::High => -1.0,
        GammaRegime::Low => 1.0,
    };
    let outer = x - inward * h;
    let (d1, d2) = if !sol.regime.is_stopping(outer, b) && x + inward * h > 0.0 {
        let fp = jh(x + h)?;
        let fm = jh(x - h)?;
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    } else {
        let f1 = jh(x + inward * h)?;
        let f2 = jh(x + 2.0 * inward * h)?;
        let step = inward * h;
        (
            (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * step),
            (f0 - 2.0 * f1 + f2) / (h * h),
        )
    };
    Ok(JTilde {
        value: base.value + f0,
        dx: base.dx + d1,
        dxx: base.dxx + d2,
    })
}

/// `J(t, z, m, y) = z y J_tilde(t, x, m)` and its derivatives in `z` and `y`.
pub fn dual_value_j(
    model: &Model,
    sol: &BoundarySolution,
    t: f64,
    z: f64,
    m: f64,
    y: f64,
) -> Result<DualValue> {
    if !(z > 0.0) {
        return Err(Error::NonPositiveArgument { name: "z", value: z });
    }
    if !(y > 0.0) {
        return Err(Error::NonPositiveArgument { name: "y", value: y });
    }
    let g = model.params().gamma;
    let x = reduced_state(model, z, y);
    let jt = j_tilde(model, sol, t, x, m)?;
    let one_g = 1.0 - g;
    let j = z * y * jt.value;
    let j_z = y * jt.value + x * y / one_g * jt.dx;
    let j_zz = x * y / z * (2.0 - g) / (one_g * one_g) * jt.dx
        + x * x * y / z / (one_g * one_g) * jt.dxx;
    let j_zy = jt.value
        + x * (g - g * g + 1.0) / (one_g * one_g) * jt.dx
        + x * x * g / (one_g * one_g) * jt.dxx;
    Ok(DualValue {
        x,
        j,
        j_z,
        j_zz,
        j_zy,
    })
}

/// Wealth implied by multiplier `z`: `-J_z - q(t) y`.
pub fn wealth_of_multiplier(
    model: &Model,
    sol: &BoundarySolution,
    t: f64,
    z: f64,
    m: f64,
    y: f64,
) -> Result<f64> {
    let d = dual_value_j(model, sol, t, z, m, y)?;
    Ok(-d.j_z - model.human_capital(t, y))
}

fn check_state(model: &Model, sol: &BoundarySolution, s: &PrimalState) -> Result<()> {
    let xi = xi_of(sol, s.t)?;
    sol.check_model(model)?;
    sol.check_mortality(model, xi, s.m)?;
    if !(s.y > 0.0) {
        return Err(Error::NonPositiveArgument { name: "y", value: s.y });
    }
    let floor = model.human_capital(s.t, s.y);
    if !(s.w > -floor) {
        return Err(Error::InadmissibleWealth {
            wealth: s.w,
            floor: -floor,
        });
    }
    Ok(())
}

/// The unique `z > 0` with `-J_z(t, z, m, y) - q(t) y = w`, by bisection on `ln z`.
pub fn invert_multiplier(model: &Model, sol: &BoundarySolution, s: &PrimalState) -> Result<f64> {
    check_state(model, sol, s)?;
    let total = s.w + model.human_capital(s.t, s.y);
    // post-retirement minimizer for total wealth as a starting point
    let guess = post_retirement_value(model, total, s.m)?.z;
    let excess = |ln_z: f64| -> Result<f64> {
        Ok(wealth_of_multiplier(model, sol, s.t, ln_z.exp(), s.m, s.y)? - s.w)
    };
    // excess is decreasing in z
    let mut lo = guess.ln() - 0.5;
    let mut hi = guess.ln() + 0.5;
    let mut f_lo = excess(lo)?;
    let mut f_hi = excess(hi)?;
    let mut expansions = 0;
    while f_lo < 0.0 || f_hi > 0.0 {
        if expansions == MAX_MULTIPLIER_EXPANSIONS {
            return Err(Error::BracketNotFound {
                step: 0,
                lo: lo.exp(),
                hi: hi.exp(),
                f_lo,
                f_hi,
            });
        }
        expansions += 1;
        if f_lo < 0.0 {
            hi = lo;
            f_hi = f_lo;
            lo -= 2.0;
            f_lo = excess(lo)?;
        } else {
            lo = hi;
            f_lo = f_hi;
            hi += 2.0;
            f_hi = excess(hi)?;
        }
    }
    while hi - lo > MULTIPLIER_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Wealth above which retiring now is optimal (below for `gamma < 1` in reduced terms;
/// in wealth the retirement side is always `w >= b_hat`).
pub fn wealth_boundary(model: &Model, sol: &BoundarySolution, t: f64, m: f64, y: f64) -> Result<f64> {
    Ok(y * wage_ratio_boundary(model, sol, t, m)?)
}

/// Critical wealth-to-wage ratio `b_hat / y`.
pub fn wage_ratio_boundary(model: &Model, sol: &BoundarySolution, t: f64, m: f64) -> Result<f64> {
    let xi = xi_of(sol, t)?;
    sol.check_model(model)?;
    sol.check_mortality(model, xi, m)?;
    let b = sol.boundary_at(xi)?;
    let q = model.q_profile();
    let g = model.params().gamma;
    Ok(-q.q_reduced(b, m)? - b / (1.0 - g) * q.q_reduced_x(b, m)?)
}

/// Optimal multiplier, consumption, investment and retirement decision.
pub fn feedback_policies(model: &Model, sol: &BoundarySolution, s: &PrimalState) -> Result<PolicyOutput> {
    let z = invert_multiplier(model, sol, s)?;
    let b_hat = wealth_boundary(model, sol, s.t, s.m, s.y)?;
    let retire_now = s.w >= b_hat;
    let p = model.params();
    let c = model.constants();
    let c_star = if retire_now {
        post_retirement_consumption(model, z)
    } else {
        z.powf(-1.0 / p.gamma)
    };
    let d = dual_value_j(model, sol, s.t, z, s.m, s.y)?;
    let q_t = model.q_factor(s.t);
    let pi_star = c.theta / p.sigma * z * d.j_zz - p.sigma_y / p.sigma * s.y * (q_t + d.j_zy);
    Ok(PolicyOutput {
        z_star: z,
        c_star,
        pi_star,
        retire_now,
        b_hat,
    })
}

/// `V(t, w, m, y) = J(t, z*, m, y) + z* (w + q(t) y)`.
pub fn primal_value(model: &Model, sol: &BoundarySolution, s: &PrimalState) -> Result<f64> {
    let z = invert_multiplier(model, sol, s)?;
    primal_value_at(model, sol, s, z)
}

/// `J(t, z, m, y) + z (w + q(t) y)` for a given multiplier.
pub fn primal_value_at(model: &Model, sol: &BoundarySolution, s: &PrimalState, z: f64) -> Result<f64> {
    let d = dual_value_j(model, sol, s.t, z, s.m, s.y)?;
    Ok(d.j + z * (s.w + model.human_capital(s.t, s.y)))
}
