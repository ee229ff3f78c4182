//! The integrand of the boundary equation.
//!
//! With the signed volatility `sigma1` in the denominator of `d1`, `d2`, the normal
//! CDF terms are the probabilities of staying on the continuation side in both
//! regimes: `P[X_s <= b]` when `sigma1 > 0` (`gamma > 1`) and `P[X_s >= b]` when
//! `sigma1 < 0` (`gamma < 1`).

use std::f64::consts::FRAC_1_SQRT_2;

use crate::model::{gompertz_time, Model};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Everything in `G(s, x, b)` that depends on `s` and the mortality at the start date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSlice {
    pub s: f64,
    /// `sigma1 sqrt(s)`.
    vol: f64,
    /// Integrated log drift entering `d1`.
    drift1: f64,
    /// Integrated log drift entering `d2`.
    drift2: f64,
    /// `e^{-kappa s}`.
    discount: f64,
    /// `reward_coeff N(s, m)`.
    weighted_growth: f64,
    sigma1: f64,
    power: f64,
}

impl KernelSlice {
    pub fn new(model: &Model, s: f64, m: f64) -> Self {
        let p = model.params();
        let c = model.constants();
        let base = (c.rho + 1.0) * ((p.beta - p.r) * s + m * gompertz_time(p.a, s));
        let s1sq = c.sigma1 * c.sigma1;
        KernelSlice {
            s,
            vol: c.sigma1 * s.sqrt(),
            drift1: base + (c.mu1 - 0.5 * s1sq) * s,
            drift2: base + (c.mu1 + (p.gamma - 2.0) * s1sq / (2.0 * p.gamma)) * s,
            discount: (-c.kappa * s).exp(),
            weighted_growth: c.reward_coeff * model.growth_factor(s, m),
            sigma1: c.sigma1,
            power: c.power,
        }
    }

    /// `(d1, d2)` for boundary ratio `y`. Only meaningful for `s > 0`.
    pub fn d_arguments(&self, y: f64) -> (f64, f64) {
        let ln_y = y.ln();
        ((ln_y - self.drift1) / self.vol, (ln_y - self.drift2) / self.vol)
    }

    /// Continuation-side probabilities `(Phi(d1), Phi(d2))`, with the start-of-path
    /// convention at `s = 0`: one half on the boundary, else the one-sided limit.
    pub fn probabilities(&self, y: f64) -> (f64, f64) {
        if self.s == 0.0 {
            let p = if y == 1.0 {
                0.5
            } else if y.ln() / self.sigma1 > 0.0 {
                1.0
            } else {
                0.0
            };
            return (p, p);
        }
        let (d1, d2) = self.d_arguments(y);
        (norm_cdf(d1), norm_cdf(d2))
    }

    /// [`KernelSlice::eval`] for `s > 0` with `ln(b / x)` and `x^power` supplied.
    #[inline]
    pub fn eval_prepared(&self, ln_ratio: f64, x_pow: f64) -> f64 {
        let d1 = (ln_ratio - self.drift1) / self.vol;
        let d2 = (ln_ratio - self.drift2) / self.vol;
        self.discount * (self.weighted_growth * x_pow * norm_cdf(d2) + norm_cdf(d1))
    }

    /// `G` at start point `x` against boundary value `b` reached after `s` years.
    pub fn eval(&self, x: f64, b: f64) -> f64 {
        let (p1, p2) = self.probabilities(b / x);
        self.discount * (self.weighted_growth * x.powf(self.power) * p2 + p1)
    }
}

/// `(d1, d2)` at elapsed time `s > 0`, boundary ratio `y` and start mortality `m`.
pub fn d_arguments(model: &Model, s: f64, y: f64, m: f64) -> (f64, f64) {
    KernelSlice::new(model, s, m).d_arguments(y)
}

/// `G(s, x, b)`: discounted expected running reward at `s`, restricted to the
/// continuation side of the boundary value `b`, starting from `x` with mortality `m`.
pub fn g_kernel(model: &Model, s: f64, x: f64, b: f64, m: f64) -> f64 {
    KernelSlice::new(model, s, m).eval(x, b)
}
