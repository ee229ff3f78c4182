//! Post-retirement dual value `Q` and the primal value after retirement.
//!
//! After retirement the dual value is separable: `Q(x, m) = x^((gamma-1)/gamma) C(m)` with
//! `C(m) = gamma/(1-gamma) K^((1-gamma)/gamma) I(m)` and
//! `I(m) = int_0^inf exp(lambda s - (m/gamma) (e^{a s} - 1)/a) ds`.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::model::{gompertz_time, Model};
use crate::params::{DerivedConstants, ModelParams};

/// Default relative tolerance of the mortality integral.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Result of one evaluation of `I(m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Quadrature error estimate plus the analytic tail bound.
    pub error: f64,
    /// Upper end of the integrated range.
    pub truncation_horizon: f64,
    pub evaluations: usize,
}

/// Memoized `m -> C(m)` with the constants the integral needs.
#[derive(Debug)]
pub struct QProfile {
    gamma: f64,
    a: f64,
    /// Linear exponent of the integrand.
    lambda: f64,
    /// `gamma/(1-gamma) K^((1-gamma)/gamma)`.
    c_scale: f64,
    power: f64,
    quadrature_tol: f64,
    cache: RwLock<HashMap<u64, f64>>,
}

impl Clone for QProfile {
    fn clone(&self) -> Self {
        let cache = self.cache.read().map(|c| c.clone()).unwrap_or_default();
        QProfile {
            cache: RwLock::new(cache),
            ..*self
        }
    }
}

impl QProfile {
    pub fn new(p: &ModelParams, c: &DerivedConstants) -> Self {
        Self::with_tolerance(p, c, DEFAULT_QUAD_TOL)
    }

    pub fn with_tolerance(p: &ModelParams, c: &DerivedConstants, quadrature_tol: f64) -> Self {
        let g = p.gamma;
        let lambda = -p.beta / g - c.power * (p.r + 0.5 * c.theta * c.theta)
            + (g - 1.0).powi(2) * c.theta * c.theta / (2.0 * g * g);
        QProfile {
            gamma: g,
            a: p.a,
            lambda,
            c_scale: g / (1.0 - g) * c.k_ratio,
            power: c.power,
            quadrature_tol,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn quadrature_tol(&self) -> f64 {
        self.quadrature_tol
    }

    /// Linear exponent `lambda` of the integrand of `I(m)`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Log of the integrand of `I(m)` at `s`.
    pub fn log_integrand(&self, m: f64, s: f64) -> f64 {
        self.lambda * s - m / self.gamma * gompertz_time(self.a, s)
    }

    /// Evaluates `I(m)` panel by panel until the analytic tail bound is negligible.
    pub fn integral(&self, m: f64) -> Result<IntegralEstimate> {
        if m <= 0.0 || m.is_nan() {
            return Err(Error::NonPositiveArgument { name: "m", value: m });
        }
        let tol = self.quadrature_tol;
        let width = if self.a > 0.0 { (2.0 / self.a).min(10.0) } else { 10.0 };
        let integrand = |s: f64| self.log_integrand(m, s).exp();
        // the first panel sets the scale of the absolute targets
        let scale = integrand(0.0) * width.min(1.0 / (-self.lambda + m / self.gamma).max(1e-3));
        let mut sum = 0.0;
        let mut error = 0.0;
        let mut evaluations = 0usize;
        let mut lo = 0.0;
        for _ in 0..10_000 {
            let hi = lo + width;
            let out = quadrature::integrate(integrand, lo, hi, 1e-3 * tol * scale);
            sum += out.integral;
            error += out.error_estimate;
            evaluations += out.num_function_evaluations as usize;
            lo = hi;
            // the exponent is concave, so its tangent at `lo` bounds the rest
            let slope = -self.lambda + m / self.gamma * (self.a * lo).exp();
            if slope > 0.0 {
                let tail = integrand(lo) / slope;
                if tail <= 0.1 * tol * sum {
                    let total_error = error + tail;
                    if total_error > tol * sum {
                        return Err(Error::QuadratureNotConverged {
                            tol,
                            estimate: sum,
                            error: total_error,
                            evaluations,
                        });
                    }
                    return Ok(IntegralEstimate {
                        value: sum,
                        error: total_error,
                        truncation_horizon: lo,
                        evaluations,
                    });
                }
            }
        }
        Err(Error::QuadratureNotConverged {
            tol,
            estimate: sum,
            error: f64::INFINITY,
            evaluations,
        })
    }

    /// `C(m)`, memoized on the exact bits of `m`.
    pub fn c_integral(&self, m: f64) -> Result<f64> {
        let key = m.to_bits();
        if let Some(c) = self.cache.read().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(c);
        }
        let c = self.c_scale * self.integral(m)?.value;
        if let Ok(mut cache) = self.cache.write() {
            cache.insert(key, c);
        }
        Ok(c)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    fn check_x(x: f64) -> Result<()> {
        if x <= 0.0 || x.is_nan() {
            return Err(Error::NonPositiveArgument { name: "x", value: x });
        }
        Ok(())
    }

    /// `Q(x, m)`.
    pub fn q_reduced(&self, x: f64, m: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(x.powf(self.power) * self.c_integral(m)?)
    }

    /// `dQ/dx`.
    pub fn q_reduced_x(&self, x: f64, m: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.power * x.powf(-1.0 / self.gamma) * self.c_integral(m)?)
    }

    /// `d2Q/dx2`.
    pub fn q_reduced_xx(&self, x: f64, m: f64) -> Result<f64> {
        Self::check_x(x)?;
        let g = self.gamma;
        Ok(-(g - 1.0) / (g * g) * x.powf(-1.0 / g - 1.0) * self.c_integral(m)?)
    }
}

/// Post-retirement value and the dual minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostRetirementValue {
    pub value: f64,
    pub z: f64,
}

/// `V_hat(w, m) = inf_z [Q(z, m) + z w]`, minimizer in closed form.
pub fn post_retirement_value(model: &Model, w: f64, m: f64) -> Result<PostRetirementValue> {
    if w <= 0.0 || w.is_nan() {
        return Err(Error::NonPositiveWealth { wealth: w });
    }
    let q = model.q_profile();
    let c = q.c_integral(m)?;
    let e = model.constants().power;
    // Q_z(z) = e C z^{-1/gamma}; e C < 0 in both regimes
    let z = (-w / (e * c)).powf(-model.params().gamma);
    let value = z.powf(e) * c + z * w;
    Ok(PostRetirementValue { value, z })
}

/// Optimal consumption after retirement for dual multiplier `z`.
pub fn post_retirement_consumption(model: &Model, z: f64) -> f64 {
    model.constants().k_ratio * z.powf(-1.0 / model.params().gamma)
}
