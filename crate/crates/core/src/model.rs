//! Validated model and its closed-form building blocks.

use crate::error::{Error, Result};
use crate::params::{assumption_checks, AssumptionCheck, DerivedConstants, ModelParams};
use crate::post_retirement::QProfile;

/// Which dual utility to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Working life, `U1*`.
    Pre,
    /// Retirement, `U2* = K^((1-gamma)/gamma) U1*`.
    Post,
}

/// Parameters together with their derived constants and the post-retirement profile.
///
/// Cheap to share by reference across threads; the only interior mutability is the
/// memo cache inside [`QProfile`].
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    constants: DerivedConstants,
    checks: Vec<AssumptionCheck>,
    watermarked: bool,
    q: QProfile,
}

impl Model {
    /// Builds a model, rejecting any violated standing assumption.
    pub fn new(params: ModelParams) -> Result<Self> {
        let constants = crate::params::derive_constants(&params)?;
        Ok(Self::assemble(params, constants, false))
    }

    /// Builds a model even when standing assumptions fail. Such a model is
    /// watermarked and every output it produces says so.
    pub fn with_override(params: ModelParams) -> Result<Self> {
        params.check_domain()?;
        let constants = DerivedConstants::compute(&params);
        let failed = assumption_checks(&params, &constants)
            .iter()
            .any(|c| !c.passed);
        Ok(Self::assemble(params, constants, failed))
    }

    fn assemble(params: ModelParams, constants: DerivedConstants, watermarked: bool) -> Self {
        let checks = assumption_checks(&params, &constants);
        let q = QProfile::new(&params, &constants);
        Model {
            params,
            constants,
            checks,
            watermarked,
            q,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn constants(&self) -> &DerivedConstants {
        &self.constants
    }

    pub fn assumption_report(&self) -> &[AssumptionCheck] {
        &self.checks
    }

    /// True when built through [`Model::with_override`] with a failing assumption.
    pub fn is_watermarked(&self) -> bool {
        self.watermarked
    }

    pub fn fingerprint(&self) -> String {
        self.params.fingerprint()
    }

    pub fn q_profile(&self) -> &QProfile {
        &self.q
    }

    pub fn horizon(&self) -> f64 {
        self.params.t_horizon
    }

    /// Force of mortality `s` years after a date where it equals `m`.
    pub fn mortality_at(&self, m: f64, s: f64) -> f64 {
        mortality_at(m, self.params.a, s)
    }

    /// `int_0^s m e^{a u} du`.
    pub fn integrated_mortality(&self, m: f64, s: f64) -> f64 {
        m * gompertz_time(self.params.a, s)
    }

    /// Annuity factor of the remaining working life at date `t`.
    pub fn q_factor(&self, t: f64) -> f64 {
        q_factor(t, self.params.t_horizon, self.constants.kappa)
    }

    /// Present value of future labor income, `q(t) y`.
    pub fn human_capital(&self, t: f64, y: f64) -> f64 {
        self.q_factor(t) * y
    }

    pub fn dual_utility(&self, x: f64, phase: Phase) -> Result<f64> {
        if x <= 0.0 || x.is_nan() {
            return Err(Error::NonPositiveArgument { name: "x", value: x });
        }
        let g = self.params.gamma;
        let u1 = g / (1.0 - g) * x.powf(self.constants.power);
        Ok(match phase {
            Phase::Pre => u1,
            Phase::Post => self.constants.k_ratio * u1,
        })
    }

    /// `(1 - K^((1-gamma)/gamma)) U1*(x) + 1`: vanishes at the terminal boundary level.
    pub fn running_reward(&self, x: f64) -> f64 {
        self.constants.reward_coeff * x.powf(self.constants.power) + 1.0
    }

    /// Growth factor `N(s, m)` from the change of measure.
    pub fn growth_factor(&self, s: f64, m: f64) -> f64 {
        let g = self.params.gamma;
        (self.constants.growth_rate * s - m / g * gompertz_time(self.params.a, s)).exp()
    }
}

/// `m e^{a s}`.
pub fn mortality_at(m: f64, a: f64, s: f64) -> f64 {
    m * (a * s).exp()
}

/// `(e^{a s} - 1) / a`, continuous at `a = 0` where it equals `s`.
pub fn gompertz_time(a: f64, s: f64) -> f64 {
    if a == 0.0 {
        s
    } else {
        (a * s).exp_m1() / a
    }
}

/// `(1 - e^{-kappa (T - t)}) / kappa`, or `T - t` when `kappa = 0`.
pub fn q_factor(t: f64, horizon: f64, kappa: f64) -> f64 {
    let tau = (horizon - t).max(0.0);
    if kappa == 0.0 {
        tau
    } else {
        -(-kappa * tau).exp_m1() / kappa
    }
}
