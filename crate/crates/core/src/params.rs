//! Model parameters, the constants derived from them, and the standing
//! assumptions the solver relies on.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Market, preference, mortality and horizon inputs. Rates are per year.
///
/// The key names used in config files match the field names below, with
/// the horizon spelled `T_horizon` and the retirement weight spelled `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Stock drift.
    pub mu: f64,
    /// Stock volatility.
    pub sigma: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Subjective discount rate.
    pub beta: f64,
    /// Relative risk aversion.
    pub gamma: f64,
    /// Labor income growth.
    pub mu_y: f64,
    /// Labor income volatility.
    pub sigma_y: f64,
    /// Gompertz growth rate of the force of mortality.
    pub a: f64,
    /// Years until mandatory retirement.
    #[serde(rename = "T_horizon")]
    pub t_horizon: f64,
    /// Utility weight on post-retirement consumption.
    #[serde(rename = "K")]
    pub k: f64,
    /// Force of mortality at the evaluation date.
    pub m0: f64,
}

impl ModelParams {
    /// The baseline calibration: a 55 year old with mandatory retirement at 65.
    pub fn baseline() -> Self {
        ModelParams {
            mu: 0.08,
            sigma: 0.2,
            r: 0.04,
            beta: 0.01,
            gamma: 3.0,
            mu_y: 0.01,
            sigma_y: 0.05,
            a: 1.0 / 10.5,
            t_horizon: 10.0,
            k: 2.0,
            m0: 0.004,
        }
    }

    pub const FIELD_NAMES: [&'static str; 11] = [
        "mu",
        "sigma",
        "r",
        "beta",
        "gamma",
        "mu_y",
        "sigma_y",
        "a",
        "T_horizon",
        "K",
        "m0",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "mu" => self.mu,
            "sigma" => self.sigma,
            "r" => self.r,
            "beta" => self.beta,
            "gamma" => self.gamma,
            "mu_y" => self.mu_y,
            "sigma_y" => self.sigma_y,
            "a" => self.a,
            "T_horizon" => self.t_horizon,
            "K" => self.k,
            "m0" => self.m0,
            _ => return None,
        })
    }

    /// Returns a copy with the named field replaced.
    pub fn with(&self, name: &str, value: f64) -> Option<Self> {
        let mut p = *self;
        match name {
            "mu" => p.mu = value,
            "sigma" => p.sigma = value,
            "r" => p.r = value,
            "beta" => p.beta = value,
            "gamma" => p.gamma = value,
            "mu_y" => p.mu_y = value,
            "sigma_y" => p.sigma_y = value,
            "a" => p.a = value,
            "T_horizon" => p.t_horizon = value,
            "K" => p.k = value,
            "m0" => p.m0 = value,
            _ => return None,
        }
        Some(p)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat struct of floats always serializes")
    }

    /// Short stable hash of the exact parameter bits.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for name in Self::FIELD_NAMES {
            let v = self.get(name).unwrap_or_default();
            hasher.update(name.as_bytes());
            hasher.update(b"=");
            hasher.update(v.to_bits().to_le_bytes());
            hasher.update(b";");
        }
        hex::encode(&hasher.finalize()[..8])
    }

    /// Field-level checks: positivity, finiteness, `K > 1`, `gamma != 1`.
    pub fn check_domain(&self) -> Result<()> {
        for name in Self::FIELD_NAMES {
            let v = self.get(name).unwrap_or(f64::NAN);
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        let positive = [
            ("sigma", self.sigma),
            ("sigma_y", self.sigma_y),
            ("T_horizon", self.t_horizon),
            ("m0", self.m0),
            ("gamma", self.gamma),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        // a = 0 is the constant-mortality limit; the kernels take it as such.
        if self.a < 0.0 {
            return Err(Error::InvalidParameter {
                name: "a",
                value: self.a,
                reason: "must be non-negative",
            });
        }
        if self.k <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "K",
                value: self.k,
                reason: "must exceed 1",
            });
        }
        if (self.gamma - 1.0).abs() < 1e-12 {
            return Err(Error::GammaIsOne);
        }
        Ok(())
    }
}

/// Initial force of mortality from age, Gompertz modal age and dispersion.
pub fn gompertz_initial_rate(age: f64, modal_age: f64, dispersion: f64) -> f64 {
    (-(modal_age - age) / dispersion).exp() / dispersion
}

/// Which side of the boundary the stopping region lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaRegime {
    /// `gamma < 1`: stop for `x <= b`.
    Low,
    /// `gamma > 1`: stop for `x >= b`.
    High,
}

impl GammaRegime {
    pub fn of(gamma: f64) -> Self {
        if gamma < 1.0 {
            GammaRegime::Low
        } else {
            GammaRegime::High
        }
    }

    /// True when `x` lies in the stopping (retirement) region of boundary `b`.
    pub fn is_stopping(self, x: f64, b: f64) -> bool {
        match self {
            GammaRegime::High => x >= b,
            GammaRegime::Low => x <= b,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GammaRegime::Low => "LOW",
            GammaRegime::High => "HIGH",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "LOW" => Some(GammaRegime::Low),
            "HIGH" => Some(GammaRegime::High),
            _ => None,
        }
    }
}

impl fmt::Display for GammaRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every constant the kernels consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Market price of risk `(mu - r) / sigma`.
    pub theta: f64,
    /// Effective discount rate of labor income.
    pub kappa: f64,
    /// `gamma / (1 - gamma)`.
    pub rho: f64,
    /// Drift constant of the reduced dual process.
    pub mu1: f64,
    /// Volatility of the reduced dual process (signed).
    pub sigma1: f64,
    /// Boundary level at the mandatory retirement date.
    pub l_terminal: f64,
    pub gamma_regime: GammaRegime,
    /// `(gamma - 1) / gamma`, the power of the dual utilities.
    pub power: f64,
    /// `K^((1 - gamma) / gamma)`, the ratio of post- to pre-retirement dual utility.
    pub k_ratio: f64,
    /// `(1 - k_ratio) * gamma / (1 - gamma)`: running reward is `reward_coeff * x^power + 1`.
    pub reward_coeff: f64,
    /// Linear exponent of the growth factor `N(s, m)` (mortality part excluded).
    pub growth_rate: f64,
}

impl DerivedConstants {
    /// Evaluates the formulas without checking the standing assumptions.
    pub fn compute(p: &ModelParams) -> Self {
        let gamma = p.gamma;
        let theta = (p.mu - p.r) / p.sigma;
        let kappa = p.r - p.mu_y + p.sigma_y * theta;
        let rho = gamma / (1.0 - gamma);
        let sigma1 = rho * p.sigma_y - (rho + 1.0) * theta;
        let mu1 = 0.5 * (rho + 1.0) * rho * theta * theta + rho * p.mu_y
            + 0.5 * (rho - 1.0) * rho * p.sigma_y * p.sigma_y
            - (rho + 1.0) * rho * theta * p.sigma_y
            + sigma1 * (p.sigma_y - theta);
        let power = (gamma - 1.0) / gamma;
        let k_ratio = p.k.powf((1.0 - gamma) / gamma);
        let reward_coeff = (1.0 - k_ratio) * gamma / (1.0 - gamma);
        let l_terminal = ((k_ratio - 1.0) * gamma / (1.0 - gamma)).powf(gamma / (1.0 - gamma));
        let growth_rate = -(p.beta - p.r) / gamma
            + power * (mu1 - 0.5 * sigma1 * sigma1)
            + 0.5 * power * power * sigma1 * sigma1;
        DerivedConstants {
            theta,
            kappa,
            rho,
            mu1,
            sigma1,
            l_terminal,
            gamma_regime: GammaRegime::of(gamma),
            power,
            k_ratio,
            reward_coeff,
            growth_rate,
        }
    }
}

/// One evaluated standing assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl AssumptionCheck {
    fn into_error(&self) -> Error {
        match self.name {
            "kappa_positive" => Error::KappaNonPositive { kappa: self.lhs },
            "discount_rate" => Error::Assumption2Violated {
                beta: self.lhs,
                bound: self.rhs,
            },
            _ => Error::Assumption41Violated {
                lhs: self.lhs,
                rhs: self.rhs,
            },
        }
    }
}

/// Evaluates the three standing assumptions, in a fixed order.
pub fn assumption_checks(p: &ModelParams, c: &DerivedConstants) -> Vec<AssumptionCheck> {
    let g = p.gamma;
    let bound = (1.0 - g) * (p.r + 0.5 * c.theta * c.theta)
        + (g - 1.0).powi(2) * c.theta * c.theta / (2.0 * g);
    vec![
        AssumptionCheck {
            name: "kappa_positive",
            statement: "kappa = r - mu_y + sigma_y*theta > 0",
            lhs: c.kappa,
            rhs: 0.0,
            passed: c.kappa > 0.0,
        },
        AssumptionCheck {
            name: "discount_rate",
            statement: "beta >= (1-gamma)(r+theta^2/2) + (gamma-1)^2 theta^2/(2 gamma)",
            lhs: p.beta,
            rhs: bound,
            passed: p.beta >= bound,
        },
        AssumptionCheck {
            name: "income_volatility",
            statement: "sigma_y*gamma < theta",
            lhs: p.sigma_y * g,
            rhs: c.theta,
            passed: p.sigma_y * g < c.theta,
        },
    ]
}

/// Validates the parameters and evaluates every derived constant.
pub fn derive_constants(p: &ModelParams) -> Result<DerivedConstants> {
    p.check_domain()?;
    let c = DerivedConstants::compute(p);
    if let Some(failed) = assumption_checks(p, &c).iter().find(|chk| !chk.passed) {
        return Err(failed.into_error());
    }
    Ok(c)
}
