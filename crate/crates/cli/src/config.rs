use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use retirement_core::boundary::DEFAULT_ROOT_TOL;
use retirement_core::{ModelParams, Scheme};
use serde::{Deserialize, Serialize};

/// Axes a sweep may vary besides the model parameters.
pub const STATE_AXES: [&str; 4] = ["m", "y", "w", "t"];

/// One run, read from TOML. Sections may be written as tables or as dotted keys
/// (`solver.n_steps = 400`); unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "ModelParams::baseline")]
    pub params: ModelParams,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub primal: PrimalConfig,
    pub sweep: Option<SweepConfig>,
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n_steps: usize,
    pub root_tol: f64,
    /// `piecewise-linear` or `trapezoid`.
    pub scheme: String,
    /// Mortality at `t = 0`; defaults to `params.m0`.
    pub m_initial: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_steps: 200,
            root_tol: DEFAULT_ROOT_TOL,
            scheme: Scheme::default().as_str().to_string(),
            m_initial: None,
        }
    }
}

/// States at which policies are evaluated. Wealth is given either in currency
/// (`w`) or as multiples of the wealth boundary at each date (`w_over_b_hat`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrimalConfig {
    pub t: Vec<f64>,
    pub y: f64,
    pub w: Vec<f64>,
    pub w_over_b_hat: Vec<f64>,
}

impl Default for PrimalConfig {
    fn default() -> Self {
        PrimalConfig {
            t: vec![0.0],
            y: 1.0,
            w: Vec::new(),
            w_over_b_hat: (1..=15).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub n_time: usize,
    pub n_space: usize,
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
    pub stencil: usize,
    /// Largest accepted relative gap between lattice and solved boundary.
    pub max_rel_gap: f64,
    /// Monte Carlo paths; 0 skips the simulation.
    pub mc_paths: usize,
    /// Start of the simulation in reversed time; defaults to the horizon.
    pub mc_xi: Option<f64>,
    /// Start state in reduced units; defaults to `0.85 L`.
    pub mc_x: Option<f64>,
    pub antithetic: bool,
    pub substeps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n_time: 500,
            n_space: 800,
            x_lo: None,
            x_hi: None,
            stencil: retirement_core::oracle::DEFAULT_STENCIL,
            max_rel_gap: 0.02,
            mc_paths: 0,
            mc_xi: None,
            mc_x: None,
            antithetic: true,
            substeps: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("config: parse error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("config: cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config: {}", path.display()))
    }

    pub fn scheme(&self) -> Scheme {
        Scheme::parse(&self.solver.scheme).expect("validated")
    }

    pub fn m_initial(&self) -> f64 {
        self.solver.m_initial.unwrap_or(self.params.m0)
    }

    pub fn validate(&self) -> Result<()> {
        if Scheme::parse(&self.solver.scheme).is_none() {
            bail!("config: solver.scheme must be `piecewise-linear` or `trapezoid`, got `{}`", self.solver.scheme);
        }
        if self.solver.n_steps < 1 {
            bail!("config: solver.n_steps must be positive");
        }
        if !(self.solver.root_tol > 0.0) {
            bail!("config: solver.root_tol must be positive");
        }
        if !(self.m_initial() > 0.0) {
            bail!("config: solver.m_initial must be positive");
        }
        if self.primal.t.is_empty() {
            bail!("config: primal.t needs at least one date");
        }
        if !self.primal.w.is_empty() && self.primal.w_over_b_hat != PrimalConfig::default().w_over_b_hat {
            bail!("config: give either primal.w or primal.w_over_b_hat, not both");
        }
        if let Some(s) = &self.sweep {
            let known = ModelParams::FIELD_NAMES.contains(&s.axis.as_str()) || STATE_AXES.contains(&s.axis.as_str());
            if !known {
                bail!(
                    "config: sweep.axis `{}` is neither a model parameter ({}) nor one of {}",
                    s.axis,
                    ModelParams::FIELD_NAMES.join(", "),
                    STATE_AXES.join(", ")
                );
            }
            if s.values.is_empty() {
                bail!("config: sweep.values is empty");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.params, ModelParams::baseline());
        assert_eq!(cfg.solver.n_steps, 200);
        assert_eq!(cfg.m_initial(), 0.004);
        assert_eq!(cfg.scheme(), Scheme::PiecewiseLinear);
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn dotted_keys_and_tables_agree() {
        let dotted = RunConfig::parse("solver.n_steps = 50\nsweep.axis = \"K\"\nsweep.values = [1.5, 2.0]\n").unwrap();
        let tables = RunConfig::parse("[solver]\nn_steps = 50\n[sweep]\naxis = \"K\"\nvalues = [1.5, 2.0]\n").unwrap();
        assert_eq!(dotted, tables);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("solver.n_step = 50").is_err());
        assert!(RunConfig::parse("colour = 1").is_err());
    }

    #[test]
    fn params_need_every_field() {
        assert!(RunConfig::parse("[params]\nmu = 0.08\n").is_err());
        let full = format!("[params]\n{}", ModelParams::baseline().to_toml_string());
        assert_eq!(RunConfig::parse(&full).unwrap().params, ModelParams::baseline());
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(RunConfig::parse("solver.scheme = \"simpson\"").is_err());
        assert!(RunConfig::parse("sweep.axis = \"colour\"\nsweep.values = [1.0]").is_err());
        assert!(RunConfig::parse("sweep.axis = \"K\"\nsweep.values = []").is_err());
        assert!(RunConfig::parse("primal.w = [1.0]\nprimal.w_over_b_hat = [0.5]").is_err());
    }
}
