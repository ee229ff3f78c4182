use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("gamma = 1 (log utility) is not supported")]
    GammaIsOne,

    #[error("effective income discount kappa = r - mu_y + sigma_y*theta = {kappa} must be positive")]
    KappaNonPositive { kappa: f64 },

    #[error(
        "discount-rate assumption violated: beta = {beta} < (1-gamma)(r+theta^2/2) + (gamma-1)^2 theta^2/(2 gamma) = {bound}"
    )]
    Assumption2Violated { beta: f64, bound: f64 },

    #[error("income-volatility assumption violated: sigma_y*gamma = {lhs} >= theta = {rhs}")]
    Assumption41Violated { lhs: f64, rhs: f64 },

    #[error("argument `{name}` = {value} must be positive")]
    NonPositiveArgument { name: &'static str, value: f64 },

    #[error("wealth {wealth} must be positive after retirement")]
    NonPositiveWealth { wealth: f64 },

    #[error("wealth {wealth} is not admissible: it must exceed minus human capital {floor}")]
    InadmissibleWealth { wealth: f64, floor: f64 },

    #[error("quadrature did not reach tolerance {tol:e}: estimate {estimate}, error {error:e} after {evaluations} evaluations")]
    QuadratureNotConverged {
        tol: f64,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("no sign change at step {step}: bracket [{lo}, {hi}] with residuals {f_lo:e}, {f_hi:e}")]
    BracketNotFound {
        step: usize,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("root tolerance {tol:e} not met at step {step}: bracket width {width:e}")]
    RootToleranceNotMet { step: usize, tol: f64, width: f64 },

    #[error("value {value:e} at xi = {xi}, x = {x} is below -{tol:e}; boundary is inconsistent")]
    NegativeValueBeyondTolerance { xi: f64, x: f64, value: f64, tol: f64 },

    #[error("time {t} lies outside the solved horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("mortality {m} at t = {t} is off the solved path (expected {expected})")]
    MortalityOffPath { t: f64, m: f64, expected: f64 },

    #[error("boundary was solved for parameter fingerprint {solved}, model has {model}")]
    FingerprintMismatch { solved: String, model: String },

    #[error("lattice boundary left the grid at slice {slice} (t = {t}); widen x_range or refine")]
    GridTooCoarse { slice: usize, t: f64 },

    #[error("invalid lattice specification: {0}")]
    InvalidLattice(String),

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
