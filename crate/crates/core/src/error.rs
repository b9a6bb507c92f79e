use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular tridiagonal system (zero pivot at row {row})")]
    SingularSystem { row: usize },

    #[error("CFL violation: dt = {dt:e} exceeds admissible {admissible:e}")]
    Cfl { dt: f64, admissible: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle a sign change ({detail})")]
    Bracket { lo: f64, hi: f64, detail: String },

    #[error("no threshold: principal eigenvalue stays positive up to length {searched_to}")]
    NoThreshold { searched_to: f64 },

    #[error("refused: principal eigenvalue {lambda1} is not negative")]
    EigenvalueRefusal { lambda1: f64 },

    #[error("no positive periodic solution: mean growth {mean} is not positive")]
    NoPositivePeriodicSolution { mean: f64 },

    #[error("truncation diagnostic failed: relative change {change:e} >= {tolerance:e}; enlarge the domain")]
    Truncation { change: f64, tolerance: f64 },

    #[error("integrity breach at step {step}: {detail}")]
    Integrity { step: usize, detail: String },

    #[error("monotone iteration stalled at iterate {iteration}: violation {violation:e}")]
    Stall { iteration: usize, violation: f64 },

    #[error("mismatched periods: {0} vs {1}")]
    PeriodMismatch(f64, f64),

    #[error("semi-wave existence fails: mean drift {mean_drift} >= 2 sqrt(d * mean growth) = {bound}")]
    SemiWaveBand { mean_drift: f64, bound: f64 },

    #[error("front s = {s} reached 0.9 L = {limit}; enlarge the half-line truncation")]
    DomainExit { s: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Precondition(_) => "precondition",
            Error::SingularSystem { .. } => "singular_system",
            Error::Cfl { .. } => "cfl",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Bracket { .. } => "bracket",
            Error::NoThreshold { .. } => "no_threshold",
            Error::EigenvalueRefusal { .. } => "eigenvalue_refusal",
            Error::NoPositivePeriodicSolution { .. } => "no_positive_periodic_solution",
            Error::Truncation { .. } => "truncation",
            Error::Integrity { .. } => "integrity",
            Error::Stall { .. } => "stall",
            Error::PeriodMismatch(..) => "period_mismatch",
            Error::SemiWaveBand { .. } => "semiwave_band",
            Error::DomainExit { .. } => "domain_exit",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
