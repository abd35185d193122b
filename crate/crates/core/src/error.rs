use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants split into two families: invalid inputs ([`Error::is_validation`])
/// and numerical failures (non-convergence, NaN, ill-conditioning). The CLI
/// maps them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("potential `{name}` failed derivative consistency at x = {x}: {detail}")]
    InconsistentPotential {
        name: String,
        x: f64,
        detail: String,
    },

    #[error("kernel narrower than grid: eps = {eps} < h/2 = {half_h}")]
    KernelUnderResolved { eps: f64, half_h: f64 },

    #[error("time step violates CFL bound: dt = {dt} > h^2/4 = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("transition kernel under-resolved: h = {h} > sqrt(4 tau)/4 = {limit}; use n >= {required_n}")]
    SmallTau {
        h: f64,
        limit: f64,
        required_n: usize,
    },

    #[error("CDF of target is flat over [{from}, {to}] (width {width} > 10h); inverse is ill-conditioned")]
    FlatCdf { from: f64, to: f64, width: f64 },

    #[error("infeasible support: target mass at x = {x} is unreachable under the reference kernel")]
    InfeasibleSupport { x: f64 },

    #[error("non-finite value at step {step}: {what}")]
    NonFinite { step: usize, what: String },

    #[error("line search failed after {iterations} iterations (objective {objective}, gradient norm {grad_norm})")]
    LineSearch {
        iterations: usize,
        objective: f64,
        grad_norm: f64,
    },

    #[error("iterate left the monotone cone after projection at index {index}")]
    NotMonotone { index: usize },

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("infinite Fisher information at an endpoint ({which}); endpoints must be bounded below by a positive constant on compacts")]
    InfiniteFisher { which: &'static str },

    #[error("particle {index} escaped the safety window [{lo}, {hi}] under potential `{potential}`")]
    ParticleEscape {
        index: usize,
        lo: f64,
        hi: f64,
        potential: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::GridMismatch(_)
                | Error::InvalidDensity(_)
                | Error::InvalidParameter { .. }
                | Error::Precondition(_)
                | Error::InconsistentPotential { .. }
                | Error::KernelUnderResolved { .. }
                | Error::Cfl { .. }
                | Error::SmallTau { .. }
                | Error::InfiniteFisher { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Parse(_)
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
