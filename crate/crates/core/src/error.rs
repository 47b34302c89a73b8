use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ball radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("space dimension must be at least 1, got {0}")]
    BadDimension(usize),
    #[error("initial data is negative at r = {r} (u0 = {value})")]
    NegativeInitialData { r: f64, value: f64 },
    #[error("initial data does not vanish at r = R (u0(R) = {0})")]
    BoundaryNonzero(f64),
    #[error("initial data increases between r = {r} and the next node (difference {diff})")]
    NotNonincreasing { r: f64, diff: f64 },
    #[error("non-finite value {value} at node {node}")]
    NonFiniteValue { node: usize, value: f64 },
    #[error("grid needs at least 3 intervals, got {0}")]
    GridTooCoarse(usize),
    #[error("profile has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("time step {dt:e} underflowed at t = {t} before reaching the cutoff")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("blow-up cutoff {cutoff} does not exceed max u0 = {max_u0}")]
    CutoffBelowData { cutoff: f64, max_u0: f64 },

    #[error("transformed value {0} is at or past the singular point v = 1")]
    AtBlowup(f64),
    #[error("tridiagonal system is singular at row {0}")]
    SingularSystem(usize),
    #[error("the exact transform only applies to f(u) = e^u with h(s) = s^2")]
    NotModelCase,
    #[error("oracle reached the horizon t = {t} with max v = {max_v} still undecided")]
    Inconclusive { t: f64, max_v: f64 },

    #[error("alpha = {alpha} is outside {range}")]
    BadAlpha { alpha: f64, range: &'static str },
    #[error("argument must be positive, got {0}")]
    NonpositiveArgument(f64),
    #[error("alpha = {alpha} exceeds the certified limit {limit}")]
    AlphaOutOfValidity { alpha: f64, limit: f64 },
    #[error("radius {r} is outside (0, {max}]")]
    RadiusOutOfRange { r: f64, max: f64 },
    #[error("time {t} is at or past the blow-up time {blowup_time}")]
    TimeAtOrPastT { t: f64, blowup_time: f64 },

    #[error("trace did not blow up")]
    NoBlowup,
    #[error("line fit is too poor (correlation {0})")]
    PoorFit(f64),
    #[error("fit window [{lo}, {hi}] contains fewer than two points")]
    WindowEmpty { lo: f64, hi: f64 },
}
