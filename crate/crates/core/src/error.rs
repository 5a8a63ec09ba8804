use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mass is not positive: M({t}) = {value}")]
    NonPositiveMass { t: f64, value: f64 },
    #[error("{series} series period {period} does not divide tau = {tau}")]
    IncommensuratePeriod { series: &'static str, period: f64, tau: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("too many integration steps (stopped at t = {t})")]
    TooManySteps { t: f64 },
    #[error("fundamental matrix determinant drifted to {det} (tolerance 1e-9); tighten the ODE tolerance")]
    SymplecticityLost { det: f64 },
    #[error("homogeneous solutions are unstable; no stable basis exists")]
    UnstableSystem,
    #[error("periodic particular solution diverges: I - Phi(T) is singular for every admissible period")]
    ResonantForce,
    #[error("no periodic particular solution with period (p/N) tau for p, N <= {max_pn}")]
    NoPeriodicSolutionFound { max_pn: u32 },
    #[error("driven analysis requires a force series")]
    MissingForce,
    #[error("quasiperiod is undefined for an unstable system")]
    UndefinedForUnstable,
    #[error("spatial grid too narrow: Gram diagonal deviates from 1 by {deviation:e}")]
    GridTooNarrow { deviation: f64 },
}
