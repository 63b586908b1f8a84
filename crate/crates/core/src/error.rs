use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("neither convergence nor divergence could be certified: {0}")]
    InconclusiveConvergence(String),
    #[error("law has infinite mean")]
    InfiniteMean,
    #[error("law has zero mean")]
    ZeroMean,
    #[error("tilt normalizer diverges")]
    DivergentNormalizer,
    #[error("time {t} is beyond the covered horizon {covered}")]
    HorizonExceeded { t: f64, covered: f64 },
    #[error("time {t} precedes the first renewal epoch {first}")]
    BeforeFirstRenewal { t: f64, first: f64 },
    #[error("test function violates the boundary condition (residual {residual:e} at p = {p})")]
    BoundaryConditionViolated { p: f64, residual: f64 },
    #[error("target law is not atomic")]
    NonAtomicTarget,
    #[error("measure is not of the form π(dp) dq")]
    NotInOmega0,
    #[error("rate is infinite")]
    InfiniteRate,
    #[error("test function is not in Λ: {0}")]
    NotInLambda(String),
    #[error("speed window [{lo:e}, {hi:e}) carries no mass")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
