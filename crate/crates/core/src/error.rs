use thiserror::Error;

/// Errors raised by the library. Every variant carries the offending values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("infeasible ambiguity set: need mu > 0 and 0 < d < 2*mu, got mu={mu}, d={d}")]
    InfeasibleSpec { mu: f64, d: f64 },

    #[error("alpha={alpha} outside [{lower}, 1)")]
    AlphaOutOfRange { alpha: f64, lower: f64 },

    #[error("requested MAD d={requested} does not match the MAD {induced} induced by tail index a={a}")]
    MadMismatch { requested: f64, induced: f64, a: f64 },

    #[error("Pareto tail index a={a} outside (1, 2]")]
    IndexOutOfRange { a: f64 },

    #[error("invalid member distribution: {reason}")]
    InvalidMember { reason: String },

    #[error("numerical instability: {reason}")]
    NumericalInstability { reason: String },

    #[error("too many factors for exact convolution: {count} > cap {cap}")]
    TooManyFactors { count: usize, cap: usize },

    #[error("member list has length {got}; expected 1 or {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("negative price {price}")]
    NegativePrice { price: f64 },

    #[error("eps={eps} outside (0, {upper})")]
    EpsOutOfRange { eps: f64, upper: f64 },

    #[error("m={m} exceeds the enumeration cap {cap}")]
    CapExceeded { m: usize, cap: usize },

    #[error("truncation level t={t} below mu + d/2 = {lower}")]
    TruncationTooLow { t: f64, lower: f64 },

    #[error("gamma={gamma} outside (0, 1)")]
    GammaOutOfRange { gamma: f64 },

    #[error("lambda={lambda} must be positive and finite")]
    LambdaOutOfRange { lambda: f64 },

    #[error("{what}: need mu < d < 2*mu, got mu={mu}, d={d}")]
    RangeError { what: &'static str, mu: f64, d: f64 },

    #[error("parameter {name}={value} out of range: {reason}")]
    ParamOutOfRange { name: &'static str, value: f64, reason: &'static str },

    #[error("member {index} is not in P(mu={mu}, d={d}): mean={mean}, mad={mad}")]
    MembershipViolation { index: usize, mu: f64, d: f64, mean: f64, mad: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
