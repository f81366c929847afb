use thiserror::Error;

/// Errors raised across the crate.
///
/// Verification failures are not errors: they are entries in a report. These
/// variants cover ill-posed inputs and undecidable comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by a value certified to be zero")]
    DivisionByZero,
    #[error("operands live in incompatible quadratic fields {0:?} and {1:?}")]
    RadicandMismatch([u64; 2], [u64; 2]),
    #[error("sign not certified at the precision cap of {0} bits")]
    Inconclusive(u32),
    #[error("square root of a negative value")]
    NegativeRadicand,
    #[error("logarithm of a non-positive value")]
    NonPositiveLogArgument,
    #[error("density must be positive")]
    NonPositiveDensity,
    #[error("gamma = 1 needs a positive reference density")]
    InvalidReference,
    #[error("exponent must be a rational number in [1, 3], got {0}")]
    UnsupportedExponent(String),
    #[error("point is not in V (matrix not negative definite or q >= Q)")]
    NotInV,
    #[error("split hypotheses violated: {0}")]
    HypothesesViolated(String),
    #[error("eta is not a wave direction for this point")]
    NotAWaveDirection,
    #[error("difference of endpoints is not in the wave cone")]
    NotLambdaDirection,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("H_N check supports at most 8 elements, got {0}")]
    NForTooLarge(usize),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("wave curves do not meet at positive density")]
    VacuumFormation,
    #[error("closure divides by rho_3 - rho_+ = 0")]
    DegenerateClosure,
    #[error("no Q in the doubling sequence certified before the precision cap")]
    NotCertifiableWithinCap,
    #[error("field supplies derivatives only up to order {0}")]
    DerivativeOrderUnavailable(usize),
    #[error("profile has a negative coefficient on plane {0}")]
    InadmissibleProfile(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
