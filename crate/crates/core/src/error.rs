use std::fmt;

/// Errors surfaced by the design library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix argument contains non-finite entries or has an invalid shape.
    InvalidMatrix(String),
    /// A matrix that must be positive definite is singular at the working
    /// tolerance (smallest eigenvalue not above 1e-12 times the largest).
    SingularMatrix,
    /// The eigensolver failed to reduce the off-diagonal mass. Should not
    /// happen for finite symmetric input; kept as a guard.
    EigenFailure,
    /// The input vectors do not span the ambient space, so every weighted
    /// covariance is singular and the relaxation is infeasible.
    RankDeficient,
    /// The removal vector violates `v^T Y^{-1} v < 1` (or `<= 1/2` in real
    /// exponent mode), so the rank-one downdate bound does not apply.
    RemovalThresholdViolated { value: f64, limit: f64 },
    /// A sampling distribution came out with a negative probability or total
    /// mass above one; indicates a misconfigured normalizing constant.
    DistributionInvalid(String),
    /// Brute-force enumeration would exceed the subset-count guard.
    TooLarge { subsets: f64, limit: f64 },
    /// The requested operation needs a finite exponent (integer in [1, 64]
    /// for rounding and swap bounds) but got something else.
    UnsupportedExponent(String),
    /// Instance construction arguments are inconsistent (shape, budget, or
    /// accuracy out of range).
    InvalidInstance(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidMatrix(msg) => write!(f, "invalid matrix: {msg}"),
            Error::SingularMatrix => write!(f, "matrix is singular at the working tolerance"),
            Error::EigenFailure => write!(f, "symmetric eigensolver did not converge"),
            Error::RankDeficient => write!(f, "input vectors do not span the ambient space"),
            Error::RemovalThresholdViolated { value, limit } => write!(
                f,
                "removal leverage {value} violates the threshold {limit}"
            ),
            Error::DistributionInvalid(msg) => write!(f, "invalid sampling distribution: {msg}"),
            Error::TooLarge { subsets, limit } => write!(
                f,
                "enumeration of {subsets:.3e} subsets exceeds the guard {limit:.1e}"
            ),
            Error::UnsupportedExponent(msg) => write!(f, "unsupported exponent: {msg}"),
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
