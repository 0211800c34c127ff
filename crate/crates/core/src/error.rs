use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not a valid density matrix: {0}")]
    InvalidDensity(String),
    #[error("Bloch vector norm {0} exceeds 1")]
    OutsideBlochBall(f64),
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("covariance is not positive definite (det = {0:e})")]
    SingularCovariance(f64),
    #[error("mixture weights must be non-negative and sum to 1 (sum = {0})")]
    InvalidWeights(f64),
    #[error("capacities {capacities:?} cannot absorb {samples} samples")]
    InfeasibleCapacities { capacities: [usize; 3], samples: usize },
    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;
