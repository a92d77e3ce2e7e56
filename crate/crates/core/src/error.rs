use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },
    #[error("{qubits} qubits is too many for a dense realization (max {max})")]
    TooManyQubits { qubits: usize, max: usize },
    #[error("single-qubit state {index} is not normalized (norm² = {norm_sqr})")]
    Unnormalized { index: usize, norm_sqr: f64 },
    #[error("invalid pauli label {0:?}")]
    InvalidLabel(char),
    #[error("malformed pauli term: {0}")]
    Parse(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("angle {0} is outside [-pi, pi]")]
    AngleOutOfRange(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("hartree-fock iteration did not converge after {iterations} steps")]
    HartreeFockNotConverged { iterations: usize },
    #[error("qubit spectrum deviates from the fermionic one by {deviation:e}")]
    SpectrumMismatch { deviation: f64 },
    #[error("calibration matrix is singular (condition estimate {condition:e})")]
    SingularCalibration { condition: f64 },
    #[error("normal equations are rank deficient: rank {rank} of {needed} (condition {condition:e})")]
    RankDeficient { rank: usize, needed: usize, condition: f64 },
    #[error("exact constraints are inconsistent (residual {residual:e})")]
    InconsistentConstraints { residual: f64 },
    #[error("one-dimensional fit is singular at angle {angle}")]
    SingularLineFit { angle: f64 },
    #[error("evaluation budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },
    #[error("bisection for the chemical potential failed to bracket n = {n}")]
    BracketFailure { n: f64 },
    #[error("value {0} is outside the band [-1, 1]")]
    OutOfBand(f64),
    #[error("quasiparticle weight vanishes; self-energy diverges")]
    ZeroQuasiparticleWeight,
}
