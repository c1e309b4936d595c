use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid resolution {resolution} too small for truncation {n_trunc} (need at least {needed})")]
    ResolutionTooSmall {
        resolution: usize,
        n_trunc: usize,
        needed: usize,
    },
    #[error("truncation mismatch: {0} vs {1}")]
    TruncationMismatch(usize, usize),
    #[error("flow mean ({0}, {1}) has no rationally dependent coordinates; no circle-valued Hamiltonian")]
    NotHamiltonian(f64, f64),
    #[error("Hamiltonian verification failed: max defect {0:e}")]
    HamiltonianCheck(f64),
    #[error("drifted frame needs a base flow with nonzero mean first component")]
    ZeroMeanDrift,
    #[error("flow is not divergence-free: max |div u| = {0:e}")]
    Divergent(f64),
    #[error("flow is not stationary")]
    NotStationary,
    #[error("CFL violation: advection substep {substep:e} exceeds limit {limit:e}")]
    CflViolation { substep: f64, limit: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("bounds violation at t = {t}: range [{min}, {max}] leaves [{lo}, {hi}]")]
    BoundsViolation {
        t: f64,
        min: f64,
        max: f64,
        lo: f64,
        hi: f64,
    },
    #[error("not an eigenfunction of the period operator: residual {0:e}")]
    NotAnEigenfunction(f64),
    #[error("sweep too small: {0}")]
    InsufficientSweep(String),
    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
