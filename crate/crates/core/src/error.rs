use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} > {tol:.1e})")]
    NotHermitian { asymmetry: f64, tol: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal {off_diagonal:.3e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("state is not faithful: min eigenvalue {min_eigenvalue:.3e} below floor {floor:.1e}")]
    NotFaithful { min_eigenvalue: f64, floor: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("state repair failed: min eigenvalue {min_eigenvalue:.3e}, trace error {trace_error:.3e} exceed repair tolerance {repair_tol:.1e}")]
    StateRepairFailed {
        min_eigenvalue: f64,
        trace_error: f64,
        repair_tol: f64,
    },

    #[error("pure-state unraveling requires unit detector efficiency, got eta = {eta}")]
    EfficiencyNotUnit { eta: f64 },

    #[error("derivative of order {order} overflows the scalar range at z = {z:.3e}")]
    OrderOverflow { order: usize, z: f64 },

    #[error("record length {n} exceeds the enumeration limit {max}")]
    BranchLimitExceeded { n: usize, max: usize },

    #[error(
        "probe state is not faithful (min eigenvalue {min_eigenvalue:.3e}); ln(sigma) undefined"
    )]
    ProbeNotFaithful { min_eigenvalue: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
