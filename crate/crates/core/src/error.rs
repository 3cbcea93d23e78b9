use thiserror::Error;

/// Errors surfaced by state construction, linear algebra and the process
/// pipeline. Numerical degeneracies that have a defined fallback (decoupled
/// probes, vanishing phases) are flags on the result types, not errors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("overlapping labels between tensor factors: `{0}`")]
    OverlappingLabels(String),
    #[error("state is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian: asymmetry {0:.3e}")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPsd(f64),
    #[error("matrix has trace {0:?}, expected 1")]
    BadTrace(f64),
    #[error("operator is not unitary: deviation {0:.3e}")]
    NotUnitary(f64),
    #[error("projector family is incomplete: deviation {0:.3e}")]
    IncompleteProjectors(f64),
    #[error("ensemble does not reproduce the target state: residual {0:.3e}")]
    InvalidEnsemble(f64),
    #[error("ensemble size {size} is below the state rank {rank}")]
    EnsembleTooSmall { size: usize, rank: usize },
    #[error("ensemble of {size} members does not fit a probe of dimension {dim}")]
    EnsembleTooLarge { size: usize, dim: usize },
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("schedule inconsistency: {0}")]
    ScheduleInconsistent(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("purification does not reproduce the target state: residual {0:.3e}")]
    PurificationMismatch(f64),
    #[error("{0}")]
    Invalid(String),
}
