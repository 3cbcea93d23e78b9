//! Numerical tolerances used across the crate.
//!
//! Double-precision eigensolvers on matrices of dimension <= 64 comfortably
//! meet these; anything worse than them indicates a logic error, not noise.

/// Norm deviation allowed for a pure state.
pub const EPS_NORM: f64 = 1e-9;
/// Trace deviation allowed for a density matrix or probability vector.
pub const EPS_TRACE: f64 = 1e-9;
/// Hermiticity deviation allowed, in Frobenius norm.
pub const EPS_HERM: f64 = 1e-9;
/// How far below zero an eigenvalue may sit before a PSD check fails.
/// Eigenvalues in [-EPS_PSD, 0] are clamped to 0 before sqrt/log.
pub const EPS_PSD: f64 = 1e-9;
/// Residual allowed for an eigendecomposition reconstruction.
pub const EPS_EIG: f64 = 1e-10;
/// Residual allowed for round trips (purify then trace back, ensembles).
pub const EPS_REC: f64 = 1e-10;
/// Unitarity deviation allowed, in Frobenius norm.
pub const EPS_UNITARY: f64 = 1e-9;
/// Two-qubit Schmidt spectra closer than this are considered equal.
pub const EPS_SCHMIDT: f64 = 1e-8;
/// Eigenvalues below this are treated as outside the support (rank cut).
pub const EPS_RANK: f64 = 1e-12;
/// Outcome probabilities at or below this are dropped from all sums.
pub const EPS_PROB: f64 = 1e-12;
