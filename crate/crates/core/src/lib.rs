//! Desk-scale quantum information-thermodynamics laboratory.
//!
//! Everything here operates on dense complex matrices over small labeled
//! tensor-product Hilbert spaces (total dimension of order 64 or less).
//! The crate provides:
//!
//! - [`hilbert`]: labeled tensor factors, pure states, density matrices and
//!   embedded unitaries, with partial trace and canonical purification;
//! - [`entanglement`]: entropies, relative entropy, the two-qubit Wootters
//!   concurrence / entanglement of formation, and a convex-roof minimizer
//!   over pure-state ensembles ([`roof`]);
//! - [`schmidt`]: the generalized Schmidt decomposition of three-qubit pure
//!   states and the derived local-unitary invariants;
//! - [`measurement`]: Kraus operators induced by probe interactions, the
//!   closed-form optimal two-outcome probe measurement, and probe bases
//!   built from optimal ensembles;
//! - [`thermo`]: canonical states, information quantities, the
//!   measurement-feedback process pipeline and its second-law slack reports.
//!
//! All logarithms are natural (entropies in nats) and k_B = 1 throughout.

pub mod entanglement;
pub mod error;
pub mod haar;
pub mod hilbert;
pub mod linalg;
pub mod measurement;
pub mod roof;
pub mod scenarios;
pub mod schmidt;
pub mod thermo;
pub mod tol;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;

// Re-exported so downstream seeding stays in version lockstep.
pub use rand;
pub use rand_chacha;

pub use hilbert::{DensityMatrix, PureState, SystemLayout, UnitaryOp};
pub use linalg::{CMat, CVec, C64};
