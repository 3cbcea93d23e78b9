//! Seeded random states, unitaries and density matrices.
//!
//! All sampling is deterministic given a `ChaCha8Rng` seed so sweep reports
//! replay bit-identically.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{DensityMatrix, PureState, SystemLayout, UnitaryOp};
use crate::linalg::{c, cr, CMat, CVec};

/// A fresh RNG deterministically derived from a base seed and a stream
/// index, so parallel trials replay identically regardless of scheduling.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    // splitmix-style mixing keeps nearby (seed, stream) pairs uncorrelated
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Matrix of iid standard complex Gaussians.
pub fn random_ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Random Hermitian matrix (GUE-style, unnormalized).
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 1e-300 {
            d / d.norm()
        } else {
            cr(1.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase.conj();
        }
    }
    q
}

/// Haar-random unit vector.
pub fn random_state_vector(n: usize, rng: &mut impl Rng) -> CVec {
    let mut v = CVec::from_fn(n, |_, _| c(gaussian(rng), gaussian(rng)));
    let norm = v.norm();
    v /= cr(norm);
    v
}

/// Haar-random pure state on a layout.
pub fn random_pure_state(layout: &SystemLayout, rng: &mut impl Rng) -> PureState {
    PureState::new(layout.clone(), random_state_vector(layout.dim(), rng)).expect("unit vector")
}

/// Random density matrix of the given rank (Ginibre ensemble).
pub fn random_density_matrix(
    layout: &SystemLayout,
    rank: usize,
    rng: &mut impl Rng,
) -> DensityMatrix {
    let n = layout.dim();
    let g = random_ginibre(n, rank.max(1).min(n), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(layout.clone(), m.scale(1.0 / tr)).expect("valid density matrix")
}

/// Haar-random unitary acting on the named factors of a layout.
pub fn random_unitary_on(layout: &SystemLayout, labels: &[&str], rng: &mut impl Rng) -> UnitaryOp {
    let sub = layout.sublayout(labels).expect("labels exist");
    let u = random_unitary(sub.dim(), rng);
    UnitaryOp::new(sub, u).expect("unitary")
}
