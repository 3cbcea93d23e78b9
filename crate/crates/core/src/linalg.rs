//! Dense complex linear algebra helpers shared by every module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; the Hermitian
//! eigendecomposition comes from nalgebra's `symmetric_eigen`, re-sorted
//! descending and validated against its reconstruction residual. Matrix
//! functions (sqrt, log, exp) go through that decomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Error;
use crate::tol;
use crate::Result;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Frobenius distance between two matrices.
pub fn mat_dist(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn unitarity_defect(m: &CMat) -> f64 {
    let n = m.ncols();
    (m.adjoint() * m - CMat::identity(n, n)).norm()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending,
/// eigenvectors as unitary columns in matching order.
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEig {
    /// V diag(values) V^dag
    pub fn reassemble(&self) -> CMat {
        let n = self.values.len();
        let d = CMat::from_fn(
            n,
            n,
            |i, j| if i == j { cr(self.values[i]) } else { cr(0.0) },
        );
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition with a descending sort.
///
/// Fails if the input is not Hermitian within tolerance or if the
/// reconstruction residual exceeds `tol::EPS_EIG` times the matrix scale.
pub fn eig_hermitian(m: &CMat) -> Result<HermitianEig> {
    let defect = hermiticity_defect(m);
    if defect > tol::EPS_HERM * (1.0 + m.norm()) {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.nrows();
    // Work on the exactly Hermitian part so roundoff in the input cannot
    // leak into complex eigenvalues.
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    let out = HermitianEig { values, vectors };
    let resid = mat_dist(&out.reassemble(), &h);
    if resid > tol::EPS_EIG * (1.0 + h.norm()) * 10.0 {
        return Err(Error::InvariantViolation(format!(
            "eigendecomposition residual {resid:.3e}"
        )));
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix clamped to be a PSD spectrum.
///
/// Values in [-EPS_PSD, 0) are set to 0; anything further below fails.
pub fn psd_spectrum(eig: &HermitianEig) -> Result<Vec<f64>> {
    let scale = 1.0 + eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::with_capacity(eig.values.len());
    for &v in &eig.values {
        if v < -tol::EPS_PSD * scale {
            return Err(Error::NotPsd(v));
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}

fn apply_spectral<F: Fn(f64) -> f64>(eig: &HermitianEig, f: F) -> CMat {
    let n = eig.values.len();
    let d = CMat::from_fn(n, n, |i, j| {
        if i == j {
            cr(f(eig.values[i]))
        } else {
            cr(0.0)
        }
    });
    &eig.vectors * d * eig.vectors.adjoint()
}

/// PSD square root via the spectral decomposition.
pub fn matrix_sqrt_psd(m: &CMat) -> Result<CMat> {
    let eig = eig_hermitian(m)?;
    psd_spectrum(&eig)?;
    Ok(apply_spectral(&eig, |v| v.max(0.0).sqrt()))
}

/// Natural logarithm on the support of a PSD matrix; the kernel maps to zero
/// (the 0 log 0 = 0 convention used by every entropy here).
pub fn matrix_log_support(m: &CMat) -> Result<CMat> {
    let eig = eig_hermitian(m)?;
    psd_spectrum(&eig)?;
    Ok(apply_spectral(&eig, |v| {
        if v > tol::EPS_RANK {
            v.ln()
        } else {
            0.0
        }
    }))
}

/// exp(s * m) for Hermitian m (used for canonical states with s = -beta).
pub fn matrix_exp_hermitian(m: &CMat, s: f64) -> Result<CMat> {
    let eig = eig_hermitian(m)?;
    Ok(apply_spectral(&eig, |v| (s * v).exp()))
}

/// -sum p ln p over a clamped spectrum.
pub fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&p| p > tol::EPS_RANK)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Eigenvalues of a 2x2 Hermitian matrix, descending. Cheap path for the
/// inner loops of the convex-roof search.
pub fn eig2_values(m: &CMat) -> (f64, f64) {
    debug_assert_eq!(m.nrows(), 2);
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mid + rad, mid - rad)
}

/// Entropy of a qubit density matrix without a general eigensolver.
pub fn entropy2(m: &CMat) -> f64 {
    let (p, q) = eig2_values(m);
    let mut s = 0.0;
    if p > tol::EPS_RANK {
        s -= p * p.ln();
    }
    if q > tol::EPS_RANK {
        s -= q * q.ln();
    }
    s
}

/// Full SVD of a 2x2 complex matrix: (u, [s0, s1], v) with m = u diag(s) v^dag,
/// s0 >= s1 >= 0 and u, v unitary.
pub fn svd2(m: &CMat) -> (CMat, [f64; 2], CMat) {
    debug_assert_eq!(m.nrows(), 2);
    // Right singular vectors from the 2x2 Hermitian m^dag m.
    let g = m.adjoint() * m;
    let (l0, l1) = eig2_values(&g);
    let s0 = l0.max(0.0).sqrt();
    let s1 = l1.max(0.0).sqrt();
    // Eigenvector of g for l0, from whichever of the two equivalent
    // formulas is better conditioned.
    let a = g[(0, 0)].re;
    let b = g[(0, 1)];
    let d = g[(1, 1)].re;
    let n1 = b.norm_sqr() + (l0 - a) * (l0 - a);
    let n2 = (l0 - d) * (l0 - d) + b.norm_sqr();
    let scale = (a.abs() + d.abs() + b.norm()).max(1e-300);
    let v0 = if n1.max(n2) <= (1e-14 * scale) * (1e-14 * scale) {
        // g is (numerically) a multiple of the identity
        (cr(1.0), cr(0.0))
    } else if n1 >= n2 {
        normalize2(b, cr(l0 - a))
    } else {
        normalize2(cr(l0 - d), b.conj())
    };
    let v1 = (-v0.1.conj(), v0.0.conj());
    let u0 = {
        let w0 = m[(0, 0)] * v0.0 + m[(0, 1)] * v0.1;
        let w1 = m[(1, 0)] * v0.0 + m[(1, 1)] * v0.1;
        let n = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
        if n > 1e-150 {
            (w0 / n, w1 / n)
        } else {
            (cr(1.0), cr(0.0))
        }
    };
    let u1 = {
        let w0 = m[(0, 0)] * v1.0 + m[(0, 1)] * v1.1;
        let w1 = m[(1, 0)] * v1.0 + m[(1, 1)] * v1.1;
        if s1 > 1e-7 * (1.0 + s0) {
            let n = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
            (w0 / n, w1 / n)
        } else {
            // Orthonormal completion of u0: the tiny singular direction is
            // dominated by rounding, so the completion is more reliable.
            (-u0.1.conj(), u0.0.conj())
        }
    };
    let u = CMat::from_row_slice(2, 2, &[u0.0, u1.0, u0.1, u1.1]);
    let v = CMat::from_row_slice(2, 2, &[v0.0, v1.0, v0.1, v1.1]);
    (u, [s0, s1], v)
}

fn normalize2(x: C64, y: C64) -> (C64, C64) {
    let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
    (x / n, y / n)
}

/// Orthonormalize the columns of a tall matrix in place (modified
/// Gram-Schmidt with one reorthogonalization pass). Used to retract
/// convex-roof candidates back onto the isometry manifold.
pub fn orthonormalize_columns(m: &mut CMat) {
    let (rows, cols) = (m.nrows(), m.ncols());
    for j in 0..cols {
        let mut attempt = 0usize;
        loop {
            for _ in 0..2 {
                for k in 0..j {
                    let mut dot = cr(0.0);
                    for r in 0..rows {
                        dot += m[(r, k)].conj() * m[(r, j)];
                    }
                    for r in 0..rows {
                        let sub = dot * m[(r, k)];
                        m[(r, j)] -= sub;
                    }
                }
            }
            let mut norm = 0.0;
            for r in 0..rows {
                norm += m[(r, j)].norm_sqr();
            }
            let norm = norm.sqrt();
            if norm > 1e-8 || attempt > rows {
                if norm > 1e-300 {
                    for r in 0..rows {
                        m[(r, j)] /= norm;
                    }
                }
                break;
            }
            // degenerate direction: seed a fresh basis vector and re-project
            for r in 0..rows {
                m[(r, j)] = if r == attempt % rows {
                    cr(1.0)
                } else {
                    cr(0.0)
                };
            }
            attempt += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eig_diagonal() {
        let m = CMat::from_row_slice(2, 2, &[cr(0.3), cr(0.0), cr(0.0), cr(0.7)]);
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - 0.7).abs() < 1e-14);
        assert!((e.values[1] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn eig_pauli_x() {
        let m = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        // eigenvector for +1 is (1, 1)/sqrt(2) up to phase
        let v = &e.vectors;
        assert!((v[(0, 0)].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn eig_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 5, 8, 16] {
            let h = haar::random_hermitian(n, &mut rng);
            let e = eig_hermitian(&h).unwrap();
            assert!(mat_dist(&e.reassemble(), &h) <= 1e-10 * (1.0 + h.norm()));
            let sum: f64 = e.values.iter().sum();
            let trace = h.trace().re;
            assert!((sum - trace).abs() < 1e-10 * (1.0 + trace.abs()));
        }
    }

    #[test]
    fn sqrt_and_log_diagonal() {
        let m = CMat::from_row_slice(2, 2, &[cr(4.0), cr(0.0), cr(0.0), cr(9.0)]);
        let s = matrix_sqrt_psd(&m).unwrap();
        assert!(
            mat_dist(
                &s,
                &CMat::from_row_slice(2, 2, &[cr(2.0), cr(0.0), cr(0.0), cr(3.0)])
            ) < 1e-12
        );

        let p = CMat::from_row_slice(2, 2, &[cr(0.5), cr(0.5), cr(0.5), cr(0.5)]);
        let sp = matrix_sqrt_psd(&p).unwrap();
        assert!(
            mat_dist(&sp, &p) < 1e-10,
            "sqrt of a projector is the projector"
        );

        let d = CMat::from_row_slice(
            3,
            3,
            &[
                cr(0.5),
                cr(0.0),
                cr(0.0),
                cr(0.0),
                cr(0.5),
                cr(0.0),
                cr(0.0),
                cr(0.0),
                cr(0.0),
            ],
        );
        let l = matrix_log_support(&d).unwrap();
        assert!((l[(0, 0)].re - 0.5f64.ln()).abs() < 1e-12);
        assert!(l[(2, 2)].norm() < 1e-12, "kernel maps to zero");
    }

    #[test]
    fn sqrt_rejects_negative() {
        let m = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-0.1)]);
        assert!(matrix_sqrt_psd(&m).is_err());
    }

    #[test]
    fn svd2_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = haar::random_ginibre(2, 2, &mut rng);
            let (u, s, v) = svd2(&m);
            assert!(unitarity_defect(&u) < 1e-10);
            assert!(unitarity_defect(&v) < 1e-10);
            let d = CMat::from_row_slice(2, 2, &[cr(s[0]), cr(0.0), cr(0.0), cr(s[1])]);
            assert!(mat_dist(&(&u * d * v.adjoint()), &m) < 1e-10 * (1.0 + m.norm()));
            assert!(s[0] >= s[1] && s[1] >= -1e-15);
        }
    }

    #[test]
    fn orthonormalize_produces_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut m = haar::random_ginibre(4, 2, &mut rng);
            orthonormalize_columns(&mut m);
            assert!(unitarity_defect(&m) < 1e-12);
        }
    }
}
