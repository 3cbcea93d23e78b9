//! Entropies, divergences and entanglement measures.
//!
//! Entropies are in nats. The two-qubit entanglement of formation uses the
//! Wootters concurrence; the square roots of the eigenvalues of
//! rho (sy x sy) rho* (sy x sy) are extracted through the Hermitian
//! similarity sqrt(rho) rho~ sqrt(rho), which keeps everything inside the
//! Hermitian eigensolver.

use num_complex::Complex64;

use crate::error::Error;
use crate::hilbert::{DensityMatrix, PureState};
use crate::linalg::{self, cr, CMat};
use crate::tol;
use crate::Result;

/// S(rho) = -tr[rho ln rho]
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let eig = linalg::eig_hermitian(rho.matrix())?;
    let spec = linalg::psd_spectrum(&eig)?;
    Ok(linalg::spectrum_entropy(&spec))
}

/// H{p} = -sum p ln p, with 0 ln 0 = 0.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > tol::EPS_RANK)
        .map(|&x| -x * x.ln())
        .sum()
}

/// h(x) = -x ln x - (1-x) ln(1-x)
pub fn binary_entropy(x: f64) -> f64 {
    let mut s = 0.0;
    if x > tol::EPS_RANK {
        s -= x * x.ln();
    }
    if 1.0 - x > tol::EPS_RANK {
        s -= (1.0 - x) * (1.0 - x).ln();
    }
    s
}

/// Entanglement entropy of a pure state across a cut: the entropy of the
/// reduced state on the cut (computed on whichever side is smaller).
pub fn entanglement_entropy(psi: &PureState, cut: &[&str]) -> Result<f64> {
    if cut.is_empty() {
        return Err(Error::Invalid("cut must be a nonempty label subset".into()));
    }
    for l in cut {
        psi.layout().position(l)?;
    }
    let comp = psi.layout().complement(cut);
    if comp.is_empty() {
        return Err(Error::Invalid("cut must be a proper label subset".into()));
    }
    let comp_refs: Vec<&str> = comp.iter().map(|s| s.as_str()).collect();
    let cut_dim: usize = cut
        .iter()
        .map(|l| psi.layout().dim_of(l).unwrap())
        .product();
    let comp_dim: usize = comp_refs
        .iter()
        .map(|l| psi.layout().dim_of(l).unwrap())
        .product();
    let rho = psi.density();
    let side = if cut_dim <= comp_dim {
        cut
    } else {
        &comp_refs[..]
    };
    let reduced = rho.partial_trace(side)?;
    let s = von_neumann_entropy(&reduced)?;
    #[cfg(debug_assertions)]
    {
        let other = if cut_dim <= comp_dim {
            &comp_refs[..]
        } else {
            cut
        };
        let s2 = von_neumann_entropy(&rho.partial_trace(other)?)?;
        debug_assert!(
            (s - s2).abs() <= 1e-8 * (1.0 + s.abs()),
            "entanglement entropy must be symmetric across complementary cuts"
        );
    }
    Ok(s)
}

/// D(rho || sigma) = tr[rho (ln rho - ln sigma)].
///
/// Returns +infinity when the support of rho is not contained in the
/// support of sigma; that is a legitimate value, not an error.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let er = linalg::eig_hermitian(rho.matrix())?;
    let sr = linalg::psd_spectrum(&er)?;
    let es = linalg::eig_hermitian(sigma.matrix())?;
    let ss = linalg::psd_spectrum(&es)?;
    // weight of rho outside supp(sigma)
    let mut outside = 0.0;
    for (j, &sj) in ss.iter().enumerate() {
        if sj <= tol::EPS_RANK {
            let col = es.vectors.column(j);
            let overlap = (col.adjoint() * rho.matrix() * col)[(0, 0)].re;
            outside += overlap;
        }
    }
    if outside > 1e-10 {
        return Ok(f64::INFINITY);
    }
    let tr_rho_log_rho: f64 = sr
        .iter()
        .filter(|&&v| v > tol::EPS_RANK)
        .map(|&v| v * v.ln())
        .sum();
    let mut tr_rho_log_sigma = 0.0;
    for (j, &sj) in ss.iter().enumerate() {
        if sj > tol::EPS_RANK {
            let col = es.vectors.column(j);
            let overlap = (col.adjoint() * rho.matrix() * col)[(0, 0)].re;
            tr_rho_log_sigma += overlap * sj.ln();
        }
    }
    Ok((tr_rho_log_rho - tr_rho_log_sigma).max(0.0))
}

fn sy_sy() -> CMat {
    // sigma_y x sigma_y is real: antidiagonal (-1, 1, 1, -1)
    let mut m = CMat::zeros(4, 4);
    m[(0, 3)] = cr(-1.0);
    m[(1, 2)] = cr(1.0);
    m[(2, 1)] = cr(1.0);
    m[(3, 0)] = cr(-1.0);
    m
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// The mu_i are the singular values of the symmetric overlap matrix
/// tau_ij = x_i^T (sy x sy) x_j over the subnormalized eigenvectors
/// x_i = sqrt(lambda_i) v_i. This carries the same spectrum as the
/// sqrt(rho) rho~ sqrt(rho) similarity but avoids taking square roots of
/// near-zero eigenvalues, which would cost half the working precision.
pub fn concurrence_2q(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 || rho.layout().num_factors() != 2 {
        return Err(Error::Invalid(format!(
            "concurrence needs a two-qubit layout, got dim {}",
            rho.dim()
        )));
    }
    let yy = sy_sy();
    let eig = linalg::eig_hermitian(rho.matrix())?;
    let spec = linalg::psd_spectrum(&eig)?;
    let mut tau = CMat::zeros(4, 4);
    for i in 0..4 {
        for j in 0..=i {
            let w = (spec[i] * spec[j]).max(0.0).sqrt();
            let mut acc = cr(0.0);
            for a in 0..4 {
                for b in 0..4 {
                    if yy[(a, b)].re != 0.0 {
                        acc += eig.vectors[(a, i)] * yy[(a, b)] * eig.vectors[(b, j)];
                    }
                }
            }
            tau[(i, j)] = acc * w;
            tau[(j, i)] = tau[(i, j)];
        }
    }
    let svd = tau.svd(false, false);
    let mut mu: Vec<f64> = svd.singular_values.iter().cloned().collect();
    mu.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).clamp(0.0, 1.0))
}

/// Entanglement of formation from a concurrence value.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// Exact two-qubit entanglement of formation (Wootters closed form).
pub fn eof_2q(rho: &DensityMatrix) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence_2q(rho)?))
}

/// Schmidt coefficients (squared, descending) of a two-qubit pure state.
pub fn schmidt_spectrum_2q(psi: &PureState) -> Result<[f64; 2]> {
    if psi.dim() != 4 || psi.layout().num_factors() != 2 {
        return Err(Error::Invalid("expected a two-qubit pure state".into()));
    }
    let first = psi.layout().labels()[0].to_string();
    let reduced = psi.density().partial_trace(&[first.as_str()])?;
    let (a, b) = linalg::eig2_values(reduced.matrix());
    Ok([a.max(0.0), b.max(0.0)])
}

/// Two-qubit pure states are local-unitary equivalent iff their Schmidt
/// spectra agree.
pub fn lu_equivalent_pure_2q(a: &PureState, b: &PureState) -> Result<bool> {
    let sa = schmidt_spectrum_2q(a)?;
    let sb = schmidt_spectrum_2q(b)?;
    Ok((sa[0] - sb[0]).abs() <= tol::EPS_SCHMIDT && (sa[1] - sb[1]).abs() <= tol::EPS_SCHMIDT)
}

/// A pure-state ensemble realizing a mixed state: rho = sum_j q_j |phi_j><phi_j|.
#[derive(Debug, Clone)]
pub struct EnsembleDecomposition {
    pub weights: Vec<f64>,
    pub members: Vec<PureState>,
}

impl EnsembleDecomposition {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Residual between sum_j q_j |phi_j><phi_j| and the target.
    pub fn reconstruction_residual(&self, target: &DensityMatrix) -> f64 {
        let d = target.dim();
        let mut acc = CMat::zeros(d, d);
        for (q, psi) in self.weights.iter().zip(&self.members) {
            acc += (psi.amplitudes() * psi.amplitudes().adjoint()).scale(*q);
        }
        linalg::mat_dist(&acc, target.matrix())
    }

    /// Check weights form a distribution and the ensemble reproduces rho.
    pub fn validate(&self, target: &DensityMatrix) -> Result<()> {
        if self.weights.len() != self.members.len() {
            return Err(Error::Invalid("weights/members length mismatch".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&q| q < -tol::EPS_TRACE) || (total - 1.0).abs() > tol::EPS_TRACE
        {
            return Err(Error::Invalid(format!("ensemble weights sum to {total}")));
        }
        let resid = self.reconstruction_residual(target);
        if resid > 1e3 * tol::EPS_REC {
            return Err(Error::InvalidEnsemble(resid));
        }
        Ok(())
    }

    /// Average of a pure-state functional over the ensemble, dropping
    /// negligible-weight members.
    pub fn average<F: FnMut(&PureState) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&q, psi) in self.weights.iter().zip(&self.members) {
            if q > tol::EPS_PROB {
                acc += q * f(psi)?;
            }
        }
        Ok(acc)
    }
}

/// Overlap-phase helper used when comparing states up to a global phase.
pub fn global_phase(a: &PureState, b: &PureState) -> Complex64 {
    let ip = a.inner(b);
    if ip.norm() > 1e-300 {
        ip / ip.norm()
    } else {
        cr(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar;
    use crate::hilbert::SystemLayout;
    use crate::linalg::CVec;

    fn qubit(l: &str) -> SystemLayout {
        SystemLayout::single(l, 2)
    }

    fn two_qubits(a: &str, b: &str) -> SystemLayout {
        qubit(a).tensor(&qubit(b)).unwrap()
    }

    fn bell_phi_plus() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(
            two_qubits("S", "R"),
            CVec::from_vec(vec![cr(s), cr(0.0), cr(0.0), cr(s)]),
        )
        .unwrap()
    }

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn entropy_pure_and_mixed() {
        let pure = PureState::basis(qubit("a"), &[0]).unwrap().density();
        assert!(von_neumann_entropy(&pure).unwrap() < 1e-12);

        let half = DensityMatrix::new(qubit("a"), CMat::identity(2, 2).scale(0.5)).unwrap();
        assert!((von_neumann_entropy(&half).unwrap() - LN2).abs() < 1e-12);

        let m = CMat::from_row_slice(2, 2, &[cr(0.9), cr(0.0), cr(0.0), cr(0.1)]);
        let rho = DensityMatrix::new(qubit("a"), m).unwrap();
        let want = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        assert!((von_neumann_entropy(&rho).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn shannon_cases() {
        assert!(shannon_entropy(&[1.0, 0.0]) < 1e-15);
        assert!((shannon_entropy(&[0.5, 0.5]) - LN2).abs() < 1e-15);
        let want = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((shannon_entropy(&[0.25, 0.75]) - want).abs() < 1e-15);
    }

    #[test]
    fn entanglement_entropy_cases() {
        assert!((entanglement_entropy(&bell_phi_plus(), &["S"]).unwrap() - LN2).abs() < 1e-12);

        // product |0> x |+>
        let plus = PureState::new(
            qubit("b"),
            CVec::from_vec(vec![
                cr(std::f64::consts::FRAC_1_SQRT_2),
                cr(std::f64::consts::FRAC_1_SQRT_2),
            ]),
        )
        .unwrap();
        let prod = PureState::basis(qubit("a"), &[0])
            .unwrap()
            .tensor(&plus)
            .unwrap();
        assert!(entanglement_entropy(&prod, &["a"]).unwrap() < 1e-12);

        // GHZ across P vs (S,R1)
        let layout = qubit("P").tensor(&two_qubits("S", "R1")).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amp = CVec::zeros(8);
        amp[0] = cr(s);
        amp[7] = cr(s);
        let ghz = PureState::new(layout, amp).unwrap();
        assert!((entanglement_entropy(&ghz, &["P"]).unwrap() - LN2).abs() < 1e-12);
    }

    #[test]
    fn entanglement_entropy_symmetric_under_complement() {
        let mut rng = haar::rng_for(9, 0);
        let layout = two_qubits("A", "B")
            .tensor(&SystemLayout::single("C", 3))
            .unwrap();
        for _ in 0..30 {
            let psi = haar::random_pure_state(&layout, &mut rng);
            let s1 = entanglement_entropy(&psi, &["A"]).unwrap();
            let s2 = entanglement_entropy(&psi, &["B", "C"]).unwrap();
            assert!((s1 - s2).abs() < 1e-10);
        }
    }

    #[test]
    fn entanglement_entropy_rejects_bad_cut() {
        let b = bell_phi_plus();
        assert!(entanglement_entropy(&b, &[]).is_err());
        assert!(entanglement_entropy(&b, &["S", "R"]).is_err());
        assert!(entanglement_entropy(&b, &["nope"]).is_err());
    }

    #[test]
    fn relative_entropy_cases() {
        let mut rng = haar::rng_for(10, 0);
        let rho = haar::random_density_matrix(&qubit("a"), 2, &mut rng);
        assert!(relative_entropy(&rho, &rho).unwrap() < 1e-10);

        let p0 = PureState::basis(qubit("a"), &[0]).unwrap().density();
        let p1 = PureState::basis(qubit("a"), &[1]).unwrap().density();
        assert!(relative_entropy(&p0, &p1).unwrap().is_infinite());

        // D(I/2 || diag(p, 1-p)) = -ln 2 - (ln p + ln(1-p))/2
        let p = 0.3f64;
        let half = DensityMatrix::new(qubit("a"), CMat::identity(2, 2).scale(0.5)).unwrap();
        let diag = DensityMatrix::new(
            qubit("a"),
            CMat::from_row_slice(2, 2, &[cr(p), cr(0.0), cr(0.0), cr(1.0 - p)]),
        )
        .unwrap();
        let want = -LN2 - 0.5 * (p.ln() + (1.0 - p).ln());
        assert!((relative_entropy(&half, &diag).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_nonnegative_random() {
        let mut rng = haar::rng_for(11, 0);
        let layout = SystemLayout::single("a", 3);
        for _ in 0..50 {
            let rho = haar::random_density_matrix(&layout, 3, &mut rng);
            let sigma = haar::random_density_matrix(&layout, 3, &mut rng);
            let d = relative_entropy(&rho, &sigma).unwrap();
            assert!(d >= 0.0);
        }
    }

    #[test]
    fn concurrence_bell_and_product() {
        assert!((concurrence_2q(&bell_phi_plus().density()).unwrap() - 1.0).abs() < 1e-10);

        let prod = PureState::basis(two_qubits("S", "R"), &[0, 1])
            .unwrap()
            .density();
        assert!(concurrence_2q(&prod).unwrap() < 1e-10);
    }

    #[test]
    fn concurrence_traced_w_state() {
        // tr_P |W><W| has concurrence 2/3
        let layout = qubit("P").tensor(&two_qubits("S", "R1")).unwrap();
        let a = cr(1.0 / 3.0f64.sqrt());
        let mut amp = CVec::zeros(8);
        amp[1] = a; // |001>
        amp[2] = a; // |010>
        amp[4] = a; // |100>
        let w = PureState::new(layout, amp).unwrap();
        let rho = w.density().partial_trace(&["S", "R1"]).unwrap();
        assert!((concurrence_2q(&rho).unwrap() - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn eof_closed_forms() {
        assert!((eof_from_concurrence(1.0) - LN2).abs() < 1e-14);
        assert!(eof_from_concurrence(0.0) < 1e-14);
        let c: f64 = 2.0 / 3.0;
        let want = binary_entropy(0.5 * (1.0 + (1.0 - c * c).sqrt()));
        assert!((eof_from_concurrence(c) - want).abs() < 1e-14);
        assert!((eof_2q(&bell_phi_plus().density()).unwrap() - LN2).abs() < 1e-10);
    }

    #[test]
    fn lu_equivalence_cases() {
        let mut rng = haar::rng_for(12, 0);
        let layout = two_qubits("S", "R");
        for _ in 0..30 {
            let psi = haar::random_pure_state(&layout, &mut rng);
            let u = haar::random_unitary_on(&layout, &["S"], &mut rng);
            let v = haar::random_unitary_on(&layout, &["R"], &mut rng);
            let rotated = v.apply(&u.apply(&psi).unwrap()).unwrap();
            assert!(lu_equivalent_pure_2q(&psi, &rotated).unwrap());
        }
        let prod = PureState::basis(layout.clone(), &[0, 0]).unwrap();
        assert!(!lu_equivalent_pure_2q(&bell_phi_plus(), &prod).unwrap());

        // distinct Schmidt spectra (0.9, 0.1) vs (0.8, 0.2)
        let mk = |p: f64| {
            let mut amp = CVec::zeros(4);
            amp[0] = cr(p.sqrt());
            amp[3] = cr((1.0 - p).sqrt());
            PureState::new(layout.clone(), amp).unwrap()
        };
        assert!(!lu_equivalent_pure_2q(&mk(0.9), &mk(0.8)).unwrap());
    }

    #[test]
    fn entropy_concavity_random_mixtures() {
        let mut rng = haar::rng_for(13, 0);
        let layout = SystemLayout::single("a", 4);
        for _ in 0..30 {
            let rhos: Vec<DensityMatrix> = (0..3)
                .map(|_| haar::random_density_matrix(&layout, 4, &mut rng))
                .collect();
            let p = [0.5, 0.3, 0.2];
            let mut mix = CMat::zeros(4, 4);
            for (w, r) in p.iter().zip(&rhos) {
                mix += r.matrix().scale(*w);
            }
            let mix = DensityMatrix::new(layout.clone(), mix).unwrap();
            let lhs = von_neumann_entropy(&mix).unwrap();
            let rhs: f64 = p
                .iter()
                .zip(&rhos)
                .map(|(w, r)| w * von_neumann_entropy(r).unwrap())
                .sum();
            assert!(lhs >= rhs - 1e-10, "entropy must be concave");
        }
    }

    #[test]
    fn mixing_entropy_identity() {
        // S(sum p_k U_k rho_k U_k^dag) = sum p_k S(rho_k) + sum p_k D(U_k rho_k U_k^dag || mix)
        let mut rng = haar::rng_for(14, 0);
        let layout = qubit("a");
        for _ in 0..50 {
            let rhos: Vec<DensityMatrix> = (0..2)
                .map(|_| haar::random_density_matrix(&layout, 2, &mut rng))
                .collect();
            let p = [0.6, 0.4];
            let us: Vec<_> = (0..2)
                .map(|_| haar::random_unitary_on(&layout, &["a"], &mut rng))
                .collect();
            let rotated: Vec<DensityMatrix> = us
                .iter()
                .zip(&rhos)
                .map(|(u, r)| u.apply_density(r).unwrap())
                .collect();
            let mut mix = CMat::zeros(2, 2);
            for (w, r) in p.iter().zip(&rotated) {
                mix += r.matrix().scale(*w);
            }
            let mix = DensityMatrix::new(layout.clone(), mix).unwrap();
            let lhs = von_neumann_entropy(&mix).unwrap();
            let rhs: f64 = p
                .iter()
                .zip(&rotated)
                .map(|(w, r)| {
                    w * (von_neumann_entropy(r).unwrap() + relative_entropy(r, &mix).unwrap())
                })
                .sum();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
