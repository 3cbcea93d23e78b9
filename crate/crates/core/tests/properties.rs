//! Cross-module invariants on randomized inputs: structural properties of
//! the state algebra, measurement completeness, and the identities the
//! inequality proofs lean on.

use proptest::prelude::*;

use qithermo::entanglement::von_neumann_entropy;
use qithermo::haar;
use qithermo::hilbert::{DensityMatrix, SystemLayout};
use qithermo::linalg::{self, cr, CMat};
use qithermo::measurement::embed_operator;
use qithermo::scenarios;
use qithermo::thermo::ProbedPurification;

fn layout_of(dims: &[usize]) -> SystemLayout {
    let factors: Vec<(String, usize)> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| (format!("F{i}"), d))
        .collect();
    SystemLayout::new(factors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Partial trace preserves trace and positivity, whatever the cut.
    #[test]
    fn partial_trace_preserves_trace_and_psd(seed in any::<u64>(), pick in 0usize..3) {
        let layout = layout_of(&[2, 3, 2]);
        let mut rng = haar::rng_for(seed, 0);
        let rho = haar::random_density_matrix(&layout, 6, &mut rng);
        let keep = [format!("F{pick}")];
        let keep_refs: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
        let reduced = rho.partial_trace(&keep_refs).unwrap();
        prop_assert!((reduced.matrix().trace().re - 1.0).abs() < 1e-10);
        let eig = linalg::eig_hermitian(reduced.matrix()).unwrap();
        prop_assert!(eig.values.iter().all(|&v| v >= -1e-10));
    }

    /// Kronecker products multiply norms and traces.
    #[test]
    fn tensor_norm_is_multiplicative(seed in any::<u64>()) {
        let mut rng = haar::rng_for(seed, 1);
        let a = haar::random_pure_state(&SystemLayout::single("A", 3), &mut rng);
        let b = haar::random_pure_state(&SystemLayout::single("B", 2), &mut rng);
        let ab = a.tensor(&b).unwrap();
        prop_assert!((ab.amplitudes().norm() - 1.0).abs() < 1e-12);
        let rho = ab.density();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    /// The eigenvalue sum of a Hermitian matrix is its trace.
    #[test]
    fn eigenvalue_sum_is_trace(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = haar::rng_for(seed, 2);
        let h = haar::random_hermitian(n, &mut rng);
        let eig = linalg::eig_hermitian(&h).unwrap();
        let sum: f64 = eig.values.iter().sum();
        prop_assert!((sum - h.trace().re).abs() <= 1e-10 * (1.0 + h.trace().re.abs()));
    }

    /// Unitaries embedded on any factor subset preserve inner products.
    #[test]
    fn embedded_unitaries_preserve_inner_products(seed in any::<u64>(), which in 0usize..3) {
        let layout = layout_of(&[2, 2, 3]);
        let mut rng = haar::rng_for(seed, 3);
        let psi = haar::random_pure_state(&layout, &mut rng);
        let phi = haar::random_pure_state(&layout, &mut rng);
        let support: Vec<&str> = match which {
            0 => vec!["F0"],
            1 => vec!["F1", "F2"],
            _ => vec!["F2", "F0"],
        };
        let u = haar::random_unitary_on(&layout, &support, &mut rng);
        let up = u.apply(&psi).unwrap();
        let uq = u.apply(&phi).unwrap();
        prop_assert!((psi.inner(&phi) - up.inner(&uq)).norm() < 1e-11);
    }
}

/// Canonical purification round trip over 1000 random states.
#[test]
fn purify_round_trip_sweep() {
    let layout = SystemLayout::new(vec![("S", 2), ("B", 3)]).unwrap();
    let mut worst: f64 = 0.0;
    for idx in 0..1000u64 {
        let mut rng = haar::rng_for(0xbead_0001, idx);
        let rank = 1 + (idx % 6) as usize;
        let rho = haar::random_density_matrix(&layout, rank, &mut rng);
        let psi = rho.purify("R").unwrap();
        let back = psi.density().partial_trace(&["S", "B"]).unwrap();
        worst = worst.max(linalg::mat_dist(back.matrix(), rho.matrix()));
    }
    assert!(
        worst <= 1e-10,
        "purification round-trip residual {worst:.3e}"
    );
}

/// Measurement outcome probabilities sum to one, and dephasing the probe
/// commutes with tracing it out: the unconditional post-measurement state
/// has the same system-side reduction as the probed state.
#[test]
fn measurement_unconditional_state_consistency() {
    for idx in 0..200u64 {
        let mut rng = haar::rng_for(0xbead_0002, idx);
        let model = scenarios::random_measurement(&mut rng, "S", "P").unwrap();
        let s_layout = SystemLayout::single("S", 2);
        let rho = haar::random_density_matrix(&s_layout, 2, &mut rng);
        let probed = ProbedPurification::new(&rho, "S", &[], &model).unwrap();
        let psi = &probed.psi_psbr;
        // probabilities from the probe projectors
        let mut total = 0.0;
        let mut dephased = CMat::zeros(psi.dim(), psi.dim());
        for proj in &model.probe_projectors {
            let full = embed_operator(proj, &["P"], psi.layout()).unwrap();
            let branch = &full * psi.amplitudes();
            total += branch.norm_squared();
            dephased += &branch * branch.adjoint();
        }
        assert!((total - 1.0).abs() <= 1e-10, "probabilities sum to {total}");
        // the SBR reduction is untouched by probe-side dephasing
        let keep: Vec<&str> = probed.psi_sbr.layout().labels();
        let rho_sbr = psi.density().partial_trace(&keep).unwrap();
        let dephased_dm = DensityMatrix::new(psi.layout().clone(), dephased).unwrap();
        let rho_sbr_dephased = dephased_dm.partial_trace(&keep).unwrap();
        assert!(
            linalg::mat_dist(rho_sbr.matrix(), rho_sbr_dephased.matrix()) <= 1e-10,
            "probe dephasing leaked into the system-reference state"
        );
    }
}

/// The optimal-measurement parameter block [[a, k e^{-i t}], [k e^{i t}, b]]
/// with b = 1 - a and k = sqrt(a(1-a)) is a rank-1 projector: determinant
/// zero, trace one, idempotent.
#[test]
fn measurement_parameter_block_is_projector() {
    for idx in 0..200u64 {
        let mut rng = haar::rng_for(0xbead_0003, idx);
        let a: f64 = rand::Rng::random(&mut rng);
        let theta: f64 = rand::Rng::random::<f64>(&mut rng) * std::f64::consts::TAU;
        let b = 1.0 - a;
        let k = (a * b).sqrt();
        let off = num_complex::Complex64::from_polar(k, -theta);
        let m = CMat::from_row_slice(2, 2, &[cr(a), off, off.conj(), cr(b)]);
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        assert!(det.norm() <= 1e-15);
        assert!((m.trace().re - 1.0).abs() <= 1e-15);
        assert!(linalg::mat_dist(&(&m * &m), &m) <= 1e-9);
    }
}

/// Entropy never drops under mixing (concavity), over random ensembles.
#[test]
fn entropy_concavity_sweep() {
    let layout = SystemLayout::single("S", 4);
    for idx in 0..200u64 {
        let mut rng = haar::rng_for(0xbead_0004, idx);
        let n = 2 + (idx % 3) as usize;
        let rhos: Vec<DensityMatrix> = (0..n)
            .map(|_| haar::random_density_matrix(&layout, 4, &mut rng))
            .collect();
        let raw: Vec<f64> = (0..n)
            .map(|_| rand::Rng::random::<f64>(&mut rng) + 0.05)
            .collect();
        let z: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|w| w / z).collect();
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
        assert!(lhs >= rhs - 1e-10);
    }
}

/// The convex roof is monotone non-increasing in the restart budget and the
/// witness always reproduces its target.
#[test]
fn convex_roof_budget_monotonicity() {
    let layout = SystemLayout::new(vec![("S", 2), ("R", 2)]).unwrap();
    for idx in 0..10u64 {
        let mut rng = haar::rng_for(0xbead_0005, idx);
        let rho = haar::random_density_matrix(&layout, 2, &mut rng);
        let mut prev = f64::INFINITY;
        for restarts in [1usize, 8, 32] {
            let budget = qithermo::roof::RoofBudget::new(4, restarts, idx);
            let (value, witness) = qithermo::roof::eof_convex_roof(&rho, &["S"], &budget).unwrap();
            assert!(value <= prev + 1e-12);
            assert!(witness.reconstruction_residual(&rho) <= 1e-9);
            prev = value;
        }
    }
}

/// A pure state's entanglement entropy agrees across complementary cuts.
#[test]
fn entanglement_entropy_cut_symmetry_sweep() {
    let layout = SystemLayout::new(vec![("A", 2), ("B", 2), ("C", 3)]).unwrap();
    for idx in 0..200u64 {
        let mut rng = haar::rng_for(0xbead_0006, idx);
        let psi = haar::random_pure_state(&layout, &mut rng);
        let a = qithermo::entanglement::entanglement_entropy(&psi, &["A", "C"]).unwrap();
        let b = qithermo::entanglement::entanglement_entropy(&psi, &["B"]).unwrap();
        assert!((a - b).abs() <= 1e-10);
    }
}
