//! Ready-made scenario and measurement generators for sweeps and tests.
//!
//! Everything here is deterministic given an RNG, so sweep trials replay
//! bit-identically from (seed, index).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::entanglement::{self, EnsembleDecomposition};
use crate::haar;
use crate::hilbert::{PureState, SystemLayout, UnitaryOp};
use crate::linalg::{self, cr, CMat, CVec};
use crate::measurement::{optimal_probe_measurement, probe_basis_from_ensemble, MeasurementModel};
use crate::roof::{eof_convex_roof, RoofBudget};
use crate::thermo::{
    canonical_state, i_e, i_qc, BathSpec, FinalTemperature, ProbedPurification, Step,
    ThermoScenario,
};
use crate::Result;

/// CNOT with the system controlling the probe, read out in the
/// computational basis.
pub fn cnot_measurement(s_label: &str, p_label: &str) -> Result<MeasurementModel> {
    let layout = SystemLayout::new(vec![(s_label, 2), (p_label, 2)])?;
    let cnot = CMat::from_row_slice(
        4,
        4,
        &[
            cr(1.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(1.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(0.0),
            cr(1.0),
            cr(0.0),
            cr(0.0),
            cr(1.0),
            cr(0.0),
        ],
    );
    MeasurementModel::new(
        PureState::basis(SystemLayout::single(p_label, 2), &[0])?,
        UnitaryOp::new(layout, cnot)?,
        computational_projectors(2),
    )
}

/// Rank-1 projectors onto the computational basis of a d-level probe.
pub fn computational_projectors(dim: usize) -> Vec<CMat> {
    (0..dim)
        .map(|k| {
            let mut p = CMat::zeros(dim, dim);
            p[(k, k)] = cr(1.0);
            p
        })
        .collect()
}

/// Rank-1 projectors onto the columns of a unitary.
pub fn basis_projectors(basis: &CMat) -> Vec<CMat> {
    let d = basis.nrows();
    (0..d)
        .map(|k| {
            let col = basis.column(k);
            CMat::from_fn(d, d, |i, j| col[i] * col[j].conj())
        })
        .collect()
}

/// Haar-random probe interaction with a Haar-random rank-1 probe readout.
pub fn random_measurement(
    rng: &mut ChaCha8Rng,
    s_label: &str,
    p_label: &str,
) -> Result<MeasurementModel> {
    let layout = SystemLayout::new(vec![(s_label, 2), (p_label, 2)])?;
    let u_sp = UnitaryOp::new(layout, haar::random_unitary(4, rng))?;
    let basis = haar::random_unitary(2, rng);
    MeasurementModel::new(
        PureState::basis(SystemLayout::single(p_label, 2), &[0])?,
        u_sp,
        basis_projectors(&basis),
    )
}

/// exp(-i H t) on a single factor; commutes with H, so it passes the
/// schedule energy check.
pub fn phase_evolution(h: &CMat, label: &str, time: f64) -> Result<UnitaryOp> {
    let eig = linalg::eig_hermitian(h)?;
    let n = h.nrows();
    let d = CMat::from_fn(n, n, |i, j| {
        if i == j {
            num_complex::Complex64::from_polar(1.0, -eig.values[i] * time)
        } else {
            cr(0.0)
        }
    });
    let u = &eig.vectors * d * eig.vectors.adjoint();
    UnitaryOp::new(SystemLayout::single(label, n), u)
}

/// A random full process: canonical qubit prep (optionally with one
/// decoupled qubit bath), energy-conserving preparation, Haar probe
/// interaction and readout, Haar feedback, energy-conserving closing
/// schedule. The preparation keeps the system-bath state a product, so the
/// entanglement information evaluates through the exact pair formula.
pub fn random_process_scenario(rng: &mut ChaCha8Rng, with_bath: bool) -> Result<ThermoScenario> {
    let h_s = haar::random_hermitian(2, rng).scale(0.8);
    let t = 0.4 + 1.6 * rng.random::<f64>();
    let measurement = random_measurement(rng, "S", "P")?;
    let baths = if with_bath {
        vec![BathSpec {
            label: "B1".into(),
            hamiltonian: haar::random_hermitian(2, rng).scale(0.6),
            temperature: 0.5 + rng.random::<f64>(),
        }]
    } else {
        vec![]
    };
    let prelude = vec![Step::Evolve(phase_evolution(&h_s, "S", 0.37)?)];
    let feedback: Vec<UnitaryOp> = (0..2)
        .map(|_| {
            let layout = if with_bath {
                SystemLayout::new(vec![("S", 2), ("B1", 2)]).unwrap()
            } else {
                SystemLayout::single("S", 2)
            };
            UnitaryOp::new(layout.clone(), haar::random_unitary(layout.dim(), rng)).unwrap()
        })
        .collect();
    let finale = vec![Step::Evolve(phase_evolution(&h_s, "S", 1.21)?)];
    Ok(ThermoScenario {
        system_label: "S".into(),
        h_system: h_s,
        temperature: t,
        baths,
        prelude,
        measurement,
        feedback,
        finale,
        final_temperature: FinalTemperature::SameAsInitial,
        roof: RoofBudget::new(4, 24, 11),
    })
}

/// One trial of the optimal-ensemble probe-basis check: draw a random
/// interaction and prepared state, build an ensemble of the probe-traced
/// state (either from the closed-form optimal measurement's outcomes or from
/// a convex-roof witness), realize it as a probe basis, and compare the
/// resulting QC-mutual information against the entanglement information.
///
/// Returns |I_QC - I_E| and the tolerance appropriate for the ensemble route.
pub fn ensemble_basis_case(
    rng: &mut ChaCha8Rng,
    with_bath: bool,
    use_roof: bool,
    roof_seed: u64,
) -> Result<(f64, f64)> {
    let model = random_measurement(rng, "S", "P")?;
    let s_layout = SystemLayout::single("S", 2);
    let h_s = haar::random_hermitian(2, rng);
    let t = 0.5 + rng.random::<f64>();
    let rho_s = canonical_state(&s_layout, &h_s, t)?;
    let mut rho1 = rho_s.clone();
    let mut bath_labels: Vec<String> = Vec::new();
    if with_bath {
        let h_b = haar::random_hermitian(2, rng);
        let rho_b = canonical_state(&SystemLayout::single("B1", 2), &h_b, t)?;
        rho1 = rho1.tensor(&rho_b)?;
        bath_labels.push("B1".into());
    }
    let probed = ProbedPurification::new(&rho1, "S", &bath_labels, &model)?;
    let (ie, _) = i_e(&probed, &RoofBudget::new(4, 32, roof_seed))?;

    let witness: EnsembleDecomposition = if use_roof {
        let rho_sbr = probed.rho_sbr()?;
        let mut budget = RoofBudget::new(2, 96, roof_seed);
        budget.iterations = 600;
        let (_, w) = eof_convex_roof(&rho_sbr, &["S"], &budget)?;
        w
    } else {
        // outcomes of the closed-form optimal measurement on (P, S, R1)
        let psi_sr = rho_s.purify("R1")?;
        let attached = model.probe_init.tensor(&psi_sr)?;
        let psi_psr = model
            .interaction
            .apply(&attached)?
            .permuted(&["P", "S", "R1"])?;
        let om = optimal_probe_measurement(&psi_psr)?;
        let outcomes = om.outcomes(&psi_psr)?;
        let mut weights = Vec::new();
        let mut members = Vec::new();
        for (p, psi_k) in outcomes {
            let member_sr = pure_from_rank1(&psi_k.density().partial_trace(&["S", "R1"])?)?;
            let member = if with_bath {
                // attach the untouched bath purification factor
                let keep: Vec<&str> = probed
                    .psi_sbr
                    .layout()
                    .labels()
                    .into_iter()
                    .filter(|l| *l != "S" && *l != "R1")
                    .collect();
                let psi_br = pure_from_rank1(&probed.psi_sbr.density().partial_trace(&keep)?)?;
                member_sr.tensor(&psi_br)?
            } else {
                member_sr
            };
            let order: Vec<&str> = probed.psi_sbr.layout().labels();
            weights.push(p);
            members.push(member.permuted(&order)?);
        }
        EnsembleDecomposition { weights, members }
    };

    let basis = probe_basis_from_ensemble(&probed.psi_psbr, &witness, "P")?;
    let model2 = MeasurementModel::new(model.probe_init.clone(), model.interaction.clone(), basis)?;
    let qc = i_qc(&rho1, &model2)?;
    let tol = if use_roof { 1e-4 } else { 1e-6 };
    Ok(((qc.value - ie).abs(), tol))
}

/// Principal eigenvector of a (numerically) rank-1 density matrix as a pure
/// state on the same layout.
pub fn pure_from_rank1(rho: &crate::hilbert::DensityMatrix) -> Result<PureState> {
    let eig = linalg::eig_hermitian(rho.matrix())?;
    if eig.values[0] < 1.0 - 1e-8 {
        return Err(crate::Error::Invalid(format!(
            "state is not rank one (leading weight {})",
            eig.values[0]
        )));
    }
    let v = CVec::from_fn(rho.dim(), |i, _| eig.vectors[(i, 0)]);
    PureState::new(rho.layout().clone(), v)
}

/// Verification figures for one state under the closed-form optimal probe
/// measurement: projector completeness, the Schmidt-spectrum mismatch of the
/// two outcomes, and the worst deviation of an outcome's entanglement from
/// the pair's entanglement of formation.
pub struct OptimalMeasurementChecks {
    pub completeness: f64,
    pub schmidt_mismatch: f64,
    pub entanglement_mismatch: f64,
}

pub fn optimal_measurement_case(psi: &PureState) -> Result<OptimalMeasurementChecks> {
    let om = optimal_probe_measurement(psi)?;
    let completeness = linalg::mat_dist(
        &(&om.operators[0] + &om.operators[1]),
        &CMat::identity(2, 2),
    );
    let e_target = entanglement::eof_2q(&psi.density().partial_trace(&["S", "R1"])?)?;
    let outcomes = om.outcomes(psi)?;
    let mut entanglement_mismatch: f64 = 0.0;
    let mut spectra = Vec::new();
    for (_, psi_k) in &outcomes {
        let pure_sr = pure_from_rank1(&psi_k.density().partial_trace(&["S", "R1"])?)?;
        let e = entanglement::entanglement_entropy(&pure_sr, &["S"])?;
        entanglement_mismatch = entanglement_mismatch.max((e - e_target).abs());
        spectra.push(entanglement::schmidt_spectrum_2q(&pure_sr)?);
    }
    let schmidt_mismatch = if spectra.len() == 2 {
        (spectra[0][0] - spectra[1][0])
            .abs()
            .max((spectra[0][1] - spectra[1][1]).abs())
    } else {
        0.0
    };
    Ok(OptimalMeasurementChecks {
        completeness,
        schmidt_mismatch,
        entanglement_mismatch,
    })
}
