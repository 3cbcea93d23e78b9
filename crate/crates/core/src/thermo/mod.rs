//! Thermodynamic bookkeeping for measurement-feedback processes.
//!
//! Canonical states and free energies, the two information quantities
//! (entanglement information and QC-mutual information), the process
//! pipeline with its ledger and inequality slacks, and the constructive
//! scenarios (optimal-measurement equality, deterministic-measurement gap
//! certificates, and the Szilard-engine extraction ladder).
//!
//! Entropies are in nats, k_B = 1, and all inequalities are evaluated in the
//! form `slack = (final-side) + information - (initial-side) >= 0`.

mod process;
mod szilard;
mod witness;

pub use process::{
    check_inequalities, run_process, BathSpec, FinalTemperature, LedgerFlags, OutcomeRecord,
    ProcessLedger, SlackReport, Step, ThermoScenario,
};
pub use szilard::{
    run_szilard, szilard_ladder, szilard_scenario_small, SzilardLedger, SzilardParams,
};
pub use witness::{
    equality_scenario, feedback_gap_witness, weak_measurement, EqualityScenario, GapCertificate,
};

use crate::entanglement::{eof_2q, shannon_entropy, von_neumann_entropy};
use crate::error::Error;
use crate::hilbert::{DensityMatrix, PureState, SystemLayout};
use crate::linalg::{self, CMat};
use crate::measurement::{embed_operator, MeasurementModel};
use crate::roof::{eof_convex_roof, RoofBudget};
use crate::tol;
use crate::Result;

/// rho = exp(-H/T) / Z on the given layout.
pub fn canonical_state(layout: &SystemLayout, h: &CMat, temperature: f64) -> Result<DensityMatrix> {
    if temperature <= 0.0 {
        return Err(Error::BadTemperature(temperature));
    }
    let eig = linalg::eig_hermitian(h)?;
    let beta = 1.0 / temperature;
    let e_min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig
        .values
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let n = h.nrows();
    let d = CMat::from_fn(n, n, |i, j| {
        if i == j {
            linalg::cr(weights[i] / z)
        } else {
            linalg::cr(0.0)
        }
    });
    let m = &eig.vectors * d * eig.vectors.adjoint();
    DensityMatrix::new(layout.clone(), m)
}

/// F = -T ln Z with Z = tr exp(-H/T), computed stably.
pub fn free_energy(h: &CMat, temperature: f64) -> Result<f64> {
    if temperature <= 0.0 {
        return Err(Error::BadTemperature(temperature));
    }
    let eig = linalg::eig_hermitian(h)?;
    let beta = 1.0 / temperature;
    let e_min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let z_shifted: f64 = eig
        .values
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .sum();
    Ok(e_min - temperature * z_shifted.ln())
}

/// QC-mutual information of a measurement on a state, with the residual
/// between its two equivalent forms.
#[derive(Debug, Clone)]
pub struct QcMutualInfo {
    /// S(rho) + H{p} + sum_k tr[sqrt(D_k) rho sqrt(D_k) ln sqrt(D_k) rho sqrt(D_k)]
    pub value: f64,
    /// S(rho) - sum_k p_k S(sqrt(D_k) rho sqrt(D_k) / p_k)
    pub cross: f64,
    pub probabilities: Vec<f64>,
}

impl QcMutualInfo {
    pub fn residual(&self) -> f64 {
        (self.value - self.cross).abs()
    }
}

/// Evaluate the QC-mutual information of `model` on `rho` (the pre-probe
/// state of system plus baths; the probe is already integrated out through
/// the effects). Outcomes with negligible probability contribute nothing.
pub fn i_qc(rho: &DensityMatrix, model: &MeasurementModel) -> Result<QcMutualInfo> {
    let labels = model.system_labels();
    let s_rho = von_neumann_entropy(rho)?;
    let mut probabilities = Vec::with_capacity(model.num_outcomes());
    let mut form_a_sum = 0.0;
    let mut form_b_sum = 0.0;
    let mut total_effect = CMat::zeros(rho.dim(), rho.dim());
    for effect in &model.effects {
        let d_full = embed_operator(effect, &labels, rho.layout())?;
        total_effect += &d_full;
        let sqrt_d = linalg::matrix_sqrt_psd(&d_full)?;
        let x = &sqrt_d * rho.matrix() * &sqrt_d;
        let eig = linalg::eig_hermitian(&x)?;
        let spec = linalg::psd_spectrum(&eig)?;
        let p: f64 = spec.iter().sum();
        probabilities.push(p.max(0.0));
        if p <= tol::EPS_PROB {
            continue;
        }
        // tr[X ln X] and p S(X/p) from the same spectrum
        let tr_x_ln_x: f64 = spec
            .iter()
            .filter(|&&v| v > tol::EPS_RANK)
            .map(|&v| v * v.ln())
            .sum();
        form_a_sum += tr_x_ln_x;
        let s_post: f64 = spec
            .iter()
            .filter(|&&v| v > tol::EPS_RANK)
            .map(|&v| -(v / p) * (v / p).ln())
            .sum();
        form_b_sum += p * s_post;
    }
    let defect = linalg::mat_dist(&total_effect, &CMat::identity(rho.dim(), rho.dim()));
    if defect > 10.0 * tol::EPS_UNITARY {
        return Err(Error::IncompleteProjectors(defect));
    }
    let h_p = shannon_entropy(&probabilities);
    let value = s_rho + h_p + form_a_sum;
    let cross = s_rho - form_b_sum;
    Ok(QcMutualInfo {
        value,
        cross,
        probabilities,
    })
}

/// Purification of the pre-measurement state together with the probed state,
/// carrying the label bookkeeping every information quantity needs.
#[derive(Debug, Clone)]
pub struct ProbedPurification {
    /// Purification of rho_1 over the reference factors.
    pub psi_sbr: PureState,
    /// Probe attached and coupled: U_SP (|0_P> x psi_sbr).
    pub psi_psbr: PureState,
    pub system_label: String,
    pub bath_labels: Vec<String>,
    pub reference_labels: Vec<String>,
    /// True when psi_sbr factors as (system, R1) x (baths, R2).
    pub product_split: bool,
}

impl ProbedPurification {
    /// Purify `rho_1` (on system plus baths) and couple the probe.
    ///
    /// When the state is a product of a system part and a bath part, the two
    /// are purified separately (references R1 and R2) so the exact pair
    /// formula applies downstream; otherwise a single global reference R1 is
    /// attached.
    pub fn new(
        rho_1: &DensityMatrix,
        system_label: &str,
        bath_labels: &[String],
        model: &MeasurementModel,
    ) -> Result<Self> {
        let mut product_split = false;
        let psi_sbr = if bath_labels.is_empty() {
            rho_1.purify("R1")?
        } else {
            let bath_refs: Vec<&str> = bath_labels.iter().map(|s| s.as_str()).collect();
            let rho_s = rho_1.partial_trace(&[system_label])?;
            let rho_b = rho_1.partial_trace(&bath_refs)?;
            let product = rho_s.tensor(&rho_b)?;
            // compare in a common factor order
            let order: Vec<&str> = rho_1.layout().labels();
            let product_ordered = product.permuted(&order)?;
            if linalg::mat_dist(product_ordered.matrix(), rho_1.matrix()) <= 1e-10 {
                product_split = true;
                let psi_s = rho_s.purify("R1")?;
                let psi_b = rho_b.purify("R2")?;
                psi_s.tensor(&psi_b)?
            } else {
                rho_1.purify("R1")?
            }
        };
        let reference_labels: Vec<String> = psi_sbr
            .layout()
            .labels()
            .iter()
            .filter(|l| **l == "R1" || **l == "R2")
            .map(|l| l.to_string())
            .collect();
        let attached = model.probe_init.tensor(&psi_sbr)?;
        let psi_psbr = model.interaction.apply(&attached)?;
        Ok(Self {
            psi_sbr,
            psi_psbr,
            system_label: system_label.to_string(),
            bath_labels: bath_labels.to_vec(),
            reference_labels,
            product_split,
        })
    }

    /// The probe-traced state on system, baths and references.
    pub fn rho_sbr(&self) -> Result<DensityMatrix> {
        let keep: Vec<&str> = self.psi_sbr.layout().labels();
        self.psi_psbr.density().partial_trace(&keep)
    }
}

/// Entanglement information: the drop in entanglement of formation between
/// the system-plus-baths side and the reference caused by the probe coupling.
///
/// Returns the value together with the name of the evaluation route taken
/// (`"two-qubit"`, `"product-split"` or `"convex-roof"`).
pub fn i_e(probed: &ProbedPurification, roof: &RoofBudget) -> Result<(f64, &'static str)> {
    let rho_1_labels: Vec<String> = {
        let mut v = vec![probed.system_label.clone()];
        v.extend(probed.bath_labels.iter().cloned());
        v
    };
    let rho_1_refs: Vec<&str> = rho_1_labels.iter().map(|s| s.as_str()).collect();
    let rho_1 = probed.psi_sbr.density().partial_trace(&rho_1_refs)?;
    let s_rho1 = von_neumann_entropy(&rho_1)?;

    let r1_dim = probed.psi_sbr.layout().dim_of("R1").unwrap_or(1);
    let s_dim = probed.psi_sbr.layout().dim_of(&probed.system_label)?;

    // Case: trivial reference (rho_1 pure) -- nothing to transfer.
    let ref_total: usize = probed
        .reference_labels
        .iter()
        .map(|l| probed.psi_sbr.layout().dim_of(l).unwrap())
        .product();
    if ref_total <= 1 {
        return Ok((0.0, "two-qubit"));
    }

    if probed.bath_labels.is_empty() && s_dim == 2 && r1_dim == 2 {
        // exact Wootters on the (S, R1) pair
        let rho_sr = probed
            .psi_psbr
            .density()
            .partial_trace(&[probed.system_label.as_str(), "R1"])?;
        let ef = eof_2q(&rho_sr)?;
        let value = s_rho1 - ef;
        check_ie_bounds(value, s_rho1, 1e-9)?;
        return Ok((value, "two-qubit"));
    }

    if probed.product_split && s_dim == 2 && r1_dim == 2 {
        // E_F(rho_SBR) = E_F(rho_SR1) + E(psi_BR2); the bath-side pure-state
        // term equals S(rho_B) and cancels against the bath part of S(rho_1).
        let rho_sr = probed
            .psi_psbr
            .density()
            .partial_trace(&[probed.system_label.as_str(), "R1"])?;
        let ef_sr = eof_2q(&rho_sr)?;
        let bath_refs: Vec<&str> = probed.bath_labels.iter().map(|s| s.as_str()).collect();
        let rho_b = probed.psi_sbr.density().partial_trace(&bath_refs)?;
        let e_br2 = von_neumann_entropy(&rho_b)?;
        let value = s_rho1 - (ef_sr + e_br2);
        check_ie_bounds(value, s_rho1, 1e-9)?;
        return Ok((value, "product-split"));
    }

    // General route: convex roof across (system + baths) vs references.
    let rho_sbr = probed.rho_sbr()?;
    let mut cut: Vec<&str> = vec![probed.system_label.as_str()];
    cut.extend(probed.bath_labels.iter().map(|s| s.as_str()));
    let (ef, _witness) = eof_convex_roof(&rho_sbr, &cut, roof)?;
    let value = s_rho1 - ef;
    check_ie_bounds(value, s_rho1, 1e-3)?;
    Ok((value.max(0.0), "convex-roof"))
}

fn check_ie_bounds(value: f64, s_rho1: f64, slack: f64) -> Result<()> {
    if value < -slack || value > s_rho1 + slack.max(1e-9) {
        return Err(Error::InvariantViolation(format!(
            "entanglement information {value} outside [0, {s_rho1}]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar;
    use crate::hilbert::{PureState, UnitaryOp};
    use crate::linalg::cr;

    const LN2: f64 = std::f64::consts::LN_2;

    fn qubit(l: &str) -> SystemLayout {
        SystemLayout::single(l, 2)
    }

    fn sp_layout() -> SystemLayout {
        SystemLayout::new(vec![("S", 2), ("P", 2)]).unwrap()
    }

    fn probe_zero() -> PureState {
        PureState::basis(qubit("P"), &[0]).unwrap()
    }

    fn computational_projectors() -> Vec<CMat> {
        let mut p0 = CMat::zeros(2, 2);
        p0[(0, 0)] = cr(1.0);
        let mut p1 = CMat::zeros(2, 2);
        p1[(1, 1)] = cr(1.0);
        vec![p0, p1]
    }

    fn cnot_sp() -> UnitaryOp {
        let m = CMat::from_row_slice(
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
        UnitaryOp::new(sp_layout(), m).unwrap()
    }

    #[test]
    fn canonical_flat_hamiltonian() {
        let h = CMat::zeros(2, 2);
        let rho = canonical_state(&qubit("S"), &h, 1.3).unwrap();
        assert!(linalg::mat_dist(rho.matrix(), &CMat::identity(2, 2).scale(0.5)) < 1e-14);
        assert!((free_energy(&h, 1.3).unwrap() + 1.3 * LN2).abs() < 1e-12);
    }

    #[test]
    fn canonical_low_temperature_is_ground_projector() {
        let h = CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)]);
        let rho = canonical_state(&qubit("S"), &h, 1e-6).unwrap();
        let mut want = CMat::zeros(2, 2);
        want[(0, 0)] = cr(1.0);
        assert!(linalg::mat_dist(rho.matrix(), &want) < 1e-6);
    }

    #[test]
    fn canonical_two_level_weights() {
        let eps = 0.7;
        let t = 0.9;
        let h = CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(eps)]);
        let rho = canonical_state(&qubit("S"), &h, t).unwrap();
        let p_exc = 1.0 / (1.0 + (eps / t).exp());
        assert!((rho.matrix()[(1, 1)].re - p_exc).abs() < 1e-12);
        assert!((rho.matrix()[(0, 0)].re - (1.0 - p_exc)).abs() < 1e-12);
    }

    #[test]
    fn free_energy_consistency() {
        // F = U - T S for the canonical state
        let mut rng = haar::rng_for(51, 0);
        for _ in 0..20 {
            let h = haar::random_hermitian(3, &mut rng);
            let t = 0.5 + 2.0 * rand::Rng::random::<f64>(&mut rng);
            let layout = SystemLayout::single("S", 3);
            let rho = canonical_state(&layout, &h, t).unwrap();
            let u = rho.expectation(&h);
            let s = von_neumann_entropy(&rho).unwrap();
            let f = free_energy(&h, t).unwrap();
            assert!((f - (u - t * s)).abs() < 1e-9, "F = U - TS");
        }
    }

    #[test]
    fn iqc_identity_interaction_is_zero() {
        let id = UnitaryOp::identity(sp_layout());
        let m = MeasurementModel::new(probe_zero(), id, computational_projectors()).unwrap();
        let rho = haar::random_density_matrix(&qubit("S"), 2, &mut haar::rng_for(52, 0));
        let q = i_qc(&rho, &m).unwrap();
        assert!(q.value.abs() < 1e-10, "no interaction, no information");
        assert!(q.residual() < 1e-12);
    }

    #[test]
    fn iqc_szilard_cnot_is_ln2() {
        let m = MeasurementModel::new(probe_zero(), cnot_sp(), computational_projectors()).unwrap();
        let half = DensityMatrix::new(qubit("S"), CMat::identity(2, 2).scale(0.5)).unwrap();
        let q = i_qc(&half, &m).unwrap();
        assert!((q.value - LN2).abs() < 1e-12);
        assert!(q.residual() < 1e-12);
    }

    #[test]
    fn iqc_bounds_random() {
        let mut rng = haar::rng_for(53, 0);
        for _ in 0..100 {
            let u = UnitaryOp::new(sp_layout(), haar::random_unitary(4, &mut rng)).unwrap();
            let basis = haar::random_unitary(2, &mut rng);
            let projs: Vec<CMat> = (0..2)
                .map(|k| {
                    let col = basis.column(k);
                    CMat::from_fn(2, 2, |i, j| col[i] * col[j].conj())
                })
                .collect();
            let m = MeasurementModel::new(probe_zero(), u, projs).unwrap();
            let rho = haar::random_density_matrix(&qubit("S"), 2, &mut rng);
            let q = i_qc(&rho, &m).unwrap();
            let s = von_neumann_entropy(&rho).unwrap();
            let h = shannon_entropy(&q.probabilities);
            assert!(q.value >= -1e-9);
            assert!(q.value <= s.min(h) + 1e-9, "I_QC <= min(S, H)");
            assert!(q.residual() <= 1e-10);
        }
    }

    #[test]
    fn ie_identity_interaction_is_zero() {
        let id = UnitaryOp::identity(sp_layout());
        let m = MeasurementModel::new(probe_zero(), id, computational_projectors()).unwrap();
        let rho = haar::random_density_matrix(&qubit("S"), 2, &mut haar::rng_for(54, 0));
        let probed = ProbedPurification::new(&rho, "S", &[], &m).unwrap();
        let (v, route) = i_e(&probed, &RoofBudget::new(4, 16, 1)).unwrap();
        assert!(v.abs() < 1e-10);
        assert_eq!(route, "two-qubit");
    }

    #[test]
    fn ie_szilard_cnot_is_ln2() {
        let m = MeasurementModel::new(probe_zero(), cnot_sp(), computational_projectors()).unwrap();
        let half = DensityMatrix::new(qubit("S"), CMat::identity(2, 2).scale(0.5)).unwrap();
        let probed = ProbedPurification::new(&half, "S", &[], &m).unwrap();
        let (v, _) = i_e(&probed, &RoofBudget::new(4, 16, 1)).unwrap();
        assert!((v - LN2).abs() < 1e-10);
    }

    #[test]
    fn lemma1_random_probe_bases() {
        // I_QC <= I_E for any interpretation of the same interaction
        let mut rng = haar::rng_for(55, 0);
        let half_layout = qubit("S");
        for _ in 0..200 {
            let u = UnitaryOp::new(sp_layout(), haar::random_unitary(4, &mut rng)).unwrap();
            let rho = haar::random_density_matrix(&half_layout, 2, &mut rng);
            let basis = haar::random_unitary(2, &mut rng);
            let projs: Vec<CMat> = (0..2)
                .map(|k| {
                    let col = basis.column(k);
                    CMat::from_fn(2, 2, |i, j| col[i] * col[j].conj())
                })
                .collect();
            let m = MeasurementModel::new(probe_zero(), u, projs).unwrap();
            let probed = ProbedPurification::new(&rho, "S", &[], &m).unwrap();
            let (ie, _) = i_e(&probed, &RoofBudget::new(4, 16, 1)).unwrap();
            let qc = i_qc(&rho, &m).unwrap();
            assert!(
                qc.value <= ie + 1e-7,
                "I_QC {} must not exceed I_E {}",
                qc.value,
                ie
            );
        }
    }
}
