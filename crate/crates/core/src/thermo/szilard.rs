//! Szilard-engine preset: measure a degenerate two-level system, steer it to
//! the ground state, and extract work through a quench ladder against a
//! sequence of finite bath units.
//!
//! Each rung couples the system resonantly to one fresh d-level bath unit
//! whose ladder spacing matches the current gap; the coupling is the chain
//! permutation |1,k> <-> |0,k+1|, which commutes with the joint Hamiltonian
//! exactly, so work is booked only at the quenches. Contacting every unit
//! once keeps the live Hilbert space at 2 x d while remaining an exact
//! simulation of the full multi-bath process. Rung energies come from a
//! deterministic coordinate-descent placement, which converges to the
//! quasi-static bound from below as the number of rungs and the unit
//! dimension grow.

use crate::error::Error;
use crate::hilbert::{DensityMatrix, SystemLayout, UnitaryOp};
use crate::linalg::{cr, CMat};
use crate::roof::RoofBudget;
use crate::scenarios::cnot_measurement;
use crate::thermo::process::{BathSpec, FinalTemperature, Step, ThermoScenario};
use crate::thermo::{i_e, i_qc, ProbedPurification};
use crate::Result;

/// Parameters of the extraction ladder.
#[derive(Debug, Clone, Copy)]
pub struct SzilardParams {
    pub temperature: f64,
    /// Number of ladder rungs (one fresh bath unit per rung).
    pub steps: usize,
    /// Dimension of each bath unit (a d-level ladder resonant with its rung).
    pub unit_dim: usize,
}

impl SzilardParams {
    pub fn new(temperature: f64, steps: usize, unit_dim: usize) -> Self {
        Self {
            temperature,
            steps,
            unit_dim,
        }
    }
}

/// Everything the Szilard run books. Scalar-only: the multi-unit bath is
/// simulated one unit at a time, so no global state is materialized.
#[derive(Debug, Clone)]
pub struct SzilardLedger {
    pub params: SzilardParams,
    /// Work extracted over the quench ladder.
    pub w_ext: f64,
    /// The quasi-static target T ln 2.
    pub w_target: f64,
    /// Heat drawn from each bath unit.
    pub heats: Vec<f64>,
    pub i_e: f64,
    pub i_qc: f64,
    pub i_qc_residual: f64,
    pub entropy_i: f64,
    /// -tr[rho_f ln rho_f^can]
    pub final_reference_term: f64,
    pub slack_entanglement: f64,
    pub slack_qc: f64,
    pub slack_conventional: f64,
    /// -dF + T I_E - W_ext
    pub slack_isothermal_work: f64,
    /// W_ext + dU_S - sum Q
    pub energy_residual: f64,
    /// Frobenius distance of the final system state from I/2.
    pub equilibrium_distance: f64,
}

/// Post-contact population of the system's upper level after the chain
/// permutation against a fresh thermal unit.
fn chain_contact(p: f64, unit_q: &[f64]) -> (f64, Vec<f64>) {
    let d = unit_q.len();
    // joint populations before: P(s, k) = p_s q_k
    // permutation (1, k) <-> (0, k+1) for k = 0..d-2
    let p0 = 1.0 - p;
    let mut unit_after = vec![0.0f64; d];
    let mut p1_after = 0.0;
    // P'(0, 0) = P(0, 0)
    unit_after[0] += p0 * unit_q[0];
    for m in 1..d {
        // P'(0, m) = P(1, m-1)
        unit_after[m] += p * unit_q[m - 1];
    }
    for k in 0..d - 1 {
        // P'(1, k) = P(0, k+1)
        let w = p0 * unit_q[k + 1];
        unit_after[k] += w;
        p1_after += w;
    }
    // P'(1, d-1) = P(1, d-1)
    let stay = p * unit_q[d - 1];
    unit_after[d - 1] += stay;
    p1_after += stay;
    (p1_after, unit_after)
}

fn thermal_ladder_populations(d: usize, spacing: f64, temperature: f64) -> Vec<f64> {
    let x = (-spacing / temperature).exp();
    let mut q = Vec::with_capacity(d);
    let mut xk = 1.0;
    let mut z = 0.0;
    for _ in 0..d {
        q.push(xk);
        z += xk;
        xk *= x;
    }
    for v in &mut q {
        *v /= z;
    }
    q
}

/// Work of a rung schedule under the exact population recursion.
fn ladder_work(energies: &[f64], d: usize, temperature: f64) -> f64 {
    let mut p = 0.0;
    let mut w = 0.0;
    for (j, &e) in energies.iter().enumerate() {
        let q = thermal_ladder_populations(d, e, temperature);
        let (p_new, _) = chain_contact(p, &q);
        p = p_new;
        let e_next = if j + 1 < energies.len() {
            energies[j + 1]
        } else {
            0.0
        };
        w += p * (e - e_next);
    }
    w
}

/// Deterministic rung placement: start from a power-law profile and refine
/// by coordinate descent on the exact work functional.
pub fn szilard_ladder(params: &SzilardParams) -> Vec<f64> {
    let n = params.steps;
    let t = params.temperature;
    let d = params.unit_dim;
    let mut energies: Vec<f64> = (0..n)
        .map(|j| {
            let u = (n - j) as f64 / n as f64;
            6.5 * t * u.powf(1.35)
        })
        .collect();
    let mut best = ladder_work(&energies, d, t);
    let mut step = 0.3 * t;
    for _ in 0..200 {
        let mut improved = false;
        for k in 0..n {
            for dir in [1.0f64, -1.0] {
                let old = energies[k];
                let lo = if k + 1 < n { energies[k + 1] } else { 0.0 };
                let hi = if k > 0 {
                    energies[k - 1]
                } else {
                    f64::INFINITY
                };
                let cand = (old + dir * step).clamp(lo, hi.min(old + step));
                if cand == old {
                    continue;
                }
                energies[k] = cand;
                let w = ladder_work(&energies, d, t);
                if w > best {
                    best = w;
                    improved = true;
                } else {
                    energies[k] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-7 * t {
                break;
            }
        }
    }
    energies
}

/// Run the full Szilard preset: measurement and feedback on the degenerate
/// system, then the extraction ladder against `steps` fresh units.
pub fn run_szilard(params: &SzilardParams) -> Result<SzilardLedger> {
    if params.steps == 0 || params.unit_dim < 2 {
        return Err(Error::Invalid(
            "the ladder needs rungs and units of dimension >= 2".into(),
        ));
    }
    let t = params.temperature;
    if t <= 0.0 {
        return Err(Error::BadTemperature(t));
    }
    let ln2 = std::f64::consts::LN_2;

    // measurement and feedback on the degenerate system
    let s_layout = SystemLayout::single("S", 2);
    let rho_s = DensityMatrix::new(s_layout.clone(), CMat::identity(2, 2).scale(0.5))?;
    let model = cnot_measurement("S", "P")?;
    let probed = ProbedPurification::new(&rho_s, "S", &[], &model)?;
    let (ie_value, _) = i_e(&probed, &RoofBudget::new(4, 16, 1))?;
    let qc = i_qc(&rho_s, &model)?;
    // both outcomes steer to |0><0| under the conditional flip, so the
    // extraction phase starts from the pure ground state deterministically
    let mut p_upper = 0.0f64;

    // extraction ladder
    let energies = szilard_ladder(params);
    let mut w_ext = 0.0;
    let mut heats = Vec::with_capacity(params.steps + 1);
    let mut entropy_units = 0.0;
    let mut bath_reference_sum = 0.0;
    // raise the empty level: the state has no weight there, so no work
    for (j, &e) in energies.iter().enumerate() {
        let q = thermal_ladder_populations(params.unit_dim, e, t);
        let u_init: f64 = q.iter().enumerate().map(|(k, &w)| w * k as f64 * e).sum();
        let s_unit: f64 = q.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.ln()).sum();
        entropy_units += s_unit;
        let f_unit = u_init - t * s_unit;
        let (p_new, unit_after) = chain_contact(p_upper, &q);
        p_upper = p_new;
        let u_final: f64 = unit_after
            .iter()
            .enumerate()
            .map(|(k, &w)| w * k as f64 * e)
            .sum();
        heats.push(u_init - u_final);
        bath_reference_sum += (u_final - f_unit) / t;
        let e_next = if j + 1 < energies.len() {
            energies[j + 1]
        } else {
            0.0
        };
        w_ext += p_upper * (e - e_next);
    }
    // final gap-0 unit: restore the exact maximally mixed system state
    {
        let s_unit = ln2;
        entropy_units += s_unit;
        let f_unit = -t * s_unit;
        heats.push(0.0);
        bath_reference_sum += (0.0 - f_unit) / t;
        p_upper = 0.5;
    }

    // ledger scalars
    let entropy_i = ln2 + entropy_units;
    let u_s_final = 0.0; // degenerate final Hamiltonian
    let f_s_final = -t * ln2;
    let final_reference_term = (u_s_final - f_s_final) / t + bath_reference_sum;
    let slack_conventional = final_reference_term - entropy_i;
    let slack_entanglement = slack_conventional + ie_value;
    let slack_qc = slack_conventional + qc.value;
    let q_total: f64 = heats.iter().sum();
    let energy_residual = w_ext + 0.0 - q_total;
    let equilibrium_distance = ((p_upper - 0.5f64).powi(2) * 2.0).sqrt();

    Ok(SzilardLedger {
        params: *params,
        w_ext,
        w_target: t * ln2,
        heats,
        i_e: ie_value,
        i_qc: qc.value,
        i_qc_residual: qc.residual(),
        entropy_i,
        final_reference_term,
        slack_entanglement,
        slack_qc,
        slack_conventional,
        slack_isothermal_work: t * ie_value - w_ext,
        energy_residual,
        equilibrium_distance,
    })
}

/// The same preset as an explicit [`ThermoScenario`], for small instances
/// where the whole multi-unit bath fits in memory. Used to cross-check the
/// streamed runner against the generic pipeline.
pub fn szilard_scenario_small(params: &SzilardParams) -> Result<ThermoScenario> {
    if params.steps > 3 || params.unit_dim > 4 {
        return Err(Error::Invalid(
            "explicit multi-unit scenarios are limited to tiny ladders".into(),
        ));
    }
    let t = params.temperature;
    let d = params.unit_dim;
    let energies = szilard_ladder(params);
    let mut baths = Vec::new();
    for (j, &e) in energies.iter().enumerate() {
        let h = CMat::from_fn(
            d,
            d,
            |i, jj| {
                if i == jj {
                    cr(i as f64 * e)
                } else {
                    cr(0.0)
                }
            },
        );
        baths.push(BathSpec {
            label: format!("B{}", j + 1),
            hamiltonian: h,
            temperature: t,
        });
    }
    baths.push(BathSpec {
        label: "Bz".into(),
        hamiltonian: CMat::zeros(2, 2),
        temperature: t,
    });

    let mut finale: Vec<Step> = Vec::new();
    let gap_h = |e: f64| CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(e)]);
    for (j, &e) in energies.iter().enumerate() {
        finale.push(Step::QuenchSystem(gap_h(e)));
        finale.push(Step::Evolve(chain_permutation_unitary(
            "S",
            &format!("B{}", j + 1),
            d,
        )?));
        let e_next = if j + 1 < energies.len() {
            energies[j + 1]
        } else {
            0.0
        };
        let _ = e_next;
    }
    finale.push(Step::QuenchSystem(CMat::zeros(2, 2)));
    finale.push(Step::Evolve(chain_permutation_unitary("S", "Bz", 2)?));

    let x = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
    Ok(ThermoScenario {
        system_label: "S".into(),
        h_system: CMat::zeros(2, 2),
        temperature: t,
        baths,
        prelude: vec![],
        measurement: cnot_measurement("S", "P")?,
        feedback: vec![
            UnitaryOp::identity(SystemLayout::single("S", 2)),
            UnitaryOp::new(SystemLayout::single("S", 2), x)?,
        ],
        finale,
        final_temperature: FinalTemperature::SameAsInitial,
        roof: RoofBudget::new(4, 16, 19),
    })
}

/// Permutation |1, k> <-> |0, k+1> on system x unit; commutes with the
/// resonant joint Hamiltonian.
fn chain_permutation_unitary(s_label: &str, unit_label: &str, d: usize) -> Result<UnitaryOp> {
    let layout = SystemLayout::new(vec![(s_label, 2), (unit_label, d)])?;
    let n = 2 * d;
    let mut m = CMat::zeros(n, n);
    let idx = |s: usize, k: usize| s * d + k;
    let mut moved = vec![false; n];
    for k in 0..d - 1 {
        let a = idx(1, k);
        let b = idx(0, k + 1);
        m[(a, b)] = cr(1.0);
        m[(b, a)] = cr(1.0);
        moved[a] = true;
        moved[b] = true;
    }
    for i in 0..n {
        if !moved[i] {
            m[(i, i)] = cr(1.0);
        }
    }
    UnitaryOp::new(layout, m)
}
