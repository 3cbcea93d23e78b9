//! Constructive scenarios: the optimal-measurement equality construction for
//! two-level systems, and the gap certificate showing that non-deterministic
//! measurements cannot saturate the QC-mutual-information bound.

use num_complex::Complex64;

use crate::entanglement::{entanglement_entropy, relative_entropy};
use crate::error::Error;
use crate::hilbert::{DensityMatrix, PureState, SystemLayout, UnitaryOp};
use crate::linalg::{self, cr, CMat};
use crate::measurement::{optimal_probe_measurement, MeasurementModel, OptimalMeasurement};
use crate::roof::RoofBudget;
use crate::thermo::canonical_state;
use crate::thermo::process::{run_process, FinalTemperature, ProcessLedger, Step, ThermoScenario};
use crate::Result;

/// The assembled equality scenario: optimal probe readout, aligning
/// feedback, and a final Hamiltonian whose canonical state matches the
/// steered spectrum.
#[derive(Debug, Clone)]
pub struct EqualityScenario {
    pub scenario: ThermoScenario,
    pub measurement: OptimalMeasurement,
    /// Entanglement carried by each retained outcome across the
    /// system-reference cut.
    pub outcome_entanglement: f64,
    /// True when the outcomes are product states; the canonical-matching
    /// step then degenerates to the zero-temperature limit.
    pub zero_entanglement_outcome: bool,
}

/// Build and run the equality construction for a two-level system at
/// temperature `t` under the given probe interaction: optimal probe
/// measurement, local-unitary feedback onto a common state, and a solved
/// final Hamiltonian; the resulting process saturates the
/// entanglement-information second law.
pub fn equality_scenario(t: f64, u_sp: &UnitaryOp) -> Result<(EqualityScenario, ProcessLedger)> {
    if u_sp.layout().dim() != 4 {
        return Err(Error::Invalid(
            "the probe interaction must act on two qubits".into(),
        ));
    }
    let labels = u_sp.layout().labels();
    let (s_label, p_label) = (labels[0].to_string(), labels[1].to_string());
    let s_layout = SystemLayout::single(&s_label, 2);
    let h_s = CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)]);

    // pre-measurement system state and its purification
    let rho_s = canonical_state(&s_layout, &h_s, t)?;
    let psi_sr = rho_s.purify("R1")?;
    let probe_init = PureState::basis(SystemLayout::single(&p_label, 2), &[0])?;
    let attached = probe_init.tensor(&psi_sr)?;
    let psi_psr = u_sp
        .apply(&attached)?
        .permuted(&[p_label.as_str(), s_label.as_str(), "R1"])?;

    // closed-form optimal probe measurement and its outcomes
    let om = optimal_probe_measurement(&psi_psr)?;
    let outcomes = om.outcomes(&psi_psr)?;
    if outcomes.is_empty() {
        return Err(Error::Invalid("no outcome carries probability".into()));
    }
    let mut outcome_entanglement = 0.0;
    for (_, psi_k) in &outcomes {
        outcome_entanglement = entanglement_entropy(psi_k, &[s_label.as_str()])?;
    }
    let zero_entanglement_outcome = outcome_entanglement < 1e-9;

    // feedback: rotate each outcome's system state into the computational
    // basis with eigenvalues descending, so every branch lands on the same
    // diagonal state
    let mut spectrum_mu = 1.0f64;
    let mut feedback: Vec<UnitaryOp> = om
        .operators
        .iter()
        .map(|_| UnitaryOp::identity(s_layout.clone()))
        .collect();
    let mut outcome_iter = outcomes.iter();
    for (k, p) in probabilities_of(&om, &psi_psr)?.iter().enumerate() {
        if *p <= crate::tol::EPS_PROB {
            continue;
        }
        let (_, psi_k) = outcome_iter
            .next()
            .ok_or_else(|| Error::Invalid("outcome bookkeeping".into()))?;
        let rho2_s = psi_k.density().partial_trace(&[s_label.as_str()])?;
        let eig = linalg::eig_hermitian(rho2_s.matrix())?;
        spectrum_mu = eig.values[0].clamp(0.5, 1.0);
        feedback[k] = UnitaryOp::new(s_layout.clone(), eig.vectors.adjoint())?;
    }

    // final Hamiltonian whose canonical state at T' = t carries the steered
    // spectrum; outcomes with no entanglement leave a pure state and the
    // zero-temperature reference takes over
    let (h_final, final_temperature) = if spectrum_mu >= 1.0 - 1e-12 {
        (
            CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)]),
            FinalTemperature::MatchSpectrum,
        )
    } else {
        let gap = t * (spectrum_mu / (1.0 - spectrum_mu)).ln();
        (
            CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(gap)]),
            FinalTemperature::Fixed(t),
        )
    };

    let measurement = MeasurementModel::new(probe_init, u_sp.clone(), om.operators.to_vec())?;
    let scenario = ThermoScenario {
        system_label: s_label,
        h_system: h_s,
        temperature: t,
        baths: vec![],
        prelude: vec![],
        measurement,
        feedback,
        finale: vec![Step::QuenchSystem(h_final)],
        final_temperature,
        roof: RoofBudget::new(4, 32, 17),
    };
    let ledger = run_process(&scenario)?;
    Ok((
        EqualityScenario {
            scenario,
            measurement: om,
            outcome_entanglement,
            zero_entanglement_outcome,
        },
        ledger,
    ))
}

fn probabilities_of(om: &OptimalMeasurement, psi: &PureState) -> Result<Vec<f64>> {
    let probe_label = psi.layout().labels()[0].to_string();
    let mut out = Vec::new();
    for op in &om.operators {
        let full = crate::measurement::embed_operator(op, &[probe_label.as_str()], psi.layout())?;
        let amp = &full * psi.amplitudes();
        out.push(amp.norm_squared());
    }
    Ok(out)
}

/// Certificate produced by the feedback-gap search for a two-outcome
/// measurement on a qubit.
#[derive(Debug, Clone)]
pub struct GapCertificate {
    /// True when the normalized post-measurement states share a spectrum
    /// (are unitarily equivalent), so feedback can merge them losslessly.
    pub deterministic: bool,
    /// Minimum over searched feedbacks of the mixing-entropy excess
    /// S(rho_3) - sum_k p_k S(rho_2^(k)); strictly positive certifies that
    /// the QC-bound cannot be saturated.
    pub gap: f64,
    /// Largest deviation of the mixing-entropy identity across all searched
    /// candidates.
    pub identity_residual_max: f64,
    /// Euler angles (z-y-z) of the best second-branch feedback.
    pub best_angles: [f64; 3],
    pub probabilities: [f64; 2],
}

fn euler_zyz(a: f64, b: f64, g: f64) -> CMat {
    let rz = |x: f64| {
        CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::from_polar(1.0, -x / 2.0),
                cr(0.0),
                cr(0.0),
                Complex64::from_polar(1.0, x / 2.0),
            ],
        )
    };
    let ry = |x: f64| {
        CMat::from_row_slice(
            2,
            2,
            &[
                cr((x / 2.0).cos()),
                cr(-(x / 2.0).sin()),
                cr((x / 2.0).sin()),
                cr((x / 2.0).cos()),
            ],
        )
    };
    rz(a) * ry(b) * rz(g)
}

/// Search the feedback gap for a two-outcome measurement on a qubit state.
///
/// The first branch's feedback is fixed to the identity (a global unitary on
/// both branches cancels inside the relative entropies); the second branch
/// is scanned over a z-y-z Euler grid and refined with a Nelder-Mead
/// simplex. Every candidate is checked against the exact mixing-entropy
/// identity.
pub fn feedback_gap_witness(
    model: &MeasurementModel,
    rho_1: &DensityMatrix,
) -> Result<GapCertificate> {
    if model.num_outcomes() != 2 || rho_1.dim() != 2 {
        return Err(Error::Invalid(
            "the gap certificate is defined for two-outcome qubit measurements".into(),
        ));
    }
    // normalized post-measurement states
    let mut posts: Vec<CMat> = Vec::new();
    let mut probs = [0.0f64; 2];
    for (k, group) in model.kraus.iter().enumerate() {
        let mut num = CMat::zeros(2, 2);
        for m in group {
            num += m * rho_1.matrix() * m.adjoint();
        }
        let p = num.trace().re;
        probs[k] = p;
        if p <= crate::tol::EPS_PROB {
            return Err(Error::Invalid("an outcome carries no probability".into()));
        }
        posts.push(num.scale(1.0 / p));
    }
    let spectra: Vec<(f64, f64)> = posts.iter().map(linalg::eig2_values).collect();
    let deterministic =
        (spectra[0].0 - spectra[1].0).abs() < 1e-9 && (spectra[0].1 - spectra[1].1).abs() < 1e-9;

    let layout = rho_1.layout().clone();
    let s_posts: Vec<f64> = posts.iter().map(linalg::entropy2).collect();
    let base_entropy: f64 = probs[0] * s_posts[0] + probs[1] * s_posts[1];

    let mut identity_residual_max: f64 = 0.0;
    let mut eval = |angles: [f64; 3], check_identity: bool| -> Result<f64> {
        let u = euler_zyz(angles[0], angles[1], angles[2]);
        let rotated = &u * &posts[1] * u.adjoint();
        let mix = posts[0].scale(probs[0]) + rotated.scale(probs[1]);
        let objective = linalg::entropy2(&mix) - base_entropy;
        if check_identity {
            let mix_dm = DensityMatrix::new(layout.clone(), mix.clone())?;
            let d0 = relative_entropy(
                &DensityMatrix::new(layout.clone(), posts[0].clone())?,
                &mix_dm,
            )?;
            let d1 = relative_entropy(
                &DensityMatrix::new(layout.clone(), rotated.clone())?,
                &mix_dm,
            )?;
            let identity_rhs = probs[0] * d0 + probs[1] * d1;
            let resid = (objective - identity_rhs).abs();
            if resid > identity_residual_max {
                identity_residual_max = resid;
            }
        }
        Ok(objective)
    };

    // aligned-spectrum candidate first: rotate branch 1's eigenbasis onto
    // branch 0's (exact optimum when the spectra coincide)
    let aligned = {
        let e0 = linalg::eig_hermitian(&posts[0])?;
        let e1 = linalg::eig_hermitian(&posts[1])?;
        &e0.vectors * e1.vectors.adjoint()
    };
    let aligned_obj = {
        let rotated = &aligned * &posts[1] * aligned.adjoint();
        let mix = posts[0].scale(probs[0]) + rotated.scale(probs[1]);
        linalg::entropy2(&mix) - base_entropy
    };

    let mut best = (aligned_obj, [0.0f64; 3], false);
    let n_grid = 24usize;
    for ia in 0..n_grid {
        for ib in 0..n_grid {
            for ig in 0..n_grid {
                let angles = [
                    ia as f64 / n_grid as f64 * std::f64::consts::TAU,
                    ib as f64 / n_grid as f64 * std::f64::consts::PI,
                    ig as f64 / n_grid as f64 * std::f64::consts::TAU,
                ];
                let v = eval(angles, true)?;
                if v < best.0 {
                    best = (v, angles, true);
                }
            }
        }
    }
    // Nelder-Mead refinement around the best grid point
    if best.2 {
        let refined = nelder_mead(
            |x| eval([x[0], x[1], x[2]], false).unwrap_or(f64::INFINITY),
            best.1,
            0.15,
            200,
        );
        let v = eval(refined, true)?;
        if v < best.0 {
            best = (v, refined, true);
        }
    }
    let gap = best.0.max(0.0).min(aligned_obj.max(0.0));
    Ok(GapCertificate {
        deterministic,
        gap,
        identity_residual_max,
        best_angles: best.1,
        probabilities: probs,
    })
}

fn nelder_mead<F: FnMut([f64; 3]) -> f64>(
    mut f: F,
    start: [f64; 3],
    scale: f64,
    iters: usize,
) -> [f64; 3] {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(start)));
    for i in 0..3 {
        let mut x = start;
        x[i] += scale;
        simplex.push((x, f(x)));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let centroid = {
            let mut c = [0.0f64; 3];
            for (x, _) in &simplex[..3] {
                for i in 0..3 {
                    c[i] += x[i] / 3.0;
                }
            }
            c
        };
        let worst = simplex[3];
        let reflect = |alpha: f64| {
            let mut x = [0.0f64; 3];
            for i in 0..3 {
                x[i] = centroid[i] + alpha * (centroid[i] - worst.0[i]);
            }
            x
        };
        let xr = reflect(1.0);
        let fr = f(xr);
        if fr < simplex[0].1 {
            let xe = reflect(2.0);
            let fe = f(xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let xc = reflect(-0.5);
            let fc = f(xc);
            if fc < worst.1 {
                simplex[3] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    for (x, b) in s.0.iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    s.1 = f(s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex[0].0
}

/// The weak-measurement fixture used by the gap criterion: M_0 = diag(1,
/// cos eta), M_1 = diag(0, sin eta), realized by a probe rotation
/// conditioned on the system's excited level.
pub fn weak_measurement(eta: f64, s_label: &str, p_label: &str) -> Result<MeasurementModel> {
    let (c, s) = (eta.cos(), eta.sin());
    let u = CMat::from_row_slice(
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
            cr(c),
            cr(-s),
            cr(0.0),
            cr(0.0),
            cr(s),
            cr(c),
        ],
    );
    let layout = SystemLayout::new(vec![(s_label, 2), (p_label, 2)])?;
    let mut p0 = CMat::zeros(2, 2);
    p0[(0, 0)] = cr(1.0);
    let mut p1 = CMat::zeros(2, 2);
    p1[(1, 1)] = cr(1.0);
    MeasurementModel::new(
        PureState::basis(SystemLayout::single(p_label, 2), &[0])?,
        UnitaryOp::new(layout, u)?,
        vec![p0, p1],
    )
}
