//! Generalized Schmidt decomposition of three-qubit pure states and the
//! derived local-unitary invariants.
//!
//! A three-qubit pure state can be brought by local unitaries to
//!
//! ```text
//! l0|000> + l1 e^{i phi}|100> + l2|101> + l3|110> + l4|111>
//! ```
//!
//! with l_i >= 0 and phi in [0, pi]. The first-qubit rotation is found by
//! solving det(a T0 + b T1) = 0 for the slice matrices of the leading qubit;
//! each quadratic root yields one candidate gauge and the valid one (or, when
//! the entanglement charge vanishes and both are valid, the one with the
//! larger l0) is returned.

use num_complex::Complex64;

use crate::error::Error;
use crate::hilbert::{PureState, SystemLayout};
use crate::linalg::{self, cr, CMat, CVec};
use crate::Result;

/// Canonical three-qubit form: five amplitudes, one phase, and the local
/// unitaries mapping the input state onto it.
#[derive(Debug, Clone)]
pub struct GsDecomposition {
    /// l0..l4, all nonnegative, sum of squares 1.
    pub lambdas: [f64; 5],
    /// phi in [0, pi]; by convention 0 whenever l1 carries no weight.
    pub phase: f64,
    /// (u_first, u_second, u_third): applying u0 x u1 x u2 to the input
    /// reproduces the canonical vector.
    pub local_unitaries: [CMat; 3],
    /// Layout of the input state, kept so the canonical vector can be
    /// rebuilt on the same labels.
    pub layout: SystemLayout,
}

impl GsDecomposition {
    /// The canonical-form vector on the original layout.
    pub fn canonical_state(&self) -> PureState {
        let mut amp = CVec::zeros(8);
        let [l0, l1, l2, l3, l4] = self.lambdas;
        amp[0] = cr(l0);
        amp[4] = Complex64::from_polar(l1, self.phase);
        amp[5] = cr(l2);
        amp[6] = cr(l3);
        amp[7] = cr(l4);
        let norm = amp.norm();
        amp /= cr(norm);
        PureState::new(self.layout.clone(), amp).expect("canonical vector is normalized")
    }

    /// Residual between (u0 x u1 x u2) psi_in and the canonical vector.
    pub fn reconstruction_residual(&self, input: &PureState) -> f64 {
        let rotated = apply_locals(&self.local_unitaries, input);
        (rotated.amplitudes() - self.canonical_state().amplitudes()).norm()
    }
}

fn apply_locals(us: &[CMat; 3], psi: &PureState) -> PureState {
    let full = us[0].kronecker(&us[1]).kronecker(&us[2]);
    let amp = &full * psi.amplitudes();
    PureState::from_parts_unchecked(psi.layout().clone(), amp)
}

fn check_three_qubits(psi: &PureState) -> Result<()> {
    if psi.layout().num_factors() != 3 || psi.layout().factors().iter().any(|(_, d)| *d != 2) {
        return Err(Error::Invalid("expected a three-qubit state".into()));
    }
    Ok(())
}

/// det polarization: det(X+Y) - det X - det Y for 2x2 matrices.
fn det_mixed(x: &CMat, y: &CMat) -> Complex64 {
    x[(0, 0)] * y[(1, 1)] + y[(0, 0)] * x[(1, 1)] - x[(0, 1)] * y[(1, 0)] - y[(0, 1)] * x[(1, 0)]
}

fn det2(m: &CMat) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Roots of alpha + beta z + gamma z^2 = 0 as projective pairs (a, b) with
/// z = b/a, handling vanishing leading/trailing coefficients.
fn projective_roots(
    alpha: Complex64,
    beta: Complex64,
    gamma: Complex64,
    scale: f64,
) -> Vec<(Complex64, Complex64)> {
    let eps = 1e-14 * scale;
    let a0 = alpha.norm() <= eps;
    let g0 = gamma.norm() <= eps;
    let b0 = beta.norm() <= eps;
    if a0 && g0 {
        // degenerate: any direction works; use the two basis gauges
        return vec![(cr(1.0), cr(0.0)), (cr(0.0), cr(1.0))];
    }
    if g0 {
        // alpha + beta z = 0 plus the root at infinity (a = 0)
        let mut out = vec![(cr(0.0), cr(1.0))];
        if !b0 {
            out.push(normalize_pair(cr(1.0), -alpha / beta));
        }
        return out;
    }
    if a0 {
        // z (beta + gamma z) = 0
        let mut out = vec![(cr(1.0), cr(0.0))];
        out.push(normalize_pair(cr(1.0), -beta / gamma));
        return out;
    }
    // both quadratic roots, computed stably, then Newton-polished: near a
    // double root the discriminant cancellation costs half the precision,
    // which would leak into the dropped singular value of the top slice
    let disc = beta * beta - cr(4.0) * alpha * gamma;
    let mut sq = disc.sqrt();
    if (beta.conj() * sq).re < 0.0 {
        sq = -sq;
    }
    let q = -(beta + sq) * cr(0.5);
    let z1 = polish_root(q / gamma, alpha, beta, gamma);
    let z2 = polish_root(alpha / q, alpha, beta, gamma);
    vec![normalize_pair(cr(1.0), z1), normalize_pair(cr(1.0), z2)]
}

fn polish_root(mut z: Complex64, alpha: Complex64, beta: Complex64, gamma: Complex64) -> Complex64 {
    let f = |z: Complex64| alpha + beta * z + gamma * z * z;
    let mut best = f(z).norm();
    for _ in 0..3 {
        let fp = beta + cr(2.0) * gamma * z;
        if fp.norm() < 1e-300 {
            break;
        }
        let cand = z - f(z) / fp;
        let v = f(cand).norm();
        if v < best {
            z = cand;
            best = v;
        } else {
            break;
        }
    }
    z
}

fn normalize_pair(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a / n, b / n)
}

struct Candidate {
    lambdas: [f64; 5],
    phase: f64,
    locals: [CMat; 3],
    /// |phase| weight actually carried by l1; negligible weight means the
    /// phase can be folded freely.
    phase_weight: f64,
}

/// Build the canonical candidate for one first-qubit gauge (a, b).
fn candidate_for_root(t0: &CMat, t1: &CMat, a: Complex64, b: Complex64) -> Candidate {
    let u_p = CMat::from_row_slice(2, 2, &[a, b, -b.conj(), a.conj()]);
    let top = t0.scale(1.0) * a + t1.scale(1.0) * b;
    let bot = t0.scale(1.0) * (-b.conj()) + t1.scale(1.0) * a.conj();
    // Rotate the (now singular) top slice onto diag(s0, ~0).
    let (u, s, v) = linalg::svd2(&top);
    let u_s = u.adjoint();
    let u_r = v.transpose();
    let bot2 = &u_s * bot * u_r.transpose();

    // amplitudes before phase gauge
    let t000 = cr(s[0]);
    let t100 = bot2[(0, 0)];
    let t101 = bot2[(0, 1)];
    let t110 = bot2[(1, 0)];
    let t111 = bot2[(1, 1)];

    // Solve diagonal phase gauges g + a_p*i + b_s*j + c_r*k so that t000,
    // t101, t110, t111 become real nonnegative, spending leftover freedom
    // on t100. Rows: coefficient pattern over (g, a_p, b_s, c_r).
    let mut rows: Vec<([f64; 4], f64)> = Vec::new();
    let amp_eps = 1e-13;
    if t000.norm() > amp_eps {
        rows.push(([1.0, 0.0, 0.0, 0.0], -t000.arg()));
    }
    if t101.norm() > amp_eps {
        rows.push(([1.0, 1.0, 0.0, 1.0], -t101.arg()));
    }
    if t110.norm() > amp_eps {
        rows.push(([1.0, 1.0, 1.0, 0.0], -t110.arg()));
    }
    if t111.norm() > amp_eps {
        rows.push(([1.0, 1.0, 1.0, 1.0], -t111.arg()));
    }
    // lowest priority: zero the phase on t100 if freedom remains
    rows.push(([1.0, 1.0, 0.0, 0.0], -t100.arg()));
    let gauge = solve_gauge(&rows);
    let phase_of = |i: usize, j: usize, k: usize| -> f64 {
        gauge[0] + gauge[1] * i as f64 + gauge[2] * j as f64 + gauge[3] * k as f64
    };
    let fix = |z: Complex64, i: usize, j: usize, k: usize| -> Complex64 {
        z * Complex64::from_polar(1.0, phase_of(i, j, k))
    };
    let c000 = fix(t000, 0, 0, 0);
    let c100 = fix(t100, 1, 0, 0);
    let c101 = fix(t101, 1, 0, 1);
    let c110 = fix(t110, 1, 1, 0);
    let c111 = fix(t111, 1, 1, 1);

    let lambdas = [
        c000.norm(),
        c100.norm(),
        c101.norm(),
        c110.norm(),
        c111.norm(),
    ];
    let mut phase = if c100.norm() > amp_eps {
        c100.arg()
    } else {
        0.0
    };
    let phase_weight = lambdas[1] * phase.sin().abs();
    if phase_weight <= 1e-11 {
        // phase carries no weight: fold to the convention phi in [0, pi]
        phase = if phase.cos() >= 0.0 {
            0.0
        } else {
            std::f64::consts::PI
        };
    }

    // assemble locals: diag phase gauges after the rotations
    let dp = CMat::from_row_slice(
        2,
        2,
        &[
            Complex64::from_polar(1.0, gauge[0]),
            cr(0.0),
            cr(0.0),
            Complex64::from_polar(1.0, gauge[0] + gauge[1]),
        ],
    );
    let ds = CMat::from_row_slice(
        2,
        2,
        &[
            cr(1.0),
            cr(0.0),
            cr(0.0),
            Complex64::from_polar(1.0, gauge[2]),
        ],
    );
    let dr = CMat::from_row_slice(
        2,
        2,
        &[
            cr(1.0),
            cr(0.0),
            cr(0.0),
            Complex64::from_polar(1.0, gauge[3]),
        ],
    );
    let locals = [&dp * &u_p, &ds * u_s, &dr * u_r];
    Candidate {
        lambdas,
        phase,
        locals,
        phase_weight,
    }
}

/// Solve the phase-gauge system greedily in row order; consistent rows are
/// absorbed, unconstrained unknowns stay 0.
fn solve_gauge(rows: &[([f64; 4], f64)]) -> [f64; 4] {
    // Gaussian elimination with partial pivoting over the accumulated rows,
    // taking rows in priority order and skipping rows that have become
    // dependent (their rhs is then unreachable only up to 2*pi wraps, which
    // do not matter for phases).
    let mut mat: Vec<[f64; 5]> = Vec::new();
    for (coef, rhs) in rows {
        let mut row = [coef[0], coef[1], coef[2], coef[3], *rhs];
        // eliminate against existing pivots
        for r in &mat {
            let pivot_col = (0..4).find(|&c| r[c].abs() > 1e-12).unwrap();
            let f = row[pivot_col] / r[pivot_col];
            if f.abs() > 0.0 {
                for c in 0..5 {
                    row[c] -= f * r[c];
                }
            }
        }
        if (0..4).any(|c| row[c].abs() > 1e-9) {
            mat.push(row);
        }
    }
    // back-substitute
    let mut sol = [0.0f64; 4];
    for r in mat.iter().rev() {
        let pivot_col = (0..4).find(|&c| r[c].abs() > 1e-12).unwrap();
        let mut rhs = r[4];
        for c in (pivot_col + 1)..4 {
            rhs -= r[c] * sol[c];
        }
        sol[pivot_col] = rhs / r[pivot_col];
    }
    sol
}

/// Generalized Schmidt decomposition of a three-qubit pure state whose
/// layout order is (probe, system, reference).
pub fn gsd(psi: &PureState) -> Result<GsDecomposition> {
    check_three_qubits(psi)?;
    let amp = psi.amplitudes();
    let t0 = CMat::from_row_slice(2, 2, &[amp[0], amp[1], amp[2], amp[3]]);
    let t1 = CMat::from_row_slice(2, 2, &[amp[4], amp[5], amp[6], amp[7]]);
    let alpha = det2(&t0);
    let beta = det_mixed(&t0, &t1);
    let gamma = det2(&t1);
    let roots = projective_roots(alpha, beta, gamma, 1.0);

    let mut candidates: Vec<Candidate> = roots
        .into_iter()
        .map(|(a, b)| candidate_for_root(&t0, &t1, a, b))
        .collect();

    // A candidate is admissible when its phase lies in [0, pi] (a residual
    // negative phase with negligible weight is folded, not rejected).
    let admissible = |c: &Candidate| -> bool { c.phase >= -1e-9 };
    candidates.sort_by(|x, y| y.lambdas[0].partial_cmp(&x.lambdas[0]).unwrap());
    let chosen = candidates
        .iter()
        .find(|c| admissible(c))
        .or_else(|| candidates.first())
        .ok_or_else(|| Error::Invalid("no gauge candidate produced".into()))?;
    if !admissible(chosen) {
        return Err(Error::InvariantViolation(format!(
            "no admissible Schmidt gauge: phases {:?}",
            candidates.iter().map(|c| c.phase).collect::<Vec<_>>()
        )));
    }

    let mut lambdas = chosen.lambdas;
    let mut phase = chosen.phase.clamp(0.0, std::f64::consts::PI);
    if chosen.phase_weight <= 1e-11 {
        // keep the folded convention
        phase = chosen.phase;
    }
    // renormalize away the dropped second singular value of the top slice
    let norm: f64 = lambdas.iter().map(|l| l * l).sum::<f64>().sqrt();
    for l in &mut lambdas {
        *l /= norm;
    }

    let out = GsDecomposition {
        lambdas,
        phase: phase.clamp(0.0, std::f64::consts::PI),
        local_unitaries: chosen.locals.clone(),
        layout: psi.layout().clone(),
    };
    let resid = out.reconstruction_residual(psi);
    if resid > 1e-8 {
        return Err(Error::InvariantViolation(format!(
            "Schmidt reconstruction residual {resid:.3e}"
        )));
    }
    Ok(out)
}

/// Residual three-party tangle of a three-qubit pure state (the
/// concurrence-squared balance of the leading qubit with the pair).
pub fn tangle_3q(psi: &PureState) -> Result<f64> {
    check_three_qubits(psi)?;
    let labels = psi.layout().labels();
    let rho = psi.density();
    let rho_first = rho.partial_trace(&[labels[0]])?;
    // pure-state concurrence across first vs rest: C^2 = 4 det(rho_first)
    let det = rho_first.matrix()[(0, 0)] * rho_first.matrix()[(1, 1)]
        - rho_first.matrix()[(0, 1)] * rho_first.matrix()[(1, 0)];
    let c2_first_rest = 4.0 * det.re;
    let c_01 = crate::entanglement::concurrence_2q(&rho.partial_trace(&[labels[0], labels[1]])?)?;
    let c_02 = crate::entanglement::concurrence_2q(&rho.partial_trace(&[labels[0], labels[2]])?)?;
    Ok((c2_first_rest - c_01 * c_01 - c_02 * c_02).clamp(0.0, 1.0))
}

/// The derived invariants of a canonical three-qubit form.
#[derive(Debug, Clone)]
pub struct CanonicalInvariants {
    /// Residual tangle.
    pub tau: f64,
    /// Pairwise concurrences (probe-system, probe-reference, system-reference).
    pub c_ps: f64,
    pub c_pr1: f64,
    pub c_sr1: f64,
    pub k_ps: f64,
    pub k_pr1: f64,
    pub k_sr1: f64,
    pub j5: f64,
    pub k5: f64,
    pub delta_j: f64,
    /// Phase of the unit number (l2 l3 - l1 l4 e^{i phi}) / | . |, or 0 when
    /// the numerator vanishes (then `phi5_degenerate` is set).
    pub phi5: f64,
    pub phi5_degenerate: bool,
    /// Entanglement charge: sign in {-1, 0, +1}.
    pub q_e: i8,
}

/// Evaluate the eight derived parameters of a canonical form.
pub fn canonical_invariants(g: &GsDecomposition) -> CanonicalInvariants {
    let [l0, l1, l2, l3, l4] = g.lambdas;
    let phi = g.phase;
    let e_phi = Complex64::from_polar(1.0, phi);
    let tau = 4.0 * l0 * l0 * l4 * l4;
    let c_ps = 2.0 * l0 * l3;
    let c_pr1 = 2.0 * l0 * l2;
    let cross = cr(l2 * l3) - cr(l1 * l4) * e_phi;
    let c_sr1 = 2.0 * cross.norm();
    let k_ps = c_ps * c_ps + tau;
    let k_pr1 = c_pr1 * c_pr1 + tau;
    let k_sr1 = c_sr1 * c_sr1 + tau;
    let j5 = 4.0 * l0 * l0 * (cross.norm_sqr() + l2 * l2 * l3 * l3 - l1 * l1 * l4 * l4);
    let k5 = j5 + tau;
    let delta_j = k5 * k5 - k_ps * k_pr1 * k_sr1;
    let (phi5, phi5_degenerate) = if cross.norm() > 1e-12 {
        // e^{-i phi5} = cross / |cross|
        (-(cross / cross.norm()).arg(), false)
    } else {
        (0.0, true)
    };
    let q_arg = phi.sin() * (l0 * l0 - (tau + j5) / (2.0 * k_sr1));
    let q_e = if k_sr1 <= 1e-14 || q_arg.abs() <= 1e-12 {
        0
    } else if q_arg > 0.0 {
        1
    } else {
        -1
    };
    CanonicalInvariants {
        tau,
        c_ps,
        c_pr1,
        c_sr1,
        k_ps,
        k_pr1,
        k_sr1,
        j5,
        k5,
        delta_j,
        phi5,
        phi5_degenerate,
        q_e,
    }
}
