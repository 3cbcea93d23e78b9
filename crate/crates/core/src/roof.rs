//! Convex-roof minimization over pure-state ensembles.
//!
//! Every size-m ensemble of a rank-r state comes from the eigen-ensemble
//! through an m x r matrix with orthonormal columns, so candidates are valid
//! decompositions by construction. The optimizer runs seeded random restarts
//! with a derivative-free adaptive step search on that manifold, reduced by
//! minimum; restarts draw from per-index streams so the result is
//! deterministic given the seed and monotone non-increasing in the number of
//! restarts.

use rand::Rng;

use crate::entanglement::{entanglement_entropy, EnsembleDecomposition};
use crate::error::Error;
use crate::haar;
use crate::hilbert::{DensityMatrix, PureState};
use crate::linalg::{self, cr, CMat, CVec};
use crate::tol;
use crate::Result;

/// Search budget for [`eof_convex_roof`].
#[derive(Debug, Clone, Copy)]
pub struct RoofBudget {
    /// Ensemble size m, with rank <= m <= rank^2.
    pub ensemble_size: usize,
    /// Independent restarts (each from its own seeded stream).
    pub restarts: usize,
    /// Local refinement iterations per restart.
    pub iterations: usize,
    pub seed: u64,
}

impl RoofBudget {
    pub fn new(ensemble_size: usize, restarts: usize, seed: u64) -> Self {
        Self {
            ensemble_size,
            restarts,
            iterations: 400,
            seed,
        }
    }
}

struct EigenEnsemble {
    /// Columns are sqrt(lambda_k) v_k, one per support eigenvector.
    base: CMat,
    rank: usize,
}

fn eigen_ensemble(rho: &DensityMatrix) -> Result<EigenEnsemble> {
    let eig = linalg::eig_hermitian(rho.matrix())?;
    let spec = linalg::psd_spectrum(&eig)?;
    let rank = spec.iter().filter(|&&v| v > tol::EPS_RANK).count().max(1);
    let d = rho.dim();
    let mut base = CMat::zeros(d, rank);
    for k in 0..rank {
        let w = spec[k].max(0.0).sqrt();
        for i in 0..d {
            base[(i, k)] = eig.vectors[(i, k)] * w;
        }
    }
    Ok(EigenEnsemble { base, rank })
}

/// Subnormalized members: column j of `base * v^T`... kept explicit for
/// clarity: member_j = sum_k v[j,k] base_k.
fn members_from(v: &CMat, base: &CMat) -> CMat {
    base * v.transpose()
}

struct Objective<'a> {
    base: &'a CMat,
    layout: crate::hilbert::SystemLayout,
    cut: Vec<String>,
    /// Flat indices grouped for the fast path: reduced density on the cut
    /// side when that side is a single qubit.
    fast_2q: Option<(Vec<usize>, Vec<usize>)>,
}

impl<'a> Objective<'a> {
    fn new(rho: &DensityMatrix, cut: &[&str], base: &'a CMat) -> Result<Self> {
        for l in cut {
            rho.layout().position(l)?;
        }
        let cut_dim: usize = cut
            .iter()
            .map(|l| rho.layout().dim_of(l).unwrap())
            .product();
        let comp = rho.layout().complement(cut);
        if cut.is_empty() || comp.is_empty() {
            return Err(Error::Invalid(
                "cut must be a proper nonempty subset".into(),
            ));
        }
        // Fast path: entropy of a 2-dim reduced state straight from the
        // amplitude vector, no DensityMatrix plumbing in the hot loop.
        let fast_2q = if cut_dim == 2 || rho.dim() / cut_dim == 2 {
            let side: Vec<&str> = if cut_dim == 2 {
                cut.to_vec()
            } else {
                comp.iter().map(|s| s.as_str()).collect()
            };
            let side_positions: Vec<usize> = (0..rho.layout().num_factors())
                .filter(|&p| side.contains(&rho.layout().factors()[p].0.as_str()))
                .collect();
            let env_positions: Vec<usize> = (0..rho.layout().num_factors())
                .filter(|p| !side_positions.contains(p))
                .collect();
            let side_map = position_map(rho.layout(), &side_positions);
            let env_map = position_map(rho.layout(), &env_positions);
            if side_map.len() == 2 {
                Some((side_map, env_map))
            } else {
                None
            }
        } else {
            None
        };
        Ok(Self {
            base,
            layout: rho.layout().clone(),
            cut: cut.iter().map(|s| s.to_string()).collect(),
            fast_2q,
        })
    }

    /// Average cut entanglement of the (subnormalized) members induced by v.
    fn eval(&self, v: &CMat) -> f64 {
        let members = members_from(v, self.base);
        let mut acc = 0.0;
        for j in 0..members.ncols() {
            let col = members.column(j);
            let q: f64 = col.iter().map(|a| a.norm_sqr()).sum();
            if q <= tol::EPS_PROB {
                continue;
            }
            let s = if let Some((side_map, env_map)) = &self.fast_2q {
                // reduced 2x2 density of the normalized member
                let mut r00 = 0.0;
                let mut r11 = 0.0;
                let mut r01 = cr(0.0);
                for &e in env_map {
                    let a0 = col[side_map[0] + e];
                    let a1 = col[side_map[1] + e];
                    r00 += a0.norm_sqr();
                    r11 += a1.norm_sqr();
                    r01 += a0 * a1.conj();
                }
                let m = CMat::from_row_slice(
                    2,
                    2,
                    &[cr(r00 / q), r01 / q, (r01 / q).conj(), cr(r11 / q)],
                );
                linalg::entropy2(&m)
            } else {
                let amp = CVec::from_fn(col.len(), |i, _| col[i] / q.sqrt());
                let psi = PureState::from_parts_unchecked(self.layout.clone(), amp);
                let cut_refs: Vec<&str> = self.cut.iter().map(|s| s.as_str()).collect();
                entanglement_entropy(&psi, &cut_refs).expect("valid cut")
            };
            acc += q * s;
        }
        acc
    }
}

fn position_map(layout: &crate::hilbert::SystemLayout, positions: &[usize]) -> Vec<usize> {
    let strides = layout.strides();
    let dims: Vec<usize> = positions.iter().map(|&p| layout.factors()[p].1).collect();
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut flat = 0usize;
            for (k, &p) in positions.iter().enumerate().rev() {
                let d = dims[k];
                flat += (idx % d) * strides[p];
                idx /= d;
            }
            flat
        })
        .collect()
}

fn random_stiefel(m: usize, r: usize, rng: &mut impl Rng) -> CMat {
    let mut g = haar::random_ginibre(m, r, rng);
    linalg::orthonormalize_columns(&mut g);
    g
}

/// Entanglement of formation across `cut` by convex-roof search.
///
/// Returns the best value found together with the witness ensemble that
/// attains it; the witness reproduces `rho` within reconstruction tolerance
/// and the value never exceeds any ensemble average the search evaluated.
pub fn eof_convex_roof(
    rho: &DensityMatrix,
    cut: &[&str],
    budget: &RoofBudget,
) -> Result<(f64, EnsembleDecomposition)> {
    let ens = eigen_ensemble(rho)?;
    let m = budget.ensemble_size;
    if m < ens.rank {
        return Err(Error::EnsembleTooSmall {
            size: m,
            rank: ens.rank,
        });
    }
    let objective = Objective::new(rho, cut, &ens.base)?;

    let mut best_v: Option<CMat> = None;
    let mut best = f64::INFINITY;
    for restart in 0..budget.restarts.max(1) {
        let mut rng = haar::rng_for(budget.seed, restart as u64);
        let mut v = if restart == 0 {
            // eigen-ensemble itself (padded) as the deterministic first guess
            let mut v0 = CMat::zeros(m, ens.rank);
            for k in 0..ens.rank {
                v0[(k, k)] = cr(1.0);
            }
            v0
        } else {
            random_stiefel(m, ens.rank, &mut rng)
        };
        let mut f = objective.eval(&v);
        let mut step = 0.35;
        for _ in 0..budget.iterations {
            let mut cand = &v + haar::random_ginibre(m, ens.rank, &mut rng).scale(step);
            linalg::orthonormalize_columns(&mut cand);
            let fc = objective.eval(&cand);
            if fc < f {
                v = cand;
                f = fc;
                step = (step * 1.4).min(0.8);
            } else {
                step *= 0.75;
                if step < 1e-7 {
                    break;
                }
            }
        }
        if f < best {
            best = f;
            best_v = Some(v);
        }
    }

    let v = best_v.expect("at least one restart");
    let members_mat = members_from(&v, &ens.base);
    let mut weights = Vec::with_capacity(m);
    let mut members = Vec::with_capacity(m);
    for j in 0..m {
        let col = members_mat.column(j);
        let q: f64 = col.iter().map(|a| a.norm_sqr()).sum();
        weights.push(q);
        let amp = if q > tol::EPS_PROB {
            CVec::from_fn(col.len(), |i, _| col[i] / q.sqrt())
        } else {
            // zero-weight slot; park a basis vector there
            let mut a = CVec::zeros(col.len());
            a[0] = cr(1.0);
            a
        };
        members.push(PureState::from_parts_unchecked(rho.layout().clone(), amp));
    }
    let witness = EnsembleDecomposition { weights, members };
    witness.validate(rho)?;
    Ok((best.max(0.0), witness))
}
