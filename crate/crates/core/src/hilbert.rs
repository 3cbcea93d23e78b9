//! Labeled tensor-product Hilbert spaces and the states that live on them.
//!
//! A [`SystemLayout`] is an ordered list of named factors (for example
//! P, S, B1, R1). Kronecker ordering always follows the layout order;
//! anything that needs a different order goes through an explicit
//! [`PureState::permuted`] / [`DensityMatrix::permuted`] reindexing step,
//! which keeps the index arithmetic in one place.

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{cr, CMat, CVec};
use crate::tol;
use crate::Result;

/// Ordered named tensor factors with their dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemLayout {
    factors: Vec<(String, usize)>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(factors: Vec<(S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::Invalid(format!("factor `{label}` has dimension 0")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { factors })
    }

    /// Single-factor layout.
    pub fn single(label: &str, dim: usize) -> Self {
        Self::new(vec![(label, dim)]).expect("single factor is valid")
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.factors.iter().any(|(l, _)| l == label)
    }

    /// Row-major strides: the first factor is the most significant index.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.factors.len();
        let mut s = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.factors[i + 1].1;
        }
        s
    }

    /// Concatenated layout; labels must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for (l, _) in &other.factors {
            if self.contains(l) {
                return Err(Error::OverlappingLabels(l.clone()));
            }
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        SystemLayout::new(factors)
    }

    /// Sub-layout of the named factors, in the order given.
    pub fn sublayout(&self, labels: &[&str]) -> Result<Self> {
        let mut factors = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l)?;
            factors.push(self.factors[p].clone());
        }
        SystemLayout::new(factors)
    }

    /// Sub-layout of the named factors, keeping this layout's order.
    pub fn sublayout_in_order(&self, labels: &[&str]) -> Result<Self> {
        for l in labels {
            self.position(l)?;
        }
        let factors: Vec<_> = self
            .factors
            .iter()
            .filter(|(l, _)| labels.contains(&l.as_str()))
            .cloned()
            .collect();
        SystemLayout::new(factors)
    }

    /// Labels not in the given set, in layout order.
    pub fn complement(&self, labels: &[&str]) -> Vec<String> {
        self.factors
            .iter()
            .filter(|(l, _)| !labels.contains(&l.as_str()))
            .map(|(l, _)| l.clone())
            .collect()
    }

    /// Flat index from per-factor digits.
    pub fn ravel(&self, digits: &[usize]) -> usize {
        let strides = self.strides();
        digits.iter().zip(&strides).map(|(d, s)| d * s).sum()
    }

    /// Per-factor digits from a flat index.
    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let strides = self.strides();
        strides
            .iter()
            .map(|&s| {
                let d = index / s;
                index %= s;
                d
            })
            .collect()
    }

    /// Flat-index maps for a subset of factor positions: `maps[j]` is the
    /// contribution of the j-th joint sub-index to the full flat index.
    fn position_index_map(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let dims: Vec<usize> = positions.iter().map(|&p| self.factors[p].1).collect();
        let total: usize = dims.iter().product();
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut flat = 0usize;
            for (k, &p) in positions.iter().enumerate().rev() {
                let d = dims[k];
                flat += (idx % d) * strides[p];
                idx /= d;
            }
            out.push(flat);
        }
        out
    }
}

/// Normalized state vector over a layout.
#[derive(Debug, Clone)]
pub struct PureState {
    layout: SystemLayout,
    amplitudes: CVec,
}

impl PureState {
    pub fn new(layout: SystemLayout, amplitudes: CVec) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tol::EPS_NORM {
            return Err(Error::NotNormalized((norm - 1.0).abs()));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Computational basis state |digits> on the layout.
    pub fn basis(layout: SystemLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.num_factors() {
            return Err(Error::DimensionMismatch {
                expected: layout.num_factors(),
                got: digits.len(),
            });
        }
        for (d, (l, dim)) in digits.iter().zip(layout.factors()) {
            if d >= dim {
                return Err(Error::Invalid(format!(
                    "basis digit {d} out of range for `{l}`"
                )));
            }
        }
        let idx = layout.ravel(digits);
        let mut amp = CVec::zeros(layout.dim());
        amp[idx] = cr(1.0);
        Ok(Self {
            layout,
            amplitudes: amp,
        })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// |psi><psi| as a density matrix.
    pub fn density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix {
            layout: self.layout.clone(),
            matrix: m,
        }
    }

    /// Kronecker product with another state on disjoint labels.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.tensor(&other.layout)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(Self { layout, amplitudes })
    }

    /// Same state with factors listed in a new order.
    pub fn permuted(&self, order: &[&str]) -> Result<Self> {
        let new_layout = self.layout.sublayout(order)?;
        if new_layout.num_factors() != self.layout.num_factors() {
            return Err(Error::Invalid("permutation must list every factor".into()));
        }
        let positions: Vec<usize> = order
            .iter()
            .map(|l| self.layout.position(l).unwrap())
            .collect();
        let mut amp = CVec::zeros(self.dim());
        for i in 0..self.dim() {
            let digits = self.layout.unravel(i);
            let new_digits: Vec<usize> = positions.iter().map(|&p| digits[p]).collect();
            amp[new_layout.ravel(&new_digits)] = self.amplitudes[i];
        }
        Ok(Self {
            layout: new_layout,
            amplitudes: amp,
        })
    }

    /// <self|other>
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Distance up to a global phase: min over phase of ||self - e^{ia} other||.
    pub fn dist_up_to_phase(&self, other: &Self) -> f64 {
        let ip = self.inner(other);
        let phase = if ip.norm() > 1e-300 {
            ip / ip.norm()
        } else {
            cr(1.0)
        };
        (&self.amplitudes * phase - &other.amplitudes).norm()
    }

    pub(crate) fn from_parts_unchecked(layout: SystemLayout, amplitudes: CVec) -> Self {
        Self { layout, amplitudes }
    }
}

/// Hermitian, PSD, unit-trace operator over a layout.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    layout: SystemLayout,
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(layout: SystemLayout, matrix: CMat) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        let herm = crate::linalg::hermiticity_defect(&matrix);
        if herm > tol::EPS_HERM * (1.0 + matrix.norm()) {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::EPS_TRACE || tr.im.abs() > tol::EPS_TRACE {
            return Err(Error::BadTrace(tr.re));
        }
        let eig = crate::linalg::eig_hermitian(&matrix)?;
        crate::linalg::psd_spectrum(&eig)?;
        Ok(Self { layout, matrix })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Kronecker product on disjoint labels.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.tensor(&other.layout)?;
        let matrix = self.matrix.kronecker(&other.matrix);
        Ok(Self { layout, matrix })
    }

    /// Trace out everything except the named factors (kept in layout order).
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        for l in keep {
            self.layout.position(l)?;
        }
        let keep_positions: Vec<usize> = (0..self.layout.num_factors())
            .filter(|&p| keep.contains(&self.layout.factors()[p].0.as_str()))
            .collect();
        let trace_positions: Vec<usize> = (0..self.layout.num_factors())
            .filter(|p| !keep_positions.contains(p))
            .collect();
        let keep_map = self.layout.position_index_map(&keep_positions);
        let trace_map = self.layout.position_index_map(&trace_positions);
        let kd = keep_map.len();
        let mut out = CMat::zeros(kd, kd);
        for (a, &ka) in keep_map.iter().enumerate() {
            for (b, &kb) in keep_map.iter().enumerate() {
                let mut acc = cr(0.0);
                for &t in &trace_map {
                    acc += self.matrix[(ka + t, kb + t)];
                }
                out[(a, b)] = acc;
            }
        }
        let new_labels: Vec<&str> = keep_positions
            .iter()
            .map(|&p| self.layout.factors()[p].0.as_str())
            .collect();
        let layout = self.layout.sublayout(&new_labels)?;
        Ok(Self {
            layout,
            matrix: out,
        })
    }

    /// Same operator with factors listed in a new order.
    pub fn permuted(&self, order: &[&str]) -> Result<Self> {
        let new_layout = self.layout.sublayout(order)?;
        if new_layout.num_factors() != self.layout.num_factors() {
            return Err(Error::Invalid("permutation must list every factor".into()));
        }
        let positions: Vec<usize> = order
            .iter()
            .map(|l| self.layout.position(l).unwrap())
            .collect();
        let d = self.dim();
        let perm: Vec<usize> = (0..d)
            .map(|i| {
                let digits = self.layout.unravel(i);
                let new_digits: Vec<usize> = positions.iter().map(|&p| digits[p]).collect();
                new_layout.ravel(&new_digits)
            })
            .collect();
        let mut out = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(perm[i], perm[j])] = self.matrix[(i, j)];
            }
        }
        Ok(Self {
            layout: new_layout,
            matrix: out,
        })
    }

    /// tr[rho H]
    pub fn expectation(&self, h: &CMat) -> f64 {
        (&self.matrix * h).trace().re
    }

    /// Canonical purification: eigendecompose and attach a reference factor
    /// of dimension rank(rho). Tracing the reference back out reproduces
    /// self within `tol::EPS_REC`.
    pub fn purify(&self, reference_label: &str) -> Result<PureState> {
        if self.layout.contains(reference_label) {
            return Err(Error::OverlappingLabels(reference_label.to_string()));
        }
        let eig = crate::linalg::eig_hermitian(&self.matrix)?;
        let spec = crate::linalg::psd_spectrum(&eig)?;
        let rank = spec.iter().filter(|&&v| v > tol::EPS_RANK).count().max(1);
        let d = self.dim();
        let layout = self
            .layout
            .tensor(&SystemLayout::single(reference_label, rank))?;
        let mut amp = CVec::zeros(d * rank);
        for k in 0..rank {
            let w = spec[k].max(0.0).sqrt();
            for i in 0..d {
                amp[i * rank + k] = eig.vectors[(i, k)] * w;
            }
        }
        let norm = amp.norm();
        amp /= cr(norm);
        let psi = PureState {
            layout,
            amplitudes: amp,
        };
        let back = psi.density().partial_trace(&self.layout.labels())?;
        let resid = crate::linalg::mat_dist(back.matrix(), &self.matrix);
        if resid > 100.0 * tol::EPS_REC {
            return Err(Error::PurificationMismatch(resid));
        }
        Ok(psi)
    }
}

/// Unitary acting on a named subset of factors; embedding pads the identity
/// on everything else.
#[derive(Debug, Clone)]
pub struct UnitaryOp {
    layout: SystemLayout,
    matrix: CMat,
}

impl UnitaryOp {
    pub fn new(layout: SystemLayout, matrix: CMat) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        let defect = crate::linalg::unitarity_defect(&matrix);
        if defect > tol::EPS_UNITARY * (1.0 + d as f64) {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { layout, matrix })
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.dim();
        Self {
            layout,
            matrix: CMat::identity(d, d),
        }
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn support(&self) -> Vec<&str> {
        self.layout.labels()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Full matrix on `target`, identity outside the support. The support
    /// factors may appear anywhere (and in any order) in the target layout.
    pub fn embed_in(&self, target: &SystemLayout) -> Result<CMat> {
        let sup_labels = self.layout.labels();
        let sup_positions: Vec<usize> = sup_labels
            .iter()
            .map(|l| target.position(l))
            .collect::<Result<_>>()?;
        for (l, &p) in sup_labels.iter().zip(&sup_positions) {
            let want = self.layout.dim_of(l)?;
            let have = target.factors()[p].1;
            if want != have {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    got: have,
                });
            }
        }
        let env_positions: Vec<usize> = (0..target.num_factors())
            .filter(|p| !sup_positions.contains(p))
            .collect();
        let sup_map = target.position_index_map(&sup_positions);
        let env_map = target.position_index_map(&env_positions);
        let d = target.dim();
        let mut out = CMat::zeros(d, d);
        for &e in &env_map {
            for (i, &si) in sup_map.iter().enumerate() {
                for (j, &sj) in sup_map.iter().enumerate() {
                    out[(si + e, sj + e)] = self.matrix[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// Apply to a pure state (norm preserved by construction).
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        let sup_labels = self.layout.labels();
        let sup_positions: Vec<usize> = sup_labels
            .iter()
            .map(|l| state.layout().position(l))
            .collect::<Result<_>>()?;
        for (l, &p) in sup_labels.iter().zip(&sup_positions) {
            let want = self.layout.dim_of(l)?;
            let have = state.layout().factors()[p].1;
            if want != have {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    got: have,
                });
            }
        }
        let env_positions: Vec<usize> = (0..state.layout().num_factors())
            .filter(|p| !sup_positions.contains(p))
            .collect();
        let sup_map = state.layout().position_index_map(&sup_positions);
        let env_map = state.layout().position_index_map(&env_positions);
        let mut amp = CVec::zeros(state.dim());
        let ds = sup_map.len();
        for &e in &env_map {
            for i in 0..ds {
                let mut acc = cr(0.0);
                for (j, &sj) in sup_map.iter().enumerate() {
                    acc += self.matrix[(i, j)] * state.amplitudes()[sj + e];
                }
                amp[sup_map[i] + e] = acc;
            }
        }
        Ok(PureState {
            layout: state.layout().clone(),
            amplitudes: amp,
        })
    }

    /// Apply to a density matrix: U rho U^dag.
    pub fn apply_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let u = self.embed_in(rho.layout())?;
        let m = &u * rho.matrix() * u.adjoint();
        Ok(DensityMatrix {
            layout: rho.layout().clone(),
            matrix: m,
        })
    }

    /// Kronecker product with another unitary on disjoint labels.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.tensor(&other.layout)?;
        let matrix = self.matrix.kronecker(&other.matrix);
        Ok(Self { layout, matrix })
    }
}
