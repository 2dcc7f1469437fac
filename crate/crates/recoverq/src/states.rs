//! Density matrices and pure states on labeled systems, with entropic and
//! distance functionals: von Neumann entropy, conditional mutual information,
//! fidelity (squared convention), relative entropy, and trace distance.
//!
//! All entropic quantities are in bits (base-2 logarithms).

use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, herm_eigen_unchecked, sqrtm_psd, PSD_EIG_TOL};
use crate::tensor::{
    assert_hermitian, hermitian_part, kron, kron_vec, partial_trace, reorder_systems, trace,
    CMat, CVec, SystemLayout, C64, HERMITIAN_TOL,
};

/// Allowed deviation of a density matrix trace from 1.
pub const TRACE_TOL: f64 = 1e-9;

/// Allowed deviation of a pure-state norm from 1.
pub const NORM_TOL: f64 = 1e-10;

/// Weight that a state may carry outside another state's support before a
/// relative entropy is declared infinite.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// A density matrix bound to a [`SystemLayout`].
///
/// Validated on construction: Hermitian within 1e-12 per entry, positive
/// semidefinite within eigenvalue tolerance −1e-10, unit trace within 1e-9.
#[derive(Debug, Clone)]
pub struct LabeledState {
    layout: SystemLayout,
    matrix: CMat,
}

impl LabeledState {
    /// Validates and wraps a density matrix.
    pub fn new(layout: SystemLayout, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != layout.total_dim() {
            return Err(Error::State(format!(
                "matrix is {}x{}, layout dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                layout.total_dim()
            )));
        }
        assert_hermitian(&matrix, HERMITIAN_TOL).map_err(|e| Error::State(e.to_string()))?;
        let t = trace(&matrix).re;
        if (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::State(format!("trace is {t}, expected 1")));
        }
        let eig = herm_eigen_unchecked(&matrix)?;
        if eig.min_value() < -PSD_EIG_TOL {
            return Err(Error::State(format!(
                "matrix has negative eigenvalue {:.3e}",
                eig.min_value()
            )));
        }
        Ok(Self { layout, matrix })
    }

    /// The coordinate system of this state.
    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    /// The density matrix.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Reduced state on `keep` (layout order preserved).
    pub fn reduce(&self, keep: &[&str]) -> Result<LabeledState> {
        let (m, l) = partial_trace(&self.matrix, &self.layout, keep)?;
        LabeledState::new(l, m)
    }

    /// Same state with subsystems listed in `order`.
    pub fn reorder(&self, order: &[&str]) -> Result<LabeledState> {
        let (m, l) = reorder_systems(&self.matrix, &self.layout, order)?;
        LabeledState::new(l, m)
    }

    /// Same state with labels renamed through `map = [(old, new), ...]`.
    pub fn relabel(&self, map: &[(&str, &str)]) -> Result<LabeledState> {
        Ok(Self {
            layout: self.layout.relabeled(map)?,
            matrix: self.matrix.clone(),
        })
    }

    /// Tensor product with another state (labels must stay unique).
    pub fn tensor(&self, other: &LabeledState) -> Result<LabeledState> {
        let layout = self.layout.concat(&other.layout)?;
        let matrix = kron(&self.matrix, &other.matrix)?;
        LabeledState::new(layout, matrix)
    }

    /// Rank relative to the spectral support cutoff.
    pub fn rank(&self) -> Result<usize> {
        let eig = herm_eigen(&self.matrix)?;
        let cutoff = eig.support_cutoff();
        Ok(eig.values.iter().filter(|&&v| v > cutoff).count())
    }
}

/// A unit vector bound to a [`SystemLayout`].
#[derive(Debug, Clone)]
pub struct PureState {
    layout: SystemLayout,
    vector: CVec,
}

impl PureState {
    /// Validates and wraps a unit vector.
    pub fn new(layout: SystemLayout, vector: CVec) -> Result<Self> {
        if vector.len() != layout.total_dim() {
            return Err(Error::State(format!(
                "vector has length {}, layout dimension is {}",
                vector.len(),
                layout.total_dim()
            )));
        }
        let n = vector.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::State(format!("norm is {n}, expected 1")));
        }
        Ok(Self { layout, vector })
    }

    /// The coordinate system of this pure state.
    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    /// The state vector.
    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    /// Projector `|ψ⟩⟨ψ|` as a labeled density matrix.
    pub fn density(&self) -> Result<LabeledState> {
        LabeledState::new(self.layout.clone(), &self.vector * self.vector.adjoint())
    }

    /// Tensor product with another pure state.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        PureState::new(
            self.layout.concat(&other.layout)?,
            kron_vec(&self.vector, &other.vector)?,
        )
    }

    /// Reduced density matrix on `keep`.
    pub fn reduce(&self, keep: &[&str]) -> Result<LabeledState> {
        self.density()?.reduce(keep)
    }
}

/// Purifies `ρ` with a fresh purifier system of dimension `rank(ρ)`.
///
/// The purification is `Σ_k √λ_k |v_k⟩ ⊗ |k⟩` over the eigenpairs of `ρ` above
/// the support cutoff, so tracing out the purifier reproduces `ρ`.
pub fn purify(rho: &LabeledState, purifier_label: &str) -> Result<PureState> {
    purify_impl(rho, purifier_label, None)
}

/// [`purify`] with the purifier padded to the requested dimension
/// (must be at least `rank(ρ)`).
pub fn purify_to_dim(rho: &LabeledState, purifier_label: &str, dim: usize) -> Result<PureState> {
    purify_impl(rho, purifier_label, Some(dim))
}

fn purify_impl(rho: &LabeledState, purifier_label: &str, pad: Option<usize>) -> Result<PureState> {
    if rho.layout().contains(purifier_label) {
        return Err(Error::DuplicateLabel(purifier_label.into()));
    }
    let eig = herm_eigen(rho.matrix())?;
    let cutoff = eig.support_cutoff();
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > cutoff)
        .collect();
    let rank = kept.len();
    let d_pur = match pad {
        None => rank,
        Some(d) if d >= rank => d,
        Some(d) => {
            return Err(Error::InvalidArgument(format!(
                "purifier dim {d} is below rank {rank}"
            )))
        }
    };
    let d = rho.layout().total_dim();
    let mut v = CVec::zeros(d * d_pur);
    for (slot, &k) in kept.iter().enumerate() {
        let w = eig.values[k].sqrt();
        for r in 0..d {
            v[r * d_pur + slot] = eig.vectors[(r, k)] * C64::new(w, 0.0);
        }
    }
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    let layout = rho
        .layout()
        .concat(&SystemLayout::new(&[(purifier_label, d_pur)])?)?;
    PureState::new(layout, v)
}

/// Von Neumann entropy (bits) of the reduced state on `subsystems`.
pub fn von_neumann_entropy(rho: &LabeledState, subsystems: &[&str]) -> Result<f64> {
    let reduced = rho.reduce(subsystems)?;
    entropy_of_matrix(reduced.matrix())
}

fn entropy_of_matrix(m: &CMat) -> Result<f64> {
    let eig = herm_eigen(m)?;
    let mut h = 0.0;
    for &v in &eig.values {
        // Eigenvalues in [−1e-10, 0] are numerical zeros of a PSD matrix.
        if v > 0.0 {
            h -= v * v.log2();
        }
    }
    Ok(h.max(0.0))
}

/// Conditional mutual information `I(A;B|C) = H(AC)+H(BC)−H(C)−H(ABC)` in
/// bits, for the disjoint label groups `a`, `b`, `c` covering the layout.
/// Values are clamped to `[−1e-9, ∞)`.
pub fn cqmi(rho: &LabeledState, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    check_partition(rho.layout(), &[a, b, c])?;
    let ac: Vec<&str> = a.iter().chain(c).copied().collect();
    let bc: Vec<&str> = b.iter().chain(c).copied().collect();
    let h_ac = von_neumann_entropy(rho, &ac)?;
    let h_bc = von_neumann_entropy(rho, &bc)?;
    let h_c = if c.is_empty() {
        0.0
    } else {
        von_neumann_entropy(rho, c)?
    };
    let h_abc = entropy_of_matrix(rho.matrix())?;
    Ok((h_ac + h_bc - h_c - h_abc).max(-1e-9))
}

/// Checks that the groups are disjoint and cover the layout exactly.
pub fn check_partition(layout: &SystemLayout, groups: &[&[&str]]) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    for group in groups {
        for l in *group {
            layout.position(l)?;
            if seen.contains(l) {
                return Err(Error::Layout(format!(
                    "label `{l}` appears in more than one group"
                )));
            }
            seen.push(l);
        }
    }
    if seen.len() != layout.len() {
        return Err(Error::Layout(format!(
            "groups cover {} of {} subsystems",
            seen.len(),
            layout.len()
        )));
    }
    Ok(())
}

fn check_same_layout(omega: &LabeledState, tau: &LabeledState) -> Result<()> {
    if omega.layout() != tau.layout() {
        return Err(Error::Layout(format!(
            "states live on different layouts: {:?} vs {:?}",
            omega.layout().entries(),
            tau.layout().entries()
        )));
    }
    Ok(())
}

/// Quantum fidelity in the squared convention `F(ω,τ) = ‖√ω √τ‖₁²`, in `[0,1]`.
pub fn fidelity(omega: &LabeledState, tau: &LabeledState) -> Result<f64> {
    check_same_layout(omega, tau)?;
    Ok(fidelity_matrices(omega.matrix(), tau.matrix())?.clamp(0.0, 1.0))
}

/// [`fidelity`] on raw PSD matrices (no trace normalization enforced).
pub fn fidelity_matrices(omega: &CMat, tau: &CMat) -> Result<f64> {
    Ok(root_fidelity_matrices(omega, tau)?.powi(2))
}

/// The root fidelity `√F = Tr √(√ω τ √ω)` on raw PSD matrices.
pub fn root_fidelity_matrices(omega: &CMat, tau: &CMat) -> Result<f64> {
    let s = sqrtm_psd(omega)?;
    let inner = hermitian_part(&(&s * tau * &s));
    let eig = herm_eigen_unchecked(&inner)?;
    // Rank-deficiency junk sits at squared-machine-eps relative to the top of
    // the spectrum, but √ amplifies it to ~1e-8 per dimension; floor it out
    // well below any resolvable weight.
    let floor = eig.max_value().max(0.0) * 1e-13;
    Ok(eig
        .values
        .iter()
        .map(|&v| if v > floor { v.sqrt() } else { 0.0 })
        .sum())
}

/// Quantum relative entropy `D(ω‖τ)` in bits; `+∞` when `ω` has weight outside
/// the support of `τ`.
pub fn relative_entropy(omega: &LabeledState, tau: &LabeledState) -> Result<f64> {
    check_same_layout(omega, tau)?;
    relative_entropy_matrices(omega.matrix(), tau.matrix())
}

/// [`relative_entropy`] on raw matrices.
pub fn relative_entropy_matrices(omega: &CMat, tau: &CMat) -> Result<f64> {
    let eig_t = herm_eigen(tau)?;
    if eig_t.min_value() < -PSD_EIG_TOL {
        return Err(Error::NotPositive(eig_t.min_value()));
    }
    let cutoff = eig_t.support_cutoff();
    // Weight of ω outside supp(τ).
    let mut leak = 0.0;
    let mut cross = 0.0; // Tr[ω log₂ τ]
    for (k, &w) in eig_t.values.iter().enumerate() {
        let col = eig_t.vectors.column(k);
        let mut quad = C64::new(0.0, 0.0);
        for r in 0..omega.nrows() {
            for c in 0..omega.ncols() {
                quad += col[r].conj() * omega[(r, c)] * col[c];
            }
        }
        let q = quad.re.max(0.0);
        if w > cutoff {
            cross += q * w.log2();
        } else {
            leak += q;
        }
    }
    if leak > SUPPORT_LEAK_TOL {
        return Ok(f64::INFINITY);
    }
    let eig_o = herm_eigen_unchecked(omega)?;
    let own: f64 = eig_o
        .values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum();
    Ok(own - cross)
}

/// Trace distance `½‖ω − τ‖₁`.
pub fn trace_distance(omega: &LabeledState, tau: &LabeledState) -> Result<f64> {
    check_same_layout(omega, tau)?;
    let diff = omega.matrix() - tau.matrix();
    let eig = herm_eigen_unchecked(&diff)?;
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// `τ ↦ Tr[ρ log₂ τ]` differentiation helper: the Fréchet derivative of the
/// cross term at `τ` applied through the Daleckii–Krein divided-difference
/// kernel on `τ`'s eigenbasis. Eigenvalues are floored at the support cutoff.
pub fn log2_trace_gradient(rho: &CMat, tau: &CMat) -> Result<CMat> {
    let eig = herm_eigen_unchecked(tau)?;
    let cutoff = eig.support_cutoff().max(f64::MIN_POSITIVE);
    let d = eig.values.len();
    let w: Vec<f64> = eig.values.iter().map(|&v| v.max(cutoff)).collect();
    let inner = eig.vectors.adjoint() * rho * &eig.vectors;
    let ln2 = std::f64::consts::LN_2;
    let mut k = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let divided = if (w[i] - w[j]).abs() > 1e-14 * w[i].max(w[j]) {
                (w[i].ln() - w[j].ln()) / (w[i] - w[j])
            } else {
                1.0 / w[i]
            };
            k[(i, j)] = inner[(i, j)] * C64::new(divided / ln2, 0.0);
        }
    }
    Ok(hermitian_part(&(&eig.vectors * k * eig.vectors.adjoint())))
}
