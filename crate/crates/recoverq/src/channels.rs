//! Quantum channels represented by Choi matrices.
//!
//! Convention: for a channel `Φ` from `in` to `out`, the Choi matrix is
//! `J = Σ_ij |i⟩⟨j|_in ⊗ Φ(|i⟩⟨j|)`, indexed with the *input* as the most
//! significant digit (row index `i·d_out + o`). Trace preservation reads
//! `Tr_out J = I_in`, and the action on a state `X` whose layout contains the
//! channel inputs is
//!
//! `Y[(o,s),(o',s')] = Σ_{i,i'} J[(i,o),(i',o')] · X[(i,s),(i',s')]`
//!
//! with `s` ranging over spectator indices.

use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, herm_eigen_unchecked, herm_fn_of_eigen, sqrtm_psd, HermFn};
use crate::states::{check_partition, LabeledState};
use crate::tensor::{
    assert_hermitian, hermitian_part, identity, kron, partial_trace, reorder_systems, trace,
    CMat, SystemLayout, C64, HERMITIAN_TOL,
};

/// Tolerance on the most negative Choi eigenvalue.
pub const CHOI_PSD_TOL: f64 = 1e-8;

/// Tolerance on `‖Tr_out J − I_in‖_F`.
pub const CHOI_TP_TOL: f64 = 1e-8;

/// Choi eigenvalues at or below this are dropped in Kraus extraction.
pub const KRAUS_DROP_TOL: f64 = 1e-12;

/// Residuals of a complete-positivity / trace-preservation check.
#[derive(Debug, Clone, Copy)]
pub struct CptpReport {
    /// `max(0, −λ_min)` of the Choi matrix.
    pub psd_violation: f64,
    /// `‖Tr_out J − I_in‖_F`.
    pub tp_residual: f64,
}

impl CptpReport {
    /// True when both residuals are within tolerance.
    pub fn is_cptp(&self) -> bool {
        self.psd_violation <= CHOI_PSD_TOL && self.tp_residual <= CHOI_TP_TOL
    }
}

/// Computes CPTP residuals of a raw Choi matrix for the given dimensions.
pub fn validate_cptp_matrix(choi: &CMat, d_in: usize, d_out: usize) -> Result<CptpReport> {
    if choi.nrows() != d_in * d_out || choi.ncols() != d_in * d_out {
        return Err(Error::Shape(format!(
            "Choi matrix is {}x{}, expected {}",
            choi.nrows(),
            choi.ncols(),
            d_in * d_out
        )));
    }
    assert_hermitian(choi, HERMITIAN_TOL).map_err(|e| Error::Channel(e.to_string()))?;
    let eig = herm_eigen_unchecked(choi)?;
    let psd_violation = (-eig.min_value()).max(0.0);
    let marginal = trace_out_output(choi, d_in, d_out);
    let tp_residual = (marginal - identity(d_in)).norm();
    Ok(CptpReport {
        psd_violation,
        tp_residual,
    })
}

/// `Tr_out J` as a `d_in × d_in` matrix.
pub fn trace_out_output(choi: &CMat, d_in: usize, d_out: usize) -> CMat {
    CMat::from_fn(d_in, d_in, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for o in 0..d_out {
            acc += choi[(i * d_out + o, j * d_out + o)];
        }
        acc
    })
}

/// A CPTP channel between labeled layouts, stored as its Choi matrix.
#[derive(Debug, Clone)]
pub struct ChoiChannel {
    in_layout: SystemLayout,
    out_layout: SystemLayout,
    choi: CMat,
}

impl ChoiChannel {
    /// Validates (PSD within −1e-8, TP within 1e-8 Frobenius) and wraps.
    pub fn new(in_layout: SystemLayout, out_layout: SystemLayout, choi: CMat) -> Result<Self> {
        let report = validate_cptp_matrix(&choi, in_layout.total_dim(), out_layout.total_dim())?;
        if !report.is_cptp() {
            return Err(Error::Channel(format!(
                "CPTP validation failed: psd violation {:.3e}, tp residual {:.3e}",
                report.psd_violation, report.tp_residual
            )));
        }
        Ok(Self {
            in_layout,
            out_layout,
            choi,
        })
    }

    /// Input layout.
    pub fn in_layout(&self) -> &SystemLayout {
        &self.in_layout
    }

    /// Output layout.
    pub fn out_layout(&self) -> &SystemLayout {
        &self.out_layout
    }

    /// The Choi matrix.
    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    /// Recomputes the CPTP residuals.
    pub fn validate(&self) -> Result<CptpReport> {
        validate_cptp_matrix(
            &self.choi,
            self.in_layout.total_dim(),
            self.out_layout.total_dim(),
        )
    }

    /// The identity channel on a layout.
    pub fn identity_channel(layout: &SystemLayout) -> Result<Self> {
        let d = layout.total_dim();
        let mut choi = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                choi[(i * d + i, j * d + j)] = C64::new(1.0, 0.0);
            }
        }
        Self::new(layout.clone(), layout.clone(), choi)
    }

    /// The channel that traces out the input and prepares `sigma`.
    pub fn replace_with(in_layout: &SystemLayout, sigma: &LabeledState) -> Result<Self> {
        let choi = kron(&identity(in_layout.total_dim()), sigma.matrix())?;
        Self::new(in_layout.clone(), sigma.layout().clone(), choi)
    }

    /// The fully depolarizing channel: trace out, prepare maximal mixture on
    /// `out_layout`. This is the canonical interior point of the CPTP set.
    pub fn depolarizing(in_layout: &SystemLayout, out_layout: &SystemLayout) -> Result<Self> {
        let d_out = out_layout.total_dim();
        let mixed = LabeledState::new(
            out_layout.clone(),
            identity(d_out) / C64::new(d_out as f64, 0.0),
        )?;
        Self::replace_with(in_layout, &mixed)
    }

    /// Builds a channel from Kraus operators (`Σ_k K_k† K_k = I` required).
    pub fn from_kraus(
        in_layout: &SystemLayout,
        out_layout: &SystemLayout,
        kraus: &[CMat],
    ) -> Result<Self> {
        let choi = kraus_to_choi(kraus, in_layout.total_dim(), out_layout.total_dim())?;
        Self::new(in_layout.clone(), out_layout.clone(), choi)
    }

    /// Builds a channel from its action on matrix units `|i⟩⟨j|`.
    pub fn from_map(
        in_layout: &SystemLayout,
        out_layout: &SystemLayout,
        f: impl Fn(&CMat) -> Result<CMat>,
    ) -> Result<Self> {
        let d_in = in_layout.total_dim();
        let d_out = out_layout.total_dim();
        let mut choi = CMat::zeros(d_in * d_out, d_in * d_out);
        let mut unit = CMat::zeros(d_in, d_in);
        for i in 0..d_in {
            for j in 0..d_in {
                unit[(i, j)] = C64::new(1.0, 0.0);
                let block = f(&unit)?;
                unit[(i, j)] = C64::new(0.0, 0.0);
                if block.nrows() != d_out || block.ncols() != d_out {
                    return Err(Error::Shape(format!(
                        "map produced a {}x{} block, expected {d_out}x{d_out}",
                        block.nrows(),
                        block.ncols()
                    )));
                }
                for o in 0..d_out {
                    for p in 0..d_out {
                        choi[(i * d_out + o, j * d_out + p)] = block[(o, p)];
                    }
                }
            }
        }
        Self::new(in_layout.clone(), out_layout.clone(), hermitian_part(&choi))
    }

    /// Kraus operators from the Choi eigendecomposition (eigenvalues at or
    /// below [`KRAUS_DROP_TOL`] dropped).
    pub fn kraus_ops(&self) -> Result<Vec<CMat>> {
        let d_in = self.in_layout.total_dim();
        let d_out = self.out_layout.total_dim();
        let eig = herm_eigen(&self.choi)?;
        let mut out = Vec::new();
        for (k, &v) in eig.values.iter().enumerate() {
            if v <= KRAUS_DROP_TOL {
                continue;
            }
            let w = v.sqrt();
            let mut kmat = CMat::zeros(d_out, d_in);
            for i in 0..d_in {
                for o in 0..d_out {
                    kmat[(o, i)] = eig.vectors[(i * d_out + o, k)] * C64::new(w, 0.0);
                }
            }
            out.push(kmat);
        }
        // Deterministic order: descending eigenvalue.
        out.reverse();
        Ok(out)
    }

    /// Stinespring dilation: an isometry `V: in → out ⊗ env` (environment as
    /// the least significant factor) with `Tr_env V ρ V† = Φ(ρ)`, plus the
    /// environment dimension. The environment never exceeds `d_in · d_out`.
    pub fn stinespring(&self) -> Result<(CMat, usize)> {
        let kraus = self.kraus_ops()?;
        let d_env = kraus.len().max(1);
        let d_in = self.in_layout.total_dim();
        let d_out = self.out_layout.total_dim();
        let mut v = CMat::zeros(d_out * d_env, d_in);
        for (k, kmat) in kraus.iter().enumerate() {
            for o in 0..d_out {
                for i in 0..d_in {
                    v[(o * d_env + k, i)] = kmat[(o, i)];
                }
            }
        }
        Ok((v, d_env))
    }

    /// Applies the channel to the subsystems of `x` named by the input layout
    /// (identity on spectators). Returns the raw output matrix on the layout
    /// `out ++ spectators`.
    pub fn apply_matrix(&self, x: &CMat, x_layout: &SystemLayout) -> Result<(CMat, SystemLayout)> {
        let in_labels: Vec<&str> = self.in_layout.labels();
        let spectators: Vec<&str> = x_layout
            .labels()
            .into_iter()
            .filter(|l| !in_labels.contains(l))
            .collect();
        let mut order = in_labels.clone();
        order.extend(&spectators);
        let (xr_full, _) = reorder_systems(x, x_layout, &order)?;
        let d_in = self.in_layout.total_dim();
        let d_out = self.out_layout.total_dim();
        let d_s = x_layout.total_dim() / d_in;
        let xr = reshape_state_for_action(&xr_full, d_in, d_s);
        let jr = reshape_choi_for_action(&self.choi, d_in, d_out);
        let yr = jr * xr;
        let y = unreshape_action_output(&yr, d_out, d_s);
        let mut out_layout = self.out_layout.clone();
        for l in &spectators {
            out_layout = out_layout.concat(&SystemLayout::new(&[(l, x_layout.dim_of(l)?)])?)?;
        }
        // Exactly linear: non-Hermitian inputs (e.g. matrix units during
        // channel composition) must map to their true images.
        Ok((y, out_layout))
    }

    /// Applies the channel to a labeled state (validating the output).
    pub fn apply(&self, rho: &LabeledState) -> Result<LabeledState> {
        let (y, layout) = self.apply_matrix(rho.matrix(), rho.layout())?;
        LabeledState::new(layout, hermitian_part(&y))
    }

    /// Parallel composition `self ⊗ other`; the joint input layout is
    /// `in₁ ++ in₂` and the joint output `out₁ ++ out₂` (labels must stay
    /// unique; relabel first if needed).
    pub fn tensor(&self, other: &ChoiChannel) -> Result<ChoiChannel> {
        let in_layout = self.in_layout.concat(&other.in_layout)?;
        let out_layout = self.out_layout.concat(&other.out_layout)?;
        let raw = kron(&self.choi, &other.choi)?;
        // Indices currently run (i₁ o₁ i₂ o₂); the joint Choi needs (i₁ i₂ o₁ o₂).
        let scratch = SystemLayout::new(&[
            ("~i1", self.in_layout.total_dim()),
            ("~o1", self.out_layout.total_dim()),
            ("~i2", other.in_layout.total_dim()),
            ("~o2", other.out_layout.total_dim()),
        ])?;
        let (reordered, _) = reorder_systems(&raw, &scratch, &["~i1", "~i2", "~o1", "~o2"])?;
        ChoiChannel::new(in_layout, out_layout, reordered)
    }

    /// Convex mixture `λ·self + (1−λ)·other` of channels with equal layouts.
    pub fn mix(&self, other: &ChoiChannel, lambda: f64) -> Result<ChoiChannel> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "mixing weight must be in [0,1], got {lambda}"
            )));
        }
        if self.in_layout != other.in_layout || self.out_layout != other.out_layout {
            return Err(Error::Layout("mixed channels must share layouts".into()));
        }
        let choi = &self.choi * C64::new(lambda, 0.0) + &other.choi * C64::new(1.0 - lambda, 0.0);
        ChoiChannel::new(self.in_layout.clone(), self.out_layout.clone(), choi)
    }

    /// Same channel with relabeled input/output layouts.
    pub fn relabeled(&self, in_map: &[(&str, &str)], out_map: &[(&str, &str)]) -> Result<ChoiChannel> {
        Ok(ChoiChannel {
            in_layout: self.in_layout.relabeled(in_map)?,
            out_layout: self.out_layout.relabeled(out_map)?,
            choi: self.choi.clone(),
        })
    }
}

/// Assembles a Choi matrix `Σ_k w_k w_k†` from Kraus operators, with
/// `w_k[i·d_out + o] = K_k[o, i]`.
pub fn kraus_to_choi(kraus: &[CMat], d_in: usize, d_out: usize) -> Result<CMat> {
    let mut choi = CMat::zeros(d_in * d_out, d_in * d_out);
    for k in kraus {
        if k.nrows() != d_out || k.ncols() != d_in {
            return Err(Error::Shape(format!(
                "Kraus operator is {}x{}, expected {d_out}x{d_in}",
                k.nrows(),
                k.ncols()
            )));
        }
        let mut w = CMat::zeros(d_in * d_out, 1);
        for i in 0..d_in {
            for o in 0..d_out {
                w[(i * d_out + o, 0)] = k[(o, i)];
            }
        }
        choi += &w * w.adjoint();
    }
    Ok(hermitian_part(&choi))
}

/// Reshapes a Choi matrix from `[(i,o),(i',o')]` to `[(o,o'),(i,i')]` indexing
/// so channel action becomes a plain matrix product.
pub fn reshape_choi_for_action(choi: &CMat, d_in: usize, d_out: usize) -> CMat {
    CMat::from_fn(d_out * d_out, d_in * d_in, |row, col| {
        let (o, op) = (row / d_out, row % d_out);
        let (i, ip) = (col / d_in, col % d_in);
        choi[(i * d_out + o, ip * d_out + op)]
    })
}

/// Reshapes a state from `[(i,s),(i',s')]` to `[(i,i'),(s,s')]` indexing.
pub fn reshape_state_for_action(x: &CMat, d_in: usize, d_s: usize) -> CMat {
    CMat::from_fn(d_in * d_in, d_s * d_s, |row, col| {
        let (i, ip) = (row / d_in, row % d_in);
        let (s, sp) = (col / d_s, col % d_s);
        x[(i * d_s + s, ip * d_s + sp)]
    })
}

/// Inverse of the action reshape on the output side: `[(o,o'),(s,s')]` back to
/// `[(o,s),(o',s')]`.
pub fn unreshape_action_output(yr: &CMat, d_out: usize, d_s: usize) -> CMat {
    CMat::from_fn(d_out * d_s, d_out * d_s, |row, col| {
        let (o, s) = (row / d_s, row % d_s);
        let (op, sp) = (col / d_s, col % d_s);
        yr[(o * d_out + op, s * d_s + sp)]
    })
}

/// Adjoint of the channel action with respect to the Hilbert–Schmidt inner
/// product, as a map on Choi matrices: given a Hermitian `G` on the output
/// layout `[(o,s),(o',s')]` and the reshaped state `xr`, returns
/// `Λ*(G)[(i,o),(i',o')] = Σ_{s,s'} G[(o,s),(o',s')] · conj(X[(i,s),(i',s')])`.
pub fn adjoint_action_from_reshaped(g: &CMat, xr: &CMat, d_in: usize, d_out: usize, d_s: usize) -> CMat {
    let gr = CMat::from_fn(d_out * d_out, d_s * d_s, |row, col| {
        let (o, op) = (row / d_out, row % d_out);
        let (s, sp) = (col / d_s, col % d_s);
        g[(o * d_s + s, op * d_s + sp)]
    });
    let a = gr * xr.conjugate().transpose(); // [(o,o'),(i,i')]
    hermitian_part(&CMat::from_fn(d_in * d_out, d_in * d_out, |row, col| {
        let (i, o) = (row / d_out, row % d_out);
        let (ip, op) = (col / d_out, col % d_out);
        a[(o * d_out + op, i * d_in + ip)]
    }))
}

/// The Petz transpose channel of `ρ_AC` as a recovery channel from the `c`
/// group to the `a ++ c` groups:
///
/// `R(X) = √ρ_AC (I_A ⊗ ρ_C^{-1/2} Π X Π ρ_C^{-1/2}) √ρ_AC + Tr[(I−Π)X]·ρ_AC`
///
/// where `Π` projects onto the support of `ρ_C`. The off-support completion
/// routes weight to `ρ_AC`, keeping the channel exactly trace-preserving while
/// agreeing with the transpose channel on the support.
pub fn petz_recovery(rho_ac: &LabeledState, a: &[&str], c: &[&str]) -> Result<ChoiChannel> {
    check_partition(rho_ac.layout(), &[a, c])?;
    let mut order: Vec<&str> = a.to_vec();
    order.extend(c);
    let rho = rho_ac.reorder(&order)?;
    let d_a = rho.layout().dim_of_group(a)?;
    let s = sqrtm_psd(rho.matrix())?;
    let (rho_c_m, in_layout) = partial_trace(rho.matrix(), rho.layout(), c)?;
    let eig_c = herm_eigen(&rho_c_m)?;
    let w = herm_fn_of_eigen(&eig_c, HermFn::InvSqrtOnSupport)?;
    let cutoff = eig_c.support_cutoff();
    let proj = eig_c.reassemble(|v| if v > cutoff { 1.0 } else { 0.0 });
    let i_a = identity(d_a);
    let out_layout = rho.layout().clone();
    let rho_m = rho.matrix().clone();
    ChoiChannel::from_map(&in_layout, &out_layout, move |x| {
        let filtered = &w * x * &w;
        let embedded = kron(&i_a, &filtered)?;
        let mut out = &s * embedded * &s;
        // Complex in general: the map must stay linear on matrix units.
        let leak = trace(x) - trace(&(&proj * x));
        if leak.norm() > 0.0 {
            out += &rho_m * leak;
        }
        Ok(out)
    })
    .map_err(|e| match e {
        Error::Channel(msg) => Error::Channel(format!("Petz construction failed: {msg}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;
    use crate::states::{fidelity, PureState};
    use crate::tensor::{basis_vec, frobenius_distance, CVec};

    fn qubit(label: &str) -> SystemLayout {
        SystemLayout::new(&[(label, 2)]).unwrap()
    }

    /// Random CPTP channel from a Haar Stinespring isometry with environment
    /// dimension `d_env`.
    fn random_channel(
        s: &mut Sampler,
        in_layout: &SystemLayout,
        out_layout: &SystemLayout,
        d_env: usize,
    ) -> ChoiChannel {
        let d_in = in_layout.total_dim();
        let d_out = out_layout.total_dim();
        let v = s.haar_isometry(d_out * d_env, d_in);
        let kraus: Vec<CMat> = (0..d_env)
            .map(|k| CMat::from_fn(d_out, d_in, |o, i| v[(o * d_env + k, i)]))
            .collect();
        ChoiChannel::from_kraus(in_layout, out_layout, &kraus).unwrap()
    }

    #[test]
    fn identity_channel_is_cptp_and_acts_trivially() {
        let layout = qubit("C");
        let id = ChoiChannel::identity_channel(&layout).unwrap();
        let report = id.validate().unwrap();
        assert!(report.psd_violation < 1e-14);
        assert!(report.tp_residual < 1e-14);

        let mut s = Sampler::new(1);
        let full = SystemLayout::new(&[("B", 3), ("C", 2)]).unwrap();
        let rho = s.random_density(&full, 6).unwrap();
        let out = id.apply(&rho).unwrap();
        let back = out.reorder(&["B", "C"]).unwrap();
        assert!(frobenius_distance(back.matrix(), rho.matrix()) < 1e-10);
    }

    #[test]
    fn broken_normalization_is_detected() {
        let layout = qubit("C");
        let id = ChoiChannel::identity_channel(&layout).unwrap();
        let scaled = id.choi() * C64::new(0.5, 0.0);
        let report = validate_cptp_matrix(&scaled, 2, 2).unwrap();
        assert!(!report.is_cptp());
        assert!((report.tp_residual - 0.5 * (2.0f64).sqrt()).abs() < 1e-12);
        assert!(ChoiChannel::new(layout.clone(), layout, scaled).is_err());
    }

    #[test]
    fn replace_channel_prepares_sigma() {
        let mut s = Sampler::new(2);
        let sigma = s
            .random_density(&SystemLayout::new(&[("A", 2), ("Co", 2)]).unwrap(), 4)
            .unwrap();
        let in_layout = qubit("C");
        let rep = ChoiChannel::replace_with(&in_layout, &sigma).unwrap();
        let rho = s
            .random_density(&SystemLayout::new(&[("B", 2), ("C", 2)]).unwrap(), 4)
            .unwrap();
        let out = rep.apply(&rho).unwrap();
        // Output should be σ_{A,Co} ⊗ ρ_B up to ordering.
        let rho_b = rho.reduce(&["B"]).unwrap();
        let expect = sigma.tensor(&rho_b).unwrap();
        let got = out.reorder(&["A", "Co", "B"]).unwrap();
        assert!(frobenius_distance(got.matrix(), expect.matrix()) < 1e-9);
    }

    #[test]
    fn random_dilated_channel_validates_and_matches_kraus_action() {
        let mut s = Sampler::new(3);
        let in_layout = qubit("C");
        let out_layout = SystemLayout::new(&[("A", 2), ("Co", 2)]).unwrap();
        let ch = random_channel(&mut s, &in_layout, &out_layout, 3);
        assert!(ch.validate().unwrap().is_cptp());

        let full = SystemLayout::new(&[("B", 2), ("C", 2)]).unwrap();
        let rho = s.random_density(&full, 4).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert_eq!(out.layout().labels(), vec!["A", "Co", "B"]);

        // Oracle: explicit Kraus-sum evaluation K ⊗ I_B acting on the reordered input.
        let kraus = ch.kraus_ops().unwrap();
        let (xr, _) = reorder_systems(rho.matrix(), rho.layout(), &["C", "B"]).unwrap();
        let mut expect = CMat::zeros(8, 8);
        for k in &kraus {
            let big = kron(k, &identity(2)).unwrap();
            expect += &big * &xr * big.adjoint();
        }
        assert!(frobenius_distance(out.matrix(), &expect) < 1e-9);
    }

    #[test]
    fn choi_kraus_round_trip() {
        let mut s = Sampler::new(4);
        let in_layout = qubit("C");
        let out_layout = qubit("Co");
        let ch = random_channel(&mut s, &in_layout, &out_layout, 2);
        let kraus = ch.kraus_ops().unwrap();
        let back = ChoiChannel::from_kraus(&in_layout, &out_layout, &kraus).unwrap();
        assert!(frobenius_distance(back.choi(), ch.choi()) < 1e-8);
    }

    #[test]
    fn stinespring_reproduces_apply() {
        let mut s = Sampler::new(5);
        let in_layout = qubit("C");
        let out_layout = SystemLayout::new(&[("A", 2), ("Co", 2)]).unwrap();
        let ch = random_channel(&mut s, &in_layout, &out_layout, 2);
        let (v, d_env) = ch.stinespring().unwrap();
        assert!(d_env <= 4);
        // V must be an isometry.
        assert!(crate::linalg::unitarity_defect(&v) < 1e-9);

        let rho = s.random_density(&in_layout, 2).unwrap();
        let dilated = &v * rho.matrix() * v.adjoint();
        let dilated_layout = SystemLayout::new(&[("A", 2), ("Co", 2), ("env", d_env)]).unwrap();
        let (reduced, _) = partial_trace(&dilated, &dilated_layout, &["A", "Co"]).unwrap();
        let direct = ch.apply(&rho).unwrap();
        assert!(frobenius_distance(&reduced, direct.matrix()) < 1e-8);
    }

    #[test]
    fn stinespring_of_identity_is_trivial() {
        let layout = qubit("C");
        let id = ChoiChannel::identity_channel(&layout).unwrap();
        let (v, d_env) = id.stinespring().unwrap();
        assert_eq!(d_env, 1);
        // Up to a global phase the isometry is the identity map.
        let phase = v[(0, 0)] / C64::new(v[(0, 0)].norm(), 0.0);
        assert!(frobenius_distance(&(v / phase), &identity(2)) < 1e-9);
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let a = ChoiChannel::identity_channel(&qubit("X")).unwrap();
        let b = ChoiChannel::identity_channel(&qubit("Y")).unwrap();
        let joint = a.tensor(&b).unwrap();
        let big = ChoiChannel::identity_channel(&SystemLayout::new(&[("X", 2), ("Y", 2)]).unwrap())
            .unwrap();
        assert!(frobenius_distance(joint.choi(), big.choi()) < 1e-12);
    }

    #[test]
    fn tensor_commutes_with_apply_on_products() {
        let mut s = Sampler::new(6);
        let ch1 = random_channel(&mut s, &qubit("C"), &qubit("Co"), 2);
        let ch2 = random_channel(&mut s, &qubit("D"), &qubit("Do"), 2);
        let rho = s.random_density(&qubit("C"), 2).unwrap();
        let omega = s.random_density(&qubit("D"), 2).unwrap();
        let joint = ch1.tensor(&ch2).unwrap();
        let left = joint.apply(&rho.tensor(&omega).unwrap()).unwrap();
        let right = ch1
            .apply(&rho)
            .unwrap()
            .tensor(&ch2.apply(&omega).unwrap())
            .unwrap();
        assert!(frobenius_distance(left.matrix(), right.matrix()) < 1e-9);
    }

    #[test]
    fn mix_interpolates_linearly() {
        let mut s = Sampler::new(7);
        let ch1 = random_channel(&mut s, &qubit("C"), &qubit("Co"), 2);
        let ch2 = random_channel(&mut s, &qubit("C"), &qubit("Co"), 2);
        assert!(frobenius_distance(ch1.mix(&ch2, 1.0).unwrap().choi(), ch1.choi()) < 1e-12);
        assert!(frobenius_distance(ch1.mix(&ch2, 0.0).unwrap().choi(), ch2.choi()) < 1e-12);
        assert!(ch1.mix(&ch2, 1.5).is_err());

        let lambda = 0.3;
        let mixed = ch1.mix(&ch2, lambda).unwrap();
        let rho = s.random_density(&qubit("C"), 2).unwrap();
        let lhs = mixed.apply(&rho).unwrap();
        let rhs = ch1.apply(&rho).unwrap().matrix() * C64::new(lambda, 0.0)
            + ch2.apply(&rho).unwrap().matrix() * C64::new(1.0 - lambda, 0.0);
        assert!(frobenius_distance(lhs.matrix(), &rhs) < 1e-10);
    }

    #[test]
    fn petz_of_factorized_state_prepares_marginal() {
        let mut s = Sampler::new(8);
        let rho_a = s.random_density(&qubit("A"), 2).unwrap();
        let rho_c = s.random_density(&qubit("C"), 2).unwrap();
        let rho_ac = rho_a.tensor(&rho_c).unwrap();
        let petz = petz_recovery(&rho_ac, &["A"], &["C"]).unwrap();
        // On a factorized input the transpose channel acts as X ↦ ρ_A ⊗ X.
        let x = s.random_density(&qubit("C"), 2).unwrap();
        let out = petz.apply(&x).unwrap();
        let expect = rho_a.tensor(&x).unwrap();
        assert!(frobenius_distance(out.matrix(), expect.matrix()) < 1e-9);
    }

    #[test]
    fn petz_recovers_markov_state_exactly() {
        let mut s = Sampler::new(9);
        let rho_ac1 = s
            .random_density(&SystemLayout::new(&[("A", 2), ("C1", 2)]).unwrap(), 4)
            .unwrap();
        let rho_c2b = s
            .random_density(&SystemLayout::new(&[("C2", 2), ("B", 2)]).unwrap(), 4)
            .unwrap();
        let rho = rho_ac1
            .tensor(&rho_c2b)
            .unwrap()
            .reorder(&["A", "B", "C1", "C2"])
            .unwrap();
        let rho_ac = rho.reduce(&["A", "C1", "C2"]).unwrap();
        let petz = petz_recovery(&rho_ac, &["A"], &["C1", "C2"]).unwrap();
        let rho_bc = rho.reduce(&["B", "C1", "C2"]).unwrap();
        let recovered = petz.apply(&rho_bc).unwrap();
        let target = rho.reorder(&["A", "C1", "C2", "B"]).unwrap();
        assert!(frobenius_distance(recovered.matrix(), target.matrix()) < 1e-8);
        assert!(fidelity(&recovered, &target).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn petz_handles_rank_deficient_conditioning_system() {
        // ρ_AC with C supported on |0⟩ only; off-support weight must be routed
        // to ρ_AC so the channel stays trace-preserving.
        let zero = basis_vec(2, 0);
        let plus = CVec::from_vec(vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let psi = crate::tensor::kron_vec(&plus, &zero).unwrap();
        let layout = SystemLayout::new(&[("A", 2), ("C", 2)]).unwrap();
        let rho_ac = PureState::new(layout, psi).unwrap().density().unwrap();
        let petz = petz_recovery(&rho_ac, &["A"], &["C"]).unwrap();
        assert!(petz.validate().unwrap().is_cptp());
        // Input entirely outside supp(ρ_C): output is ρ_AC itself.
        let one = basis_vec(2, 1);
        let x = LabeledState::new(qubit("C"), &one * one.adjoint()).unwrap();
        let out = petz.apply(&x).unwrap();
        assert!(frobenius_distance(out.matrix(), rho_ac.matrix()) < 1e-9);
    }

    #[test]
    fn adjoint_action_is_hs_adjoint_of_apply() {
        let mut s = Sampler::new(10);
        let in_layout = qubit("C");
        let out_layout = SystemLayout::new(&[("A", 2), ("Co", 2)]).unwrap();
        let ch = random_channel(&mut s, &in_layout, &out_layout, 2);
        let full = SystemLayout::new(&[("C", 2), ("B", 2)]).unwrap();
        let x = s.random_density(&full, 4).unwrap();
        let (xm, _) = reorder_systems(x.matrix(), x.layout(), &["C", "B"]).unwrap();
        let xr = reshape_state_for_action(&xm, 2, 2);

        let g = {
            let raw = s.ginibre(8, 8);
            hermitian_part(&raw)
        };
        let (y, _) = ch.apply_matrix(x.matrix(), x.layout()).unwrap();
        let lhs = crate::tensor::re_inner(&g, &y);
        let adj = adjoint_action_from_reshaped(&g, &xr, 2, 4, 2);
        let rhs = crate::tensor::re_inner(&adj, ch.choi());
        assert!((lhs - rhs).abs() < 1e-9, "lhs {lhs} rhs {rhs}");
    }
}
