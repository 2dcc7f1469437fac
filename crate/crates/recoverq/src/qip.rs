//! Interactive-proof simulations for the fidelity of recovery.
//!
//! Two proof systems are simulated exactly on state vectors, both for a
//! four-party pure state `|φ⟩_ABCD` (the purification of a tripartite state
//! whose recoverability is being decided):
//!
//! * **Four-message system.** The verifier sends `C` plus an ancilla `|0⟩_E`
//!   to the prover, who applies a unitary `U: C⊗E → A′⊗C′⊗F` and returns
//!   `A′, C′`. The verifier then sends `A` and the purifying system `D` along
//!   with the prover's kept register `F`; the prover applies
//!   `V: A⊗D⊗F → D′⊗G` and returns `D′`. The verifier accepts on projecting
//!   `A′BC′D′` back onto `|φ⟩`. The maximum acceptance probability over
//!   prover strategies equals the fidelity of recovery `F(A;B|C)`, so
//!   [`optimize_qip4`] is an independent algorithm for that quantity and is
//!   cross-checked against the convex-engine solver.
//!
//! * **Two-message system.** The verifier prepares a Bell pair `Φ⁺_TT′`,
//!   swaps `D↔D′` when `T=0` and `C↔C′` when `T=1` (with `C′, D′` fresh
//!   ancillas), and sends `T′C′D′` plus `|0⟩_E′` to the prover, who applies
//!   one unitary `P: T′⊗C′⊗D′⊗E′ → T″⊗C″⊗D″⊗A″⊗F″` and returns
//!   `T″C″D″A″`. After return swaps (`D↔D″` at `T=0`; `C↔C″` and `A↔A″` at
//!   `T=1`) the verifier performs the incomplete Bell measurement on `TT″`
//!   and accepts on `Φ⁺`. No strategy exceeds `(1 + √F(A;B|C))/2`, and the
//!   honest prover assembled from a four-message witness attains it.
//!
//! All simulations are pure linear algebra on explicit vectors, so every
//! reported acceptance value is a physically realizable probability up to
//! roundoff. Optimizer runs are seeded and deterministic.

use crate::channels::{petz_recovery, ChoiChannel};
use crate::convex::OptimizationReport;
use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, polar_unitary, unitarity_defect, unitary_completion};
use crate::measures::{self, MeasureOptions};
use crate::sample::Sampler;
use crate::states::PureState;
use crate::tensor::{
    apply_index_permutation, apply_op_to_vector, basis_vec, controlled_swap_permutation,
    hermitian_part, identity, kron_vec, project_bra, reorder_vector, CMat, CVec, SystemLayout,
    C64,
};

/// Maximum allowed `‖W†W − I‖_F` for a matrix passed off as unitary.
pub const UNITARY_TOL: f64 = 1e-9;

/// Alternating-optimizer sweep cap per start.
const SWEEP_CAP: usize = 300;

/// Disagreement with the convex-engine value that triggers extra restarts and,
/// if it persists, the discrepancy flag.
const DISCREPANCY_TOL: f64 = 1e-3;

/// Number of fresh seeded restarts attempted on a discrepancy.
const DISCREPANCY_RESTARTS: usize = 5;

/// Canonical four-party labels every protocol state is reduced to.
const FOUR: [&str; 4] = ["A", "B", "C", "D"];

// ---------------------------------------------------------------------------
// Four-party state plumbing
// ---------------------------------------------------------------------------

/// Regroups a multipartite pure state into the canonical four parties
/// `A, B, C, D` (each of product dimension), reordering subsystems as needed.
///
/// The groups must be disjoint and together cover every subsystem; `a`, `b`,
/// and `c` must be nonempty, while `d` may be empty (yielding a trivial
/// one-dimensional purifying party).
pub fn merge_four(
    phi: &PureState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    d: &[&str],
) -> Result<PureState> {
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(Error::InvalidArgument(
            "groups A, B, C must each contain at least one subsystem".into(),
        ));
    }
    let mut order: Vec<&str> = Vec::new();
    for group in [a, b, c, d] {
        for label in group {
            if order.contains(label) {
                return Err(Error::DuplicateLabel((*label).to_string()));
            }
            order.push(label);
        }
    }
    if order.len() != phi.layout().len() {
        return Err(Error::Layout(format!(
            "groups name {} subsystems, state has {}",
            order.len(),
            phi.layout().len()
        )));
    }
    let (v, _) = reorder_vector(phi.vector(), phi.layout(), &order)?;
    let dim_of = |group: &[&str]| -> Result<usize> {
        let mut d = 1usize;
        for label in group {
            d *= phi.layout().dim_of(label)?;
        }
        Ok(d)
    };
    let layout = SystemLayout::new(&[
        ("A", dim_of(a)?),
        ("B", dim_of(b)?),
        ("C", dim_of(c)?),
        ("D", dim_of(d)?),
    ])?;
    PureState::new(layout, v)
}

/// Reorders a canonical state to `[A, B, C, D]` and returns its vector,
/// layout, and party dimensions.
fn canonical_four(phi: &PureState) -> Result<(CVec, SystemLayout, [usize; 4])> {
    let (v, layout) = reorder_vector(phi.vector(), phi.layout(), &FOUR)?;
    let dims = [
        layout.dim_of("A")?,
        layout.dim_of("B")?,
        layout.dim_of("C")?,
        layout.dim_of("D")?,
    ];
    Ok((v, layout, dims))
}

/// Reorders the state vector into a `rows × cols` matrix over the two listed
/// subsystem groups (which together must cover the layout).
fn matricize(v: &CVec, layout: &SystemLayout, rows: &[&str], cols: &[&str]) -> Result<CMat> {
    let mut order = rows.to_vec();
    order.extend_from_slice(cols);
    let (vr, _) = reorder_vector(v, layout, &order)?;
    let d_r = layout.dim_of_group(rows)?;
    let d_c = layout.dim_of_group(cols)?;
    Ok(CMat::from_fn(d_r, d_c, |i, j| vr[i * d_c + j]))
}

// ---------------------------------------------------------------------------
// Four-message prover strategies
// ---------------------------------------------------------------------------

/// A prover strategy for the four-message proof system: the first-round
/// unitary `U: C⊗E → A′⊗C′⊗F` and the second-round unitary
/// `V: A⊗D⊗F → D′⊗G`.
///
/// Dimension bookkeeping is forced by unitarity: `dim E = dim A · dim F` and
/// `dim G = dim A · dim F`. The final register `G` stays with the prover; the
/// acceptance probability already maximizes over its contents, so no state on
/// `G` is ever parameterized.
#[derive(Debug, Clone)]
pub struct ProverStrategy4 {
    u: CMat,
    v: CMat,
    d_a: usize,
    d_c: usize,
    d_d: usize,
    d_e: usize,
    d_f: usize,
    d_g: usize,
}

impl ProverStrategy4 {
    /// Validates and wraps a strategy. `u` must be unitary on `C⊗E` (mapping
    /// to `A′⊗C′⊗F`) and `v` unitary on `A⊗D⊗F` (mapping to `D′⊗G`), both
    /// within [`UNITARY_TOL`]; `d_e` must be a multiple of `d_a`.
    pub fn new(u: CMat, v: CMat, d_a: usize, d_c: usize, d_d: usize, d_e: usize) -> Result<Self> {
        if d_a == 0 || d_c == 0 || d_d == 0 || d_e == 0 {
            return Err(Error::InvalidArgument(
                "strategy dimensions must be positive".into(),
            ));
        }
        if d_e % d_a != 0 {
            return Err(Error::InvalidArgument(format!(
                "ancilla dim {d_e} is not a multiple of dim A = {d_a}, \
                 so U cannot be square"
            )));
        }
        let d_f = d_e / d_a;
        let d_g = d_a * d_f;
        let d_u = d_c * d_e;
        let d_v = d_a * d_d * d_f;
        if u.nrows() != d_u || u.ncols() != d_u {
            return Err(Error::Shape(format!(
                "U is {}x{}, expected {d_u}x{d_u}",
                u.nrows(),
                u.ncols()
            )));
        }
        if v.nrows() != d_v || v.ncols() != d_v {
            return Err(Error::Shape(format!(
                "V is {}x{}, expected {d_v}x{d_v}",
                v.nrows(),
                v.ncols()
            )));
        }
        let defect = unitarity_defect(&u).max(unitarity_defect(&v));
        if defect > UNITARY_TOL {
            return Err(Error::InvalidArgument(format!(
                "strategy matrices have unitarity defect {defect:.3e}, tolerance {UNITARY_TOL:.0e}"
            )));
        }
        Ok(Self {
            u,
            v,
            d_a,
            d_c,
            d_d,
            d_e,
            d_f,
            d_g,
        })
    }

    /// First-round unitary `U: C⊗E → A′⊗C′⊗F`.
    pub fn u(&self) -> &CMat {
        &self.u
    }

    /// Second-round unitary `V: A⊗D⊗F → D′⊗G`.
    pub fn v(&self) -> &CMat {
        &self.v
    }

    /// `(dim A, dim C, dim D)` of the verifier systems the strategy fits.
    pub fn party_dims(&self) -> (usize, usize, usize) {
        (self.d_a, self.d_c, self.d_d)
    }

    /// Prover ancilla dimensions `(dim E, dim F, dim G)`.
    pub fn ancilla_dims(&self) -> (usize, usize, usize) {
        (self.d_e, self.d_f, self.d_g)
    }

    /// Worst unitarity defect of the two round matrices.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.u).max(unitarity_defect(&self.v))
    }

    /// The recovery pair carried by this strategy: the isometries
    /// `U_iso: C → A⊗C⊗F` (first round acting on `|0⟩_E`) and
    /// `V_iso: D → A⊗D⊗F` (adjoint second round acting on the optimal final
    /// prover vector on `G`). These are the isometries the honest two-message
    /// prover is assembled from.
    pub fn recovery_isometries(&self, phi: &PureState) -> Result<(CMat, CMat)> {
        let u_iso = CMat::from_fn(self.d_a * self.d_c * self.d_f, self.d_c, |row, c| {
            self.u[(row, c * self.d_e)]
        });
        let y = qip4_residual(phi, self)?;
        let n = y.norm();
        let g = if n > 1e-12 {
            y / C64::new(n, 0.0)
        } else {
            basis_vec(self.d_g, 0)
        };
        // V_iso = V† (I_D ⊗ |g⟩): feeding the prover's optimal final vector
        // back through the second round recovers A⊗D⊗F from D.
        let vh = self.v.adjoint();
        let d_out = self.d_a * self.d_d * self.d_f;
        let mut v_iso = CMat::zeros(d_out, self.d_d);
        for dp in 0..self.d_d {
            for (gg, gv) in g.iter().enumerate() {
                let col = dp * self.d_g + gg;
                for row in 0..d_out {
                    v_iso[(row, dp)] += vh[(row, col)] * gv;
                }
            }
        }
        Ok((u_iso, v_iso))
    }
}

/// Acceptance probability of the four-message proof system: the verifier's
/// projection of `A′BC′D′` back onto `|φ⟩` after both prover rounds,
/// `‖⟨φ|_{A′BC′D′} V U |φ⟩_{ABCD}|0⟩_E‖²`.
pub fn simulate_qip4(phi: &PureState, s: &ProverStrategy4) -> Result<f64> {
    let y = qip4_residual(phi, s)?;
    Ok(y.norm_squared().clamp(0.0, 1.0))
}

/// The unnormalized post-protocol vector on the prover register `G`; the
/// acceptance probability is its squared norm.
fn qip4_residual(phi: &PureState, s: &ProverStrategy4) -> Result<CVec> {
    let (v0, layout, [d_a, _, d_c, d_d]) = canonical_four(phi)?;
    if (d_a, d_c, d_d) != (s.d_a, s.d_c, s.d_d) {
        return Err(Error::Layout(format!(
            "strategy fits parties (A,C,D) of dims ({},{},{}), state has ({d_a},{d_c},{d_d})",
            s.d_a, s.d_c, s.d_d
        )));
    }
    let x = kron_vec(&v0, &basis_vec(s.d_e, 0))?;
    let lx = layout.concat(&SystemLayout::new(&[("E", s.d_e)])?)?;
    let (x, lx) = apply_op_to_vector(
        &s.u,
        &["C", "E"],
        &[("A'", d_a), ("C'", d_c), ("F", s.d_f)],
        &x,
        &lx,
    )?;
    let (x, lx) = apply_op_to_vector(
        &s.v,
        &["A", "D", "F"],
        &[("D'", d_d), ("G", s.d_g)],
        &x,
        &lx,
    )?;
    let (y, _) = project_bra(&v0, &["A'", "B", "C'", "D'"], &x, &lx)?;
    Ok(y)
}

/// Orthonormalizes the columns of a numerically near-isometric matrix
/// (symmetric Löwdin orthogonalization), preserving it to first order.
fn loewdin(b: &CMat) -> Result<CMat> {
    let gram = hermitian_part(&(b.adjoint() * b));
    let eig = herm_eigen(&gram)?;
    let inv_sqrt = eig.reassemble(|l| if l > 1e-12 { l.powf(-0.5) } else { 0.0 });
    Ok(b * inv_sqrt)
}

/// Assembles a four-message strategy from a recovery channel `R: C → A⊗C`:
/// the first round is a dilation of `R` (acting as `R` on the `|0⟩_E` slice)
/// and the second round is the optimal partner for that first round, so the
/// strategy's acceptance probability equals the channel's recovery fidelity
/// `F(ρ_ABC, R(ρ_BC))`.
pub fn strategy_from_channel(phi: &PureState, channel: &ChoiChannel) -> Result<ProverStrategy4> {
    let (v0, layout, [d_a, _, d_c, d_d]) = canonical_four(phi)?;
    if channel.in_layout().total_dim() != d_c
        || channel.out_layout().total_dim() != d_a * d_c
    {
        return Err(Error::Layout(format!(
            "channel maps dim {} to dim {}, expected {d_c} to {}",
            channel.in_layout().total_dim(),
            channel.out_layout().total_dim(),
            d_a * d_c
        )));
    }
    let (v_st, d_env) = channel.stinespring()?;
    let v_st = loewdin(&v_st)?;
    let d_f = d_env;
    let d_e = d_a * d_f;
    let prescribed: Vec<(usize, CVec)> = (0..d_c)
        .map(|c| (c * d_e, v_st.column(c).into_owned()))
        .collect();
    let u = unitary_completion(&prescribed, d_c * d_e)?;
    let (v, _) = optimal_partner(&v0, &layout, [d_a, d_d], &u, d_e)?;
    ProverStrategy4::new(u, v, d_a, d_c, d_d, d_e)
}

/// Given the first-round unitary, builds the globally optimal second-round
/// unitary together with the acceptance value it achieves.
///
/// With the first round applied, the acceptance is `‖y‖²` where
/// `y_g = Tr[V_g M]`, `V_g = (I_{D′}⊗⟨g|_G) V`, and `M` is the overlap
/// operator between the evolved state and the target (matricized over
/// `ADF × D`). Since `Σ_g V_g†V_g = I`, the maximum over unitary `V` is the
/// squared nuclear norm `‖M‖₁²`, attained by carrying the left singular
/// directions of `M` onto its right ones at `g = 0`.
fn optimal_partner(
    v0: &CVec,
    layout: &SystemLayout,
    [d_a, d_d]: [usize; 2],
    u: &CMat,
    d_e: usize,
) -> Result<(CMat, f64)> {
    let d_f = d_e / d_a;
    let d_g = d_a * d_f;
    let x = kron_vec(v0, &basis_vec(d_e, 0))?;
    let lx = layout.concat(&SystemLayout::new(&[("E", d_e)])?)?;
    let d_c = layout.dim_of("C")?;
    let (x, lx) = apply_op_to_vector(u, &["C", "E"], &[("A'", d_a), ("C'", d_c), ("F", d_f)], &x, &lx)?;
    // Overlap operator: evolved state matricized over ADF × A′BC′ against the
    // target matricized over D × ABC (primed axes pair with unprimed ones).
    let x_mat = matricize(&x, &lx, &["A", "D", "F"], &["A'", "B", "C'"])?;
    let phi_mat = matricize(v0, layout, &["D"], &["A", "B", "C"])?;
    let m = &x_mat * phi_mat.adjoint();
    let svd = m.clone().svd(true, true);
    let p = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Decomposition("svd did not return U".into()))?;
    let q_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Decomposition("svd did not return V^†".into()))?;
    let nuclear: f64 = svd.singular_values.iter().sum();
    let k = svd.singular_values.len();
    let d_adf = d_a * d_d * d_f;
    let mut w_cols: Vec<(usize, CVec)> = Vec::with_capacity(k);
    let mut p_cols: Vec<(usize, CVec)> = Vec::with_capacity(k);
    for i in 0..k {
        let q_i = q_t.row(i).adjoint();
        w_cols.push((i, kron_vec(&q_i, &basis_vec(d_g, 0))?));
        p_cols.push((i, p.column(i).into_owned()));
    }
    let w_full = unitary_completion(&w_cols, d_d * d_g)?;
    let p_full = unitary_completion(&p_cols, d_adf)?;
    let v = w_full * p_full.adjoint();
    Ok((v, (nuclear * nuclear).clamp(0.0, 1.0)))
}

/// Given the second-round unitary, builds the globally optimal first-round
/// unitary (the step symmetric to [`optimal_partner`]).
///
/// The acceptance amplitude is linear in `U`: `amp = Σ U[o,i] C2[o,i]` with
/// `C2` the partial overlap of the back-propagated target against the input,
/// so the maximizer is the conjugated polar unitary of `C2`.
fn optimal_first_round(
    v0: &CVec,
    layout: &SystemLayout,
    [d_a, d_d]: [usize; 2],
    v: &CMat,
    d_e: usize,
) -> Result<CMat> {
    let d_f = d_e / d_a;
    let d_g = d_a * d_f;
    let w = kron_vec(v0, &basis_vec(d_g, 0))?;
    let lw = layout.concat(&SystemLayout::new(&[("G", d_g)])?)?;
    let (w, lw) = apply_op_to_vector(
        &v.adjoint(),
        &["D", "G"],
        &[("~A", d_a), ("~D", d_d), ("~F", d_f)],
        &w,
        &lw,
    )?;
    // Bra side: U's outputs A′,C′,F pair with the target's A, C and the
    // back-propagated ~F; ket side: the input's A, B, D pair with ~A, B, ~D.
    let w_mat = matricize(&w, &lw, &["A", "C", "~F"], &["~A", "B", "~D"])?;
    let x0 = kron_vec(v0, &basis_vec(d_e, 0))?;
    let lx0 = layout.concat(&SystemLayout::new(&[("E", d_e)])?)?;
    let x0_mat = matricize(&x0, &lx0, &["C", "E"], &["A", "B", "D"])?;
    let c2 = w_mat.conjugate() * x0_mat.transpose();
    Ok(polar_unitary(&c2)?.conjugate())
}

/// Result of [`optimize_qip4`]: the alternating-optimizer report plus the
/// convex-engine cross-check of the same quantity.
#[derive(Debug, Clone)]
pub struct Qip4Report {
    /// Headline estimate of the maximum acceptance probability. Both solvers
    /// produce feasible witnesses (hence lower bounds), so under a
    /// discrepancy this is the larger of the two values.
    pub value: f64,
    /// `F(A;B|C)` of the reduced state per the convex-engine solver.
    pub engine_value: f64,
    /// Set when the two solvers still disagree by more than `1e-3` after the
    /// extra seeded restarts.
    pub discrepancy: bool,
    /// Diagnostics and witness of the alternating optimizer.
    pub report: OptimizationReport<ProverStrategy4>,
}

struct AlternationRun {
    value: f64,
    u: CMat,
    v: CMat,
    d_e: usize,
    trace: Vec<f64>,
    sweeps: usize,
    converged: bool,
    last_step: f64,
}

/// Runs the alternating closed-form updates from a fixed first-round start.
/// Both half-steps are global maximizations of their round, so the recorded
/// objective trace is monotone nondecreasing up to roundoff.
fn alternate(
    v0: &CVec,
    layout: &SystemLayout,
    [d_a, d_d]: [usize; 2],
    u0: CMat,
    d_e: usize,
    tol: f64,
) -> Result<AlternationRun> {
    let mut u = u0;
    let (mut v, mut value) = optimal_partner(v0, layout, [d_a, d_d], &u, d_e)?;
    let mut trace = vec![value];
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    let mut sweeps = 0;
    for _ in 0..SWEEP_CAP {
        sweeps += 1;
        u = optimal_first_round(v0, layout, [d_a, d_d], &v, d_e)?;
        let (v_next, value_next) = optimal_partner(v0, layout, [d_a, d_d], &u, d_e)?;
        v = v_next;
        last_step = value_next - value;
        value = value_next;
        trace.push(value);
        if last_step.abs() < tol || value >= 1.0 - 1e-12 {
            converged = true;
            break;
        }
    }
    Ok(AlternationRun {
        value,
        u,
        v,
        d_e,
        trace,
        sweeps,
        converged,
        last_step,
    })
}

/// Maximizes the four-message acceptance probability by alternating the two
/// closed-form round updates from several starts (the recovery-channel
/// dilation of the transpose channel first, then the identity, then seeded
/// random unitaries), and cross-checks the result against the convex-engine
/// fidelity of recovery of the reduced state.
///
/// Sweeps stop once the per-sweep improvement drops below `opts.tol`. On
/// disagreement with the engine beyond `1e-3`, five extra seeded restarts are
/// attempted; if the gap persists the report carries a discrepancy flag and
/// the larger of the two values (each is a feasible lower bound).
pub fn optimize_qip4(phi: &PureState, opts: &MeasureOptions) -> Result<Qip4Report> {
    let (v0, layout, [d_a, _, d_c, d_d]) = canonical_four(phi)?;
    let rho = phi.density()?;
    let rho_abc = rho.reduce(&["A", "B", "C"])?;
    let d_e_std = d_a * d_c;
    let mut starts: Vec<(CMat, usize)> = Vec::new();
    let rho_ac = rho_abc.reduce(&["A", "C"])?;
    let petz = petz_recovery(&rho_ac, &["A"], &["C"])?;
    let petz_strategy = strategy_from_channel(phi, &petz)?;
    starts.push((petz_strategy.u.clone(), petz_strategy.d_e));
    starts.push((identity(d_c * d_e_std), d_e_std));
    let mut sampler = Sampler::derived(opts.seed, 41);
    for _ in 0..opts.restarts {
        starts.push((sampler.haar_unitary(d_c * d_e_std), d_e_std));
    }

    let mut best: Option<AlternationRun> = None;
    let mut total_sweeps = 0;
    let run_start = |u0: CMat, d_e: usize, total: &mut usize| -> Result<Option<AlternationRun>> {
        let run = alternate(&v0, &layout, [d_a, d_d], u0, d_e, opts.tol)?;
        *total += run.sweeps;
        Ok(Some(run))
    };
    for (u0, d_e) in starts {
        if let Some(run) = run_start(u0, d_e, &mut total_sweeps)? {
            if best.as_ref().is_none_or(|b| run.value > b.value) {
                best = Some(run);
            }
        }
    }
    let engine = measures::fidelity_of_recovery(&rho_abc, &["A"], &["B"], &["C"], opts)?;
    let mut best = best.expect("at least one start always runs");
    if (best.value - engine.value).abs() > DISCREPANCY_TOL {
        let mut extra = Sampler::derived(opts.seed, 43);
        for _ in 0..DISCREPANCY_RESTARTS {
            let u0 = extra.haar_unitary(d_c * d_e_std);
            if let Some(run) = run_start(u0, d_e_std, &mut total_sweeps)? {
                if run.value > best.value {
                    best = run;
                }
            }
        }
    }
    let discrepancy = (best.value - engine.value).abs() > DISCREPANCY_TOL;
    let strategy = ProverStrategy4::new(best.u, best.v, d_a, d_c, d_d, best.d_e)?;
    let feasibility = strategy.unitarity_defect();
    let value = if discrepancy {
        best.value.max(engine.value)
    } else {
        best.value
    };
    Ok(Qip4Report {
        value,
        engine_value: engine.value,
        discrepancy,
        report: OptimizationReport {
            value: best.value,
            witness: strategy,
            iterations: total_sweeps,
            feasibility_residual: feasibility,
            stationarity_residual: best.last_step.abs(),
            trace: best.trace,
            converged: best.converged,
        },
    })
}

/// `|F(A;B|C) − F(A;B|D)|` for a four-party pure state: the fidelity of
/// recovery computed on the reduction that traces out `D` versus the one that
/// traces out `C`. The two agree for every pure state, so the gap measures
/// solver error only.
pub fn duality_gap(phi: &PureState, opts: &MeasureOptions) -> Result<f64> {
    let rho = phi.density()?;
    let rho_abc = rho.reduce(&["A", "B", "C"])?;
    let rho_abd = rho.reduce(&["A", "B", "D"])?;
    let f_c = measures::fidelity_of_recovery(&rho_abc, &["A"], &["B"], &["C"], opts)?;
    let f_d = measures::fidelity_of_recovery(&rho_abd, &["A"], &["B"], &["D"], opts)?;
    Ok((f_c.value - f_d.value).abs())
}

// ---------------------------------------------------------------------------
// Two-message prover strategies
// ---------------------------------------------------------------------------

/// A prover strategy for the two-message proof system: one unitary
/// `P: T′⊗C′⊗D′⊗E′ → T″⊗C″⊗D″⊗A″⊗F″`, where `T′` is the verifier's Bell
/// half, `C′, D′` are the swap ancillas, and `E′` is the prover's workspace.
///
/// Output registers match their unprimed counterparts in size (`A″ ≅ A`,
/// `C″ ≅ C`, `D″ ≅ D`); `dim F″ = dim E′ / dim A` is forced by unitarity.
#[derive(Debug, Clone)]
pub struct ProverStrategy2 {
    p: CMat,
    d_a: usize,
    d_c: usize,
    d_d: usize,
    d_ep: usize,
    d_fpp: usize,
}

impl ProverStrategy2 {
    /// Validates and wraps a strategy; `p` must be unitary within
    /// [`UNITARY_TOL`] on `2·d_c·d_d·d_ep` dimensions and `d_ep` a multiple
    /// of `d_a`.
    pub fn new(p: CMat, d_a: usize, d_c: usize, d_d: usize, d_ep: usize) -> Result<Self> {
        if d_a == 0 || d_c == 0 || d_d == 0 || d_ep == 0 {
            return Err(Error::InvalidArgument(
                "strategy dimensions must be positive".into(),
            ));
        }
        if d_ep % d_a != 0 {
            return Err(Error::InvalidArgument(format!(
                "workspace dim {d_ep} is not a multiple of dim A = {d_a}, \
                 so P cannot be square"
            )));
        }
        let d_fpp = d_ep / d_a;
        let d_p = 2 * d_c * d_d * d_ep;
        if p.nrows() != d_p || p.ncols() != d_p {
            return Err(Error::Shape(format!(
                "P is {}x{}, expected {d_p}x{d_p}",
                p.nrows(),
                p.ncols()
            )));
        }
        let defect = unitarity_defect(&p);
        if defect > UNITARY_TOL {
            return Err(Error::InvalidArgument(format!(
                "P has unitarity defect {defect:.3e}, tolerance {UNITARY_TOL:.0e}"
            )));
        }
        Ok(Self {
            p,
            d_a,
            d_c,
            d_d,
            d_ep,
            d_fpp,
        })
    }

    /// The standard prover workspace dimension `dim A · dim C · dim D`: large
    /// enough for the honest prover (and then some) while keeping the global
    /// simulation within the tensor cap at desk scale.
    pub fn standard_workspace(d_a: usize, d_c: usize, d_d: usize) -> usize {
        d_a * d_c * d_d
    }

    /// The prover unitary.
    pub fn p(&self) -> &CMat {
        &self.p
    }

    /// `(dim A, dim C, dim D)` of the verifier systems the strategy fits.
    pub fn party_dims(&self) -> (usize, usize, usize) {
        (self.d_a, self.d_c, self.d_d)
    }

    /// `(dim E′, dim F″)`.
    pub fn workspace_dims(&self) -> (usize, usize) {
        (self.d_ep, self.d_fpp)
    }
}

/// Acceptance probability of the two-message proof system: Bell pair on
/// `TT′`, controlled swaps out, one prover unitary, controlled swaps back,
/// and the incomplete Bell measurement on `TT″`.
pub fn simulate_qip2(phi: &PureState, s: &ProverStrategy2) -> Result<f64> {
    let (v0, layout4, [d_a, _, d_c, d_d]) = canonical_four(phi)?;
    if (d_a, d_c, d_d) != (s.d_a, s.d_c, s.d_d) {
        return Err(Error::Layout(format!(
            "strategy fits parties (A,C,D) of dims ({},{},{}), state has ({d_a},{d_c},{d_d})",
            s.d_a, s.d_c, s.d_d
        )));
    }
    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut bell = CVec::zeros(4);
    bell[0] = inv_sqrt2;
    bell[3] = inv_sqrt2;
    let mut v = kron_vec(&bell, &v0)?;
    let mut layout = SystemLayout::new(&[("T", 2), ("T'", 2)])?.concat(&layout4)?;
    for (label, dim) in [("C'", d_c), ("D'", d_d), ("E'", s.d_ep)] {
        v = kron_vec(&v, &basis_vec(dim, 0))?;
        layout = layout.concat(&SystemLayout::new(&[(label, dim)])?)?;
    }
    let swap = |v: &CVec, layout: &SystemLayout, pair: (&str, &str), val: u8| -> Result<CVec> {
        let map = controlled_swap_permutation(layout, "T", pair, val)?;
        Ok(apply_index_permutation(v, &map))
    };
    v = swap(&v, &layout, ("D", "D'"), 0)?;
    v = swap(&v, &layout, ("C", "C'"), 1)?;
    let (mut v, layout) = apply_op_to_vector(
        &s.p,
        &["T'", "C'", "D'", "E'"],
        &[
            ("T''", 2),
            ("C''", d_c),
            ("D''", d_d),
            ("A''", d_a),
            ("F''", s.d_fpp),
        ],
        &v,
        &layout,
    )?;
    v = swap(&v, &layout, ("D", "D''"), 0)?;
    v = swap(&v, &layout, ("C", "C''"), 1)?;
    v = swap(&v, &layout, ("A", "A''"), 1)?;
    let (y, _) = project_bra(&bell, &["T", "T''"], &v, &layout)?;
    Ok(y.norm_squared().clamp(0.0, 1.0))
}

/// The acceptance amplitude of a recovery pair: the overlap
/// `⟨φ|_{ABCD′} V_iso† U_iso |φ⟩` with `U_iso: C → A⊗C⊗F` applied to the
/// state's `C` and `V_iso: D → A⊗D⊗F` absorbed on the bra side. Its squared
/// modulus is the four-message acceptance of the pair, and its real part
/// enters the honest two-message value `(1 + Re amp)/2`.
pub fn pair_amplitude(phi: &PureState, u_iso: &CMat, v_iso: &CMat) -> Result<C64> {
    let (v0, layout, [d_a, _, d_c, d_d]) = canonical_four(phi)?;
    let d_f = pair_f_dim(u_iso, v_iso, d_a, d_c, d_d)?;
    let (x, lx) = apply_op_to_vector(
        u_iso,
        &["C"],
        &[("A+", d_a), ("C+", d_c), ("F+", d_f)],
        &v0,
        &layout,
    )?;
    let (x, lx) = apply_op_to_vector(&v_iso.adjoint(), &["A", "D", "F+"], &[("D+", d_d)], &x, &lx)?;
    let (y, _) = project_bra(&v0, &["A+", "B", "C+", "D+"], &x, &lx)?;
    Ok(y[0])
}

/// Validates the shapes of a recovery pair and returns the shared `dim F`.
fn pair_f_dim(u_iso: &CMat, v_iso: &CMat, d_a: usize, d_c: usize, d_d: usize) -> Result<usize> {
    if u_iso.ncols() != d_c || u_iso.nrows() % (d_a * d_c) != 0 {
        return Err(Error::Shape(format!(
            "U isometry is {}x{}, expected ({d_a}·{d_c}·f)x{d_c}",
            u_iso.nrows(),
            u_iso.ncols()
        )));
    }
    let d_f = u_iso.nrows() / (d_a * d_c);
    if v_iso.ncols() != d_d || v_iso.nrows() != d_a * d_d * d_f {
        return Err(Error::Shape(format!(
            "V isometry is {}x{}, expected {}x{d_d}",
            v_iso.nrows(),
            v_iso.ncols(),
            d_a * d_d * d_f
        )));
    }
    let iso_defect = |m: &CMat| -> f64 {
        let k = m.ncols();
        (m.adjoint() * m - identity(k)).norm()
    };
    let defect = iso_defect(u_iso).max(iso_defect(v_iso));
    if defect > UNITARY_TOL {
        return Err(Error::InvalidArgument(format!(
            "recovery pair has isometry defect {defect:.3e}, tolerance {UNITARY_TOL:.0e}"
        )));
    }
    Ok(d_f)
}

/// Assembles the honest two-message prover from a recovery pair (as produced
/// by [`ProverStrategy4::recovery_isometries`] on an optimized strategy).
///
/// On the `T′ = 0` branch the prover runs `V_iso` on `D′` (reconstructing
/// `A″` and `D″`); on `T′ = 1` it runs `U_iso` on `C′` (reconstructing `A″`
/// and `C″`). The prescribed isometry columns are extended to a unitary
/// deterministically, and the resulting strategy's acceptance equals
/// `(1 + Re amp)/2` for the pair amplitude — `(1 + √F_pair)/2` when the pair
/// is phase-aligned, as optimizer witnesses are.
pub fn honest_prover_qip2(phi: &PureState, u_iso: &CMat, v_iso: &CMat) -> Result<ProverStrategy2> {
    let (_, _, [d_a, _, d_c, d_d]) = canonical_four(phi)?;
    let d_f = pair_f_dim(u_iso, v_iso, d_a, d_c, d_d)?;
    let d_ep = ProverStrategy2::standard_workspace(d_a, d_c, d_d);
    let d_fpp = d_ep / d_a;
    if d_f > d_fpp {
        return Err(Error::InvalidArgument(format!(
            "recovery pair keeps a register of dim {d_f}, larger than the \
             standard prover workspace slot {d_fpp}"
        )));
    }
    let d_p = 2 * d_c * d_d * d_ep;
    // Output index (t″, c″, d″, a″, f″), most significant first.
    let out_idx = |t: usize, c: usize, d: usize, a: usize, f: usize| -> usize {
        (((t * d_c + c) * d_d + d) * d_a + a) * d_fpp + f
    };
    let mut prescribed: Vec<(usize, CVec)> = Vec::with_capacity(d_d + d_c);
    for dp in 0..d_d {
        // Input (t′=0, c′=0, d′=dp, e′=0).
        let col_idx = dp * d_ep;
        let mut col = CVec::zeros(d_p);
        for a in 0..d_a {
            for d in 0..d_d {
                for f in 0..d_f {
                    col[out_idx(0, 0, d, a, f)] = v_iso[(a * d_d * d_f + d * d_f + f, dp)];
                }
            }
        }
        prescribed.push((col_idx, col));
    }
    for cp in 0..d_c {
        // Input (t′=1, c′=cp, d′=0, e′=0).
        let col_idx = (d_c + cp) * d_d * d_ep;
        let mut col = CVec::zeros(d_p);
        for a in 0..d_a {
            for c in 0..d_c {
                for f in 0..d_f {
                    col[out_idx(1, c, 0, a, f)] = u_iso[(a * d_c * d_f + c * d_f + f, cp)];
                }
            }
        }
        prescribed.push((col_idx, col));
    }
    let p = unitary_completion(&prescribed, d_p)?;
    ProverStrategy2::new(p, d_a, d_c, d_d, d_ep)
}

/// Result of [`qip2_bound_check`]: every simulated strategy's acceptance
/// against the proof-system bound `(1 + √F(A;B|C))/2`.
#[derive(Debug, Clone)]
pub struct Qip2Report {
    /// Convex-engine fidelity of recovery of the reduced state.
    pub fidelity: f64,
    /// `(1 + √fidelity)/2`.
    pub bound: f64,
    /// Acceptance of the honest prover assembled from the optimized
    /// four-message witness.
    pub honest_value: f64,
    /// Acceptance of the do-nothing prover (`P = I`, returning the swap
    /// ancillas unchanged).
    pub identity_value: f64,
    /// Largest acceptance over the Haar-random strategies (`0` if none were
    /// requested).
    pub max_random_value: f64,
    /// Number of Haar-random strategies simulated.
    pub num_random: usize,
    /// Whether every simulated acceptance (honest, identity, random) stayed
    /// below `bound + 1e-6`.
    pub all_within_bound: bool,
}

/// Sweeps prover strategies for the two-message system — the honest prover,
/// the do-nothing prover, and `num_random` seeded Haar-random unitaries — and
/// checks each acceptance against `(1 + √F)/2` with `F` from the
/// convex-engine solver.
pub fn qip2_bound_check(
    phi: &PureState,
    num_random: usize,
    seed: u64,
    opts: &MeasureOptions,
) -> Result<Qip2Report> {
    let (_, _, [d_a, _, d_c, d_d]) = canonical_four(phi)?;
    let rho_abc = phi.density()?.reduce(&["A", "B", "C"])?;
    let fidelity = measures::fidelity_of_recovery(&rho_abc, &["A"], &["B"], &["C"], opts)?.value;
    let bound = 0.5 * (1.0 + fidelity.max(0.0).sqrt());

    let optimum = optimize_qip4(phi, opts)?;
    let (u_iso, v_iso) = optimum.report.witness.recovery_isometries(phi)?;
    let honest = honest_prover_qip2(phi, &u_iso, &v_iso)?;
    let honest_value = simulate_qip2(phi, &honest)?;

    let d_ep = ProverStrategy2::standard_workspace(d_a, d_c, d_d);
    let d_p = 2 * d_c * d_d * d_ep;
    let identity_strategy = ProverStrategy2::new(identity(d_p), d_a, d_c, d_d, d_ep)?;
    let identity_value = simulate_qip2(phi, &identity_strategy)?;

    let mut sampler = Sampler::derived(seed, 47);
    let mut max_random_value = 0.0f64;
    for _ in 0..num_random {
        let s = ProverStrategy2::new(sampler.haar_unitary(d_p), d_a, d_c, d_d, d_ep)?;
        max_random_value = max_random_value.max(simulate_qip2(phi, &s)?);
    }
    let cap = bound + 1e-6;
    let all_within_bound =
        honest_value <= cap && identity_value <= cap && max_random_value <= cap;
    Ok(Qip2Report {
        fidelity,
        bound,
        honest_value,
        identity_value,
        max_random_value,
        num_random,
        all_within_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::RecoveryProblem;
    use crate::states::LabeledState;
    use crate::tensor::kron;

    fn opts() -> MeasureOptions {
        MeasureOptions {
            restarts: 2,
            ..MeasureOptions::default()
        }
    }

    fn ghz4() -> PureState {
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut v = CVec::zeros(8);
        v[0] = inv_sqrt2;
        v[7] = inv_sqrt2;
        let layout = SystemLayout::new(&[("A", 2), ("B", 2), ("C", 2)]).unwrap();
        let phi = PureState::new(layout, v).unwrap();
        merge_four(&phi, &["A"], &["B"], &["C"], &[]).unwrap()
    }

    /// Purified short chain: `ρ_AC1 ⊗ ψ_C2B` with a rank-2 marginal, so the
    /// conditional mutual information over `C = C1 C2` vanishes exactly.
    fn markov_pure4(seed: u64) -> PureState {
        let mut sampler = Sampler::new(seed);
        let rho_ac1 = sampler
            .random_density(&SystemLayout::new(&[("A", 2), ("C1", 2)]).unwrap(), 2)
            .unwrap();
        let psi = sampler
            .random_pure(&SystemLayout::new(&[("C2", 2), ("B", 2)]).unwrap())
            .unwrap()
            .density()
            .unwrap();
        let m = kron(rho_ac1.matrix(), psi.matrix()).unwrap();
        let layout = SystemLayout::new(&[("A", 2), ("C1", 2), ("C2", 2), ("B", 2)]).unwrap();
        let rho = LabeledState::new(layout, m).unwrap();
        let phi = crate::states::purify(&rho, "D").unwrap();
        merge_four(&phi, &["A"], &["B"], &["C1", "C2"], &["D"]).unwrap()
    }

    fn random_four_qubit(seed: u64) -> PureState {
        let mut sampler = Sampler::new(seed);
        let layout =
            SystemLayout::new(&[("A", 2), ("B", 2), ("C", 2), ("D", 2)]).unwrap();
        sampler.random_pure(&layout).unwrap()
    }

    #[test]
    fn transpose_channel_strategy_is_exact_on_a_short_chain() {
        let phi = markov_pure4(21);
        let rho_abc = phi.density().unwrap().reduce(&["A", "B", "C"]).unwrap();
        let rho_ac = rho_abc.reduce(&["A", "C"]).unwrap();
        let petz = petz_recovery(&rho_ac, &["A"], &["C"]).unwrap();
        let s = strategy_from_channel(&phi, &petz).unwrap();
        let accept = simulate_qip4(&phi, &s).unwrap();
        assert!((accept - 1.0).abs() <= 1e-8, "acceptance {accept}");
    }

    #[test]
    fn channel_strategy_matches_channel_fidelity_for_arbitrary_channels() {
        let problems = [
            (markov_pure4(31), 5u64),
            (random_four_qubit(32), 6u64),
        ];
        for (phi, seed) in problems {
            let rho_abc = phi.density().unwrap().reduce(&["A", "B", "C"]).unwrap();
            let problem = RecoveryProblem::new(&rho_abc, &["A"], &["B"], &["C"]).unwrap();
            let mut sampler = Sampler::new(seed);
            for _ in 0..3 {
                let channel = problem.random_channel(&mut sampler).unwrap();
                let direct = problem.channel_fidelity(&channel).unwrap();
                let s = strategy_from_channel(&phi, &channel).unwrap();
                let accept = simulate_qip4(&phi, &s).unwrap();
                assert!(
                    (accept - direct).abs() <= 1e-8,
                    "protocol {accept} vs channel fidelity {direct}"
                );
            }
        }
    }

    #[test]
    fn optimizer_matches_the_convex_engine_on_ghz() {
        let phi = ghz4();
        let out = optimize_qip4(&phi, &opts()).unwrap();
        assert!(!out.discrepancy, "disagrees with engine: {out:?}");
        assert!(
            (out.value - 0.5).abs() <= 1e-3,
            "GHZ acceptance {}",
            out.value
        );
        for w in out.report.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "trace not monotone: {:?}", out.report.trace);
        }
        assert!(out.report.converged);
    }

    #[test]
    fn optimizer_reaches_one_on_recoverable_states() {
        let phi = markov_pure4(22);
        let out = optimize_qip4(&phi, &opts()).unwrap();
        assert!((out.value - 1.0).abs() <= 1e-6, "chain value {}", out.value);
        assert!(!out.discrepancy);

        let mut sampler = Sampler::new(9);
        let qubit = |s: &mut Sampler, l: &str| {
            s.random_density(&SystemLayout::new(&[(l, 2)]).unwrap(), 2)
                .unwrap()
        };
        let a = qubit(&mut sampler, "A");
        let b = qubit(&mut sampler, "B");
        let c = qubit(&mut sampler, "C");
        let m = kron(&kron(a.matrix(), b.matrix()).unwrap(), c.matrix()).unwrap();
        let layout = SystemLayout::new(&[("A", 2), ("B", 2), ("C", 2)]).unwrap();
        let rho = LabeledState::new(layout, m).unwrap();
        let phi = crate::states::purify(&rho, "D").unwrap();
        let phi = merge_four(&phi, &["A"], &["B"], &["C"], &["D"]).unwrap();
        let out = optimize_qip4(&phi, &opts()).unwrap();
        assert!(
            (out.value - 1.0).abs() <= 1e-6,
            "product value {}",
            out.value
        );
    }

    #[test]
    fn optimizer_is_deterministic() {
        let phi = ghz4();
        let first = optimize_qip4(&phi, &opts()).unwrap();
        let second = optimize_qip4(&phi, &opts()).unwrap();
        assert_eq!(first.value.to_bits(), second.value.to_bits());
        assert_eq!(first.report.trace.len(), second.report.trace.len());
        for (x, y) in first.report.trace.iter().zip(&second.report.trace) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn duality_gap_is_small_on_pure_states() {
        let o = opts();
        assert!(duality_gap(&ghz4(), &o).unwrap() <= 2e-3);
        assert!(duality_gap(&random_four_qubit(17), &o).unwrap() <= 2e-3);
    }

    #[test]
    fn honest_two_message_prover_attains_the_bound() {
        let o = opts();
        // Exactly recoverable chain: bound (1+1)/2 = 1.
        let phi = markov_pure4(23);
        let out = optimize_qip4(&phi, &o).unwrap();
        let (u_iso, v_iso) = out.report.witness.recovery_isometries(&phi).unwrap();
        let honest = honest_prover_qip2(&phi, &u_iso, &v_iso).unwrap();
        let accept = simulate_qip2(&phi, &honest).unwrap();
        assert!((accept - 1.0).abs() <= 1e-6, "chain acceptance {accept}");

        // GHZ: bound (1+√0.5)/2.
        let phi = ghz4();
        let out = optimize_qip4(&phi, &o).unwrap();
        let (u_iso, v_iso) = out.report.witness.recovery_isometries(&phi).unwrap();
        let honest = honest_prover_qip2(&phi, &u_iso, &v_iso).unwrap();
        let accept = simulate_qip2(&phi, &honest).unwrap();
        let amp = pair_amplitude(&phi, &u_iso, &v_iso).unwrap();
        let f_pair = amp.norm_sqr();
        assert!(
            (accept - 0.5 * (1.0 + f_pair.sqrt())).abs() <= 1e-6,
            "acceptance {accept} vs pair bound {}",
            0.5 * (1.0 + f_pair.sqrt())
        );
        let expected = 0.5 * (1.0 + 0.5f64.sqrt());
        assert!((accept - expected).abs() <= 1e-3, "acceptance {accept}");
    }

    #[test]
    fn no_sampled_strategy_beats_the_two_message_bound() {
        let report = qip2_bound_check(&ghz4(), 20, 5, &opts()).unwrap();
        assert!(report.all_within_bound, "{report:?}");
        assert!(
            (report.honest_value - report.bound).abs() <= 1e-6,
            "honest {} vs bound {}",
            report.honest_value,
            report.bound
        );
        assert!(report.max_random_value > 0.0);
    }

    #[test]
    fn acceptance_probabilities_are_probabilities() {
        let phi = random_four_qubit(41);
        let mut sampler = Sampler::new(42);
        let d_e = 2 * 2;
        for _ in 0..4 {
            let u = sampler.haar_unitary(2 * d_e);
            let v = sampler.haar_unitary(2 * 2 * (d_e / 2));
            let s = ProverStrategy4::new(u, v, 2, 2, 2, d_e).unwrap();
            let p = simulate_qip4(&phi, &s).unwrap();
            assert!((0.0..=1.0).contains(&p), "qip4 value {p}");
        }
    }

    #[test]
    fn strategies_reject_bad_inputs() {
        let mut sampler = Sampler::new(3);
        let not_unitary = sampler.ginibre(8, 8);
        assert!(ProverStrategy4::new(not_unitary.clone(), identity(4), 2, 2, 1, 4).is_err());
        assert!(ProverStrategy2::new(not_unitary, 2, 2, 1, 2).is_err());
        // Ancilla not a multiple of dim A.
        assert!(ProverStrategy4::new(identity(6), identity(3), 2, 2, 1, 3).is_err());

        let phi = ghz4();
        assert!(merge_four(&phi, &["A"], &["B"], &["A"], &[]).is_err());
        assert!(merge_four(&phi, &["A"], &["B"], &[], &[]).is_err());
    }
}
