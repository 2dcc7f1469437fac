//! Recoverability measures of a tripartite state `ρ_ABC`: fidelity of
//! recovery, relative entropy of recovery, and the hypothesis-testing variant,
//! all defined by optimizing over recovery channels `R: C → A⊗C` applied to
//! `ρ_BC`. Also: multi-copy regrouping, finite-copy regularization estimates,
//! the inequality-chain report, the recovered-set closure suite, and the
//! promise-problem decision gate.
//!
//! Every optimizer run is seeded and deterministic. Channel optimization goes
//! through [`crate::convex::maximize_concave`] with the Petz transpose channel
//! of `ρ_AC` supplied as the first start: on exactly recoverable states it
//! certifies the optimum immediately against the objective's upper bound.

use crate::channels::{
    adjoint_action_from_reshaped, petz_recovery, reshape_choi_for_action,
    reshape_state_for_action, unreshape_action_output, ChoiChannel,
};
use crate::convex::{
    maximize_concave, np_test, ChoiFeasibleSet, ConcaveObjective, EngineOptions,
};
use crate::error::{Error, Result};
use crate::linalg::{herm_eigen_unchecked, psd_project, sqrtm_psd};
use crate::sample::Sampler;
use crate::states::{
    check_partition, cqmi, fidelity_matrices, log2_trace_gradient, relative_entropy_matrices,
    root_fidelity_matrices, LabeledState,
};
use crate::tensor::{
    frobenius_distance, hermitian_part, identity, kron, partial_trace, reorder_systems, CMat,
    SystemLayout, C64,
};

/// Residual tolerance for the closure-suite identity checks.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Default decision-gate tolerance around the promise thresholds.
pub const DECISION_TOL_DEFAULT: f64 = 1e-4;

/// Options shared by all measure computations.
#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    /// Stationarity tolerance handed to the ascent engine.
    pub tol: f64,
    /// Seed for random restarts (and anything else sampled downstream).
    pub seed: u64,
    /// Ascent iteration cap per start.
    pub max_iters: usize,
    /// Number of seeded random restarts in addition to Petz + depolarizing.
    pub restarts: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            seed: 7,
            max_iters: 600,
            restarts: 3,
        }
    }
}

impl MeasureOptions {
    fn engine(&self) -> EngineOptions {
        EngineOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            seed: self.seed,
            random_restarts: self.restarts,
        }
    }
}

/// Result of one measure optimization.
#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    /// Measure value in natural units (fidelity in [0,1], entropies in bits).
    pub value: f64,
    /// The measure re-evaluated by applying the witness channel from scratch
    /// (self-certification; must agree with `value` within `2·tol`).
    pub certified: f64,
    /// The optimizing recovery channel.
    pub channel: ChoiChannel,
    /// Raw engine objective at the witness (`√F`, `−D`, or `β`).
    pub objective_value: f64,
    /// Total ascent iterations across starts.
    pub iterations: usize,
    /// CPTP residual of the witness Choi matrix.
    pub feasibility_residual: f64,
    /// Projected-gradient residual at the witness (0 when certified at the
    /// objective bound).
    pub stationarity_residual: f64,
    /// Whether the winning start met a convergence criterion.
    pub converged: bool,
    /// Accepted objective values of the winning start.
    pub trace: Vec<f64>,
}

/// Result of a hypothesis-testing recovery computation at one ε.
#[derive(Debug, Clone)]
pub struct HypTestReport {
    /// Type-I error budget.
    pub epsilon: f64,
    /// Optimal (maximal over recovery channels) Type-II error β.
    pub beta: f64,
    /// `−log₂ β` in bits (`+∞` if β = 0).
    pub value_bits: f64,
    /// The universal floor `−log₂(1−ε)`.
    pub floor_bits: f64,
    /// Full optimizer outcome (`value` = `value_bits`).
    pub outcome: RecoveryOutcome,
}

/// A tripartite recovery-measure problem with precomputed contraction data.
#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    state: LabeledState, // reordered to [a.., c.., b..]
    a: Vec<String>,
    b: Vec<String>,
    c: Vec<String>,
    input: LabeledState, // ρ_CB on [c.., b..]
    xr: CMat,            // input reshaped for the Choi contraction
    d_a: usize,
    d_b: usize,
    d_c: usize,
    sqrt_target: CMat,
    in_layout: SystemLayout,
    out_layout: SystemLayout,
    set: ChoiFeasibleSet,
    cqmi_bits: f64,
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(|s| s.as_str()).collect()
}

fn beta_to_bits(beta: f64) -> f64 {
    if beta > 0.0 {
        -beta.log2()
    } else {
        f64::INFINITY
    }
}

/// `−log₂(1−ε)`, the universal hypothesis-testing floor.
pub fn hyp_test_floor_bits(epsilon: f64) -> f64 {
    -(1.0 - epsilon).log2()
}

/// Binary entropy `h₂(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

impl RecoveryProblem {
    /// Sets up the problem for the partition `A|B|C` of `rho`'s subsystems.
    /// Groups must be disjoint, cover the layout, and be nonempty (use a
    /// dimension-1 subsystem for a trivial group).
    pub fn new(rho: &LabeledState, a: &[&str], b: &[&str], c: &[&str]) -> Result<Self> {
        check_partition(rho.layout(), &[a, b, c])?;
        if a.is_empty() || b.is_empty() || c.is_empty() {
            return Err(Error::InvalidArgument(
                "groups A, B, C must each contain a subsystem; model a trivial group \
                 as an explicit dimension-1 system"
                    .into(),
            ));
        }
        let cqmi_bits = cqmi(rho, a, b, c)?;
        let mut order: Vec<&str> = a.to_vec();
        order.extend(c);
        order.extend(b);
        let state = rho.reorder(&order)?;
        let d_a = state.layout().dim_of_group(a)?;
        let d_b = state.layout().dim_of_group(b)?;
        let d_c = state.layout().dim_of_group(c)?;
        let in_layout = state.layout().sublayout_ordered(c)?;
        let mut out_labels: Vec<&str> = a.to_vec();
        out_labels.extend(c);
        let out_layout = state.layout().sublayout_ordered(&out_labels)?;
        let mut keep_cb: Vec<&str> = c.to_vec();
        keep_cb.extend(b);
        let input = state.reduce(&keep_cb)?;
        let xr = reshape_state_for_action(input.matrix(), d_c, d_b);
        let sqrt_target = sqrtm_psd(state.matrix())?;
        let set = ChoiFeasibleSet::new(d_c, d_a * d_c)?;
        Ok(Self {
            state,
            a: a.iter().map(|s| s.to_string()).collect(),
            b: b.iter().map(|s| s.to_string()).collect(),
            c: c.iter().map(|s| s.to_string()).collect(),
            input,
            xr,
            d_a,
            d_b,
            d_c,
            sqrt_target,
            in_layout,
            out_layout,
            set,
            cqmi_bits,
        })
    }

    /// The problem state, reordered to `[A.., C.., B..]`.
    pub fn state(&self) -> &LabeledState {
        &self.state
    }

    /// `ρ_CB`, the recovery-channel input (with `B` as spectator).
    pub fn input(&self) -> &LabeledState {
        &self.input
    }

    /// Target matrix `ρ_ACB` in problem order.
    pub fn target_matrix(&self) -> &CMat {
        self.state.matrix()
    }

    /// The channel input layout (the `C` group).
    pub fn in_layout(&self) -> &SystemLayout {
        &self.in_layout
    }

    /// The channel output layout (`A` then `C`).
    pub fn out_layout(&self) -> &SystemLayout {
        &self.out_layout
    }

    /// Conditional mutual information `I(A;B|C)` of the state, in bits.
    pub fn cqmi_bits(&self) -> f64 {
        self.cqmi_bits
    }

    /// The feasible Choi set of recovery channels.
    pub fn feasible_set(&self) -> &ChoiFeasibleSet {
        &self.set
    }

    /// `Λ(J)` applied to `ρ_CB`: the candidate recovered state on `[A,C,B]`.
    pub fn recovered_output(&self, j: &CMat) -> CMat {
        let jr = reshape_choi_for_action(j, self.d_c, self.d_a * self.d_c);
        let yr = jr * &self.xr;
        hermitian_part(&unreshape_action_output(&yr, self.d_a * self.d_c, self.d_b))
    }

    /// Hilbert–Schmidt adjoint of `J ↦ Λ(J)(ρ_CB)` applied to a Hermitian `G`.
    pub fn adjoint(&self, g: &CMat) -> CMat {
        adjoint_action_from_reshaped(g, &self.xr, self.d_c, self.d_a * self.d_c, self.d_b)
    }

    /// The Petz transpose channel of `ρ_AC`, the canonical feasible start.
    pub fn petz_channel(&self) -> Result<ChoiChannel> {
        let mut keep_ac = refs(&self.a);
        keep_ac.extend(refs(&self.c));
        let rho_ac = self.state.reduce(&keep_ac)?;
        petz_recovery(&rho_ac, &refs(&self.a), &refs(&self.c))
    }

    /// Wraps a feasible Choi matrix into a validated channel on the problem's
    /// layouts.
    pub fn wrap_choi(&self, j: CMat) -> Result<ChoiChannel> {
        ChoiChannel::new(self.in_layout.clone(), self.out_layout.clone(), j)
    }

    /// A seeded random recovery channel (exactly feasible).
    pub fn random_channel(&self, sampler: &mut Sampler) -> Result<ChoiChannel> {
        self.wrap_choi(self.set.random_member(sampler))
    }

    /// `F(ρ_ABC, R(ρ_BC))` for a concrete channel.
    pub fn channel_fidelity(&self, channel: &ChoiChannel) -> Result<f64> {
        let (sigma, _) = channel.apply_matrix(self.input.matrix(), self.input.layout())?;
        Ok(fidelity_matrices(self.state.matrix(), &sigma)?.clamp(0.0, 1.0))
    }

    /// `D(ρ_ABC ‖ R(ρ_BC))` in bits for a concrete channel.
    pub fn channel_relative_entropy(&self, channel: &ChoiChannel) -> Result<f64> {
        let (sigma, _) = channel.apply_matrix(self.input.matrix(), self.input.layout())?;
        let (clipped, _) = psd_project(&sigma)?;
        Ok(relative_entropy_matrices(self.state.matrix(), &clipped)?.max(0.0))
    }

    /// `β_ε(ρ_ABC ‖ R(ρ_BC))` for a concrete channel.
    pub fn channel_beta(&self, channel: &ChoiChannel, epsilon: f64) -> Result<f64> {
        let (sigma, _) = channel.apply_matrix(self.input.matrix(), self.input.layout())?;
        Ok(np_test(self.state.matrix(), &sigma, epsilon)?.0)
    }

    fn run_engine(
        &self,
        obj: &dyn ConcaveObjective,
        opts: &MeasureOptions,
    ) -> Result<crate::convex::OptimizationReport<CMat>> {
        let starts = vec![self.petz_channel()?.choi().clone()];
        maximize_concave(obj, &self.set, &starts, &opts.engine())
    }

    fn outcome_from(
        &self,
        report: crate::convex::OptimizationReport<CMat>,
        value: f64,
        certified: f64,
    ) -> Result<RecoveryOutcome> {
        let channel = self.wrap_choi(report.witness)?;
        Ok(RecoveryOutcome {
            value,
            certified,
            channel,
            objective_value: report.value,
            iterations: report.iterations,
            feasibility_residual: report.feasibility_residual,
            stationarity_residual: report.stationarity_residual,
            converged: report.converged,
            trace: report.trace,
        })
    }

    /// Fidelity of recovery `F(A;B|C) = sup_R F(ρ_ABC, R(ρ_BC))`.
    pub fn fidelity_of_recovery(&self, opts: &MeasureOptions) -> Result<RecoveryOutcome> {
        let obj = RootFidelityObjective { p: self };
        let report = self.run_engine(&obj, opts)?;
        let value = (report.value * report.value).clamp(0.0, 1.0);
        let channel = self.wrap_choi(report.witness.clone())?;
        let certified = self.channel_fidelity(&channel)?;
        self.outcome_from(report, value, certified)
    }

    /// Relative entropy of recovery `D(A;B|C) = inf_R D(ρ_ABC ‖ R(ρ_BC))`,
    /// in bits.
    pub fn relative_entropy_of_recovery(&self, opts: &MeasureOptions) -> Result<RecoveryOutcome> {
        let obj = NegRelEntropyObjective { p: self };
        let report = self.run_engine(&obj, opts)?;
        let value = (-report.value).max(0.0);
        let channel = self.wrap_choi(report.witness.clone())?;
        let certified = self.channel_relative_entropy(&channel)?;
        self.outcome_from(report, value, certified)
    }

    /// Hypothesis-testing relative entropy of recovery
    /// `D_H^ε(A;B|C) = −log₂ max_R β_ε(ρ_ABC ‖ R(ρ_BC))`, in bits.
    pub fn hypothesis_testing(
        &self,
        epsilon: f64,
        opts: &MeasureOptions,
    ) -> Result<HypTestReport> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        let obj = HypTestBetaObjective { p: self, epsilon };
        let report = self.run_engine(&obj, opts)?;
        let beta = report.value.max(0.0);
        let channel = self.wrap_choi(report.witness.clone())?;
        let beta_cert = self.channel_beta(&channel, epsilon)?;
        let value_bits = beta_to_bits(beta);
        let outcome = self.outcome_from(report, value_bits, beta_to_bits(beta_cert))?;
        Ok(HypTestReport {
            epsilon,
            beta,
            value_bits,
            floor_bits: hyp_test_floor_bits(epsilon),
            outcome,
        })
    }

    /// Hypothesis-testing recovery over several ε with witness pooling: every
    /// witness channel found is re-evaluated at every ε and the best is kept,
    /// which makes the reported sequence monotone by construction.
    pub fn hypothesis_testing_sweep(
        &self,
        epsilons: &[f64],
        opts: &MeasureOptions,
    ) -> Result<Vec<HypTestReport>> {
        let mut reports: Vec<HypTestReport> = Vec::with_capacity(epsilons.len());
        for &eps in epsilons {
            reports.push(self.hypothesis_testing(eps, opts)?);
        }
        // Cache each witness's recovered output once.
        let outputs: Vec<CMat> = reports
            .iter()
            .map(|r| {
                r.outcome
                    .channel
                    .apply_matrix(self.input.matrix(), self.input.layout())
                    .map(|(m, _)| m)
            })
            .collect::<Result<_>>()?;
        for i in 0..reports.len() {
            let eps = reports[i].epsilon;
            let mut best = reports[i].beta;
            let mut best_w = None;
            for (w, sigma) in outputs.iter().enumerate() {
                let (beta_w, _) = np_test(self.state.matrix(), sigma, eps)?;
                if beta_w > best + 1e-15 {
                    best = beta_w;
                    best_w = Some(w);
                }
            }
            if let Some(w) = best_w {
                let channel = reports[w].outcome.channel.clone();
                reports[i].outcome.channel = channel;
            }
            reports[i].beta = best;
            reports[i].value_bits = beta_to_bits(best);
            reports[i].outcome.value = reports[i].value_bits;
            reports[i].outcome.certified = reports[i].value_bits;
        }
        Ok(reports)
    }
}

struct RootFidelityObjective<'a> {
    p: &'a RecoveryProblem,
}

impl ConcaveObjective for RootFidelityObjective<'_> {
    fn evaluate(&self, j: &CMat) -> Result<f64> {
        let sigma = self.p.recovered_output(j);
        root_fidelity_matrices(self.p.state.matrix(), &sigma)
    }

    fn gradient(&self, j: &CMat) -> Result<CMat> {
        let sigma = self.p.recovered_output(j);
        let s = &self.p.sqrt_target;
        let m = hermitian_part(&(s * &sigma * s));
        let eig = herm_eigen_unchecked(&m)?;
        let cutoff = eig.max_value().max(1e-30) * 1e-12;
        // d/dσ Tr√(√ρ σ √ρ) = ½ √ρ M^{-1/2} √ρ on the support of M.
        let half_inv_sqrt = eig.reassemble(|v| if v > cutoff { 0.5 / v.sqrt() } else { 0.0 });
        let grad_sigma = hermitian_part(&(s * half_inv_sqrt * s));
        Ok(self.p.adjoint(&grad_sigma))
    }

    fn upper_bound(&self) -> f64 {
        1.0
    }

    fn name(&self) -> &str {
        "root-fidelity"
    }
}

struct NegRelEntropyObjective<'a> {
    p: &'a RecoveryProblem,
}

impl ConcaveObjective for NegRelEntropyObjective<'_> {
    fn evaluate(&self, j: &CMat) -> Result<f64> {
        let sigma = self.p.recovered_output(j);
        let (clipped, _) = psd_project(&sigma)?;
        Ok(-relative_entropy_matrices(self.p.state.matrix(), &clipped)?)
    }

    fn gradient(&self, j: &CMat) -> Result<CMat> {
        let sigma = self.p.recovered_output(j);
        let (clipped, _) = psd_project(&sigma)?;
        let grad_sigma = log2_trace_gradient(self.p.state.matrix(), &clipped)?;
        Ok(self.p.adjoint(&grad_sigma))
    }

    fn upper_bound(&self) -> f64 {
        0.0
    }

    fn name(&self) -> &str {
        "negative-relative-entropy"
    }
}

struct HypTestBetaObjective<'a> {
    p: &'a RecoveryProblem,
    epsilon: f64,
}

impl ConcaveObjective for HypTestBetaObjective<'_> {
    fn evaluate(&self, j: &CMat) -> Result<f64> {
        let sigma = self.p.recovered_output(j);
        Ok(np_test(self.p.state.matrix(), &sigma, self.epsilon)?.0)
    }

    fn gradient(&self, j: &CMat) -> Result<CMat> {
        let sigma = self.p.recovered_output(j);
        let (_, q) = np_test(self.p.state.matrix(), &sigma, self.epsilon)?;
        Ok(self.p.adjoint(q.matrix()))
    }

    fn upper_bound(&self) -> f64 {
        1.0 - self.epsilon
    }

    fn name(&self) -> &str {
        "hypothesis-test-beta"
    }
}

/// Convenience wrapper over [`RecoveryProblem::fidelity_of_recovery`].
pub fn fidelity_of_recovery(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    opts: &MeasureOptions,
) -> Result<RecoveryOutcome> {
    RecoveryProblem::new(rho, a, b, c)?.fidelity_of_recovery(opts)
}

/// Convenience wrapper over [`RecoveryProblem::relative_entropy_of_recovery`].
pub fn relative_entropy_of_recovery(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    opts: &MeasureOptions,
) -> Result<RecoveryOutcome> {
    RecoveryProblem::new(rho, a, b, c)?.relative_entropy_of_recovery(opts)
}

/// Convenience wrapper over [`RecoveryProblem::hypothesis_testing`].
pub fn hypothesis_testing_recovery(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    epsilon: f64,
    opts: &MeasureOptions,
) -> Result<HypTestReport> {
    RecoveryProblem::new(rho, a, b, c)?.hypothesis_testing(epsilon, opts)
}

/// Copy-indexed labels of the three groups of a multi-copy state.
#[derive(Debug, Clone)]
pub struct CopyGroups {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
}

fn copy_labels(group: &[&str], copies: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(group.len() * copies);
    for k in 1..=copies {
        for l in group {
            out.push(format!("{l}.{k}"));
        }
    }
    out
}

/// Largest copy count supported for this partition: 3 when all three groups
/// are (at most) qubits, 2 otherwise — the recovery Choi dimension
/// `dim Cⁿ · dim AⁿCⁿ` grows too fast beyond that.
pub fn max_copies(rho: &LabeledState, a: &[&str], b: &[&str], c: &[&str]) -> Result<usize> {
    check_partition(rho.layout(), &[a, b, c])?;
    let d_a = rho.layout().dim_of_group(a)?;
    let d_b = rho.layout().dim_of_group(b)?;
    let d_c = rho.layout().dim_of_group(c)?;
    Ok(if d_a <= 2 && d_b <= 2 && d_c <= 2 { 3 } else { 2 })
}

/// `ρ^⊗n` with subsystems relabeled `"{label}.{copy}"` and regrouped into
/// contiguous `Aⁿ, Bⁿ, Cⁿ` blocks. `n = 1` returns the state unchanged with
/// its original labels.
pub fn multi_copy(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    n: usize,
) -> Result<(LabeledState, CopyGroups)> {
    check_partition(rho.layout(), &[a, b, c])?;
    if n == 0 {
        return Err(Error::InvalidArgument("copy count must be positive".into()));
    }
    if n == 1 {
        let groups = CopyGroups {
            a: a.iter().map(|s| s.to_string()).collect(),
            b: b.iter().map(|s| s.to_string()).collect(),
            c: c.iter().map(|s| s.to_string()).collect(),
        };
        return Ok((rho.clone(), groups));
    }
    let cap = max_copies(rho, a, b, c)?;
    if n > cap {
        return Err(Error::SizeLimit(format!(
            "requested {n} copies but this partition is capped at {cap}"
        )));
    }
    let labels = rho.layout().labels();
    let mut joint: Option<LabeledState> = None;
    for k in 1..=n {
        let new_names: Vec<String> = labels.iter().map(|l| format!("{l}.{k}")).collect();
        let map: Vec<(&str, &str)> = labels
            .iter()
            .zip(new_names.iter())
            .map(|(old, new)| (*old, new.as_str()))
            .collect();
        let copy = rho.relabel(&map)?;
        joint = Some(match joint {
            None => copy,
            Some(j) => j.tensor(&copy)?,
        });
    }
    let joint = joint.expect("n >= 2 here");
    let groups = CopyGroups {
        a: copy_labels(a, n),
        b: copy_labels(b, n),
        c: copy_labels(c, n),
    };
    let mut order: Vec<&str> = refs(&groups.a);
    order.extend(refs(&groups.b));
    order.extend(refs(&groups.c));
    Ok((joint.reorder(&order)?, groups))
}

/// One entry of a finite-copy regularization estimate.
#[derive(Debug, Clone)]
pub struct RegularizedEntry {
    pub n: usize,
    /// `D_H^ε` at `n` copies, in bits.
    pub value_bits: f64,
    /// `(1/n)·D_H^ε` at `n` copies, in bits per copy.
    pub per_copy_bits: f64,
    /// The full per-n solver report.
    pub report: HypTestReport,
}

/// Finite-copy sequence `(n, (1/n)·D_H^ε(Aⁿ;Bⁿ|Cⁿ))` for `n = 1..=n_max`.
/// No extrapolation is performed.
pub fn regularized_estimate(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    epsilon: f64,
    n_max: usize,
    opts: &MeasureOptions,
) -> Result<Vec<RegularizedEntry>> {
    if n_max == 0 || n_max > 3 {
        return Err(Error::InvalidArgument(format!(
            "n_max must lie in 1..=3, got {n_max}"
        )));
    }
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let (state, groups) = multi_copy(rho, a, b, c, n)?;
        let problem =
            RecoveryProblem::new(&state, &refs(&groups.a), &refs(&groups.b), &refs(&groups.c))?;
        let report = problem.hypothesis_testing(epsilon, opts)?;
        out.push(RegularizedEntry {
            n,
            value_bits: report.value_bits,
            per_copy_bits: report.value_bits / n as f64,
            report,
        });
    }
    Ok(out)
}

/// One verdict of the chain report, with the measured slack.
#[derive(Debug, Clone)]
pub struct ChainFlag {
    pub name: String,
    pub satisfied: bool,
    /// Signed margin by which the inequality holds (negative = violated
    /// beyond tolerance).
    pub slack: f64,
}

/// The inequality-chain report for one state.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub cqmi_bits: f64,
    pub neg_log2_fidelity: f64,
    pub d1_bits: f64,
    /// `D/2` at two copies, when the two-copy problem is within size limits.
    pub d2_half_bits: Option<f64>,
    /// `(ε, D_H^ε)` pairs, pooled across witnesses.
    pub dh_bits: Vec<(f64, f64)>,
    /// Observed `I − D₁` — recorded without a pass/fail verdict (no finite-n
    /// theorem orders these two).
    pub i_minus_d1_bits: f64,
    pub flags: Vec<ChainFlag>,
}

impl ChainReport {
    /// True when every flagged inequality holds.
    pub fn all_satisfied(&self) -> bool {
        self.flags.iter().all(|f| f.satisfied)
    }
}

/// Computes the measure chain (CQMI, `−log₂F`, `D₁`, optional `D₂/2`,
/// `D_H^ε` per ε) and evaluates the finite-size inequalities that are
/// literally true at n = 1.
pub fn chain_report(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    epsilons: &[f64],
    opts: &MeasureOptions,
) -> Result<ChainReport> {
    let problem = RecoveryProblem::new(rho, a, b, c)?;
    let cqmi_bits = problem.cqmi_bits();
    let f_out = problem.fidelity_of_recovery(opts)?;
    let neg_log2_fidelity = -f_out.value.max(f64::MIN_POSITIVE).log2();
    let d_out = problem.relative_entropy_of_recovery(opts)?;
    let d1_bits = d_out.value;

    // Two-copy D when the Choi side stays at most 1024.
    let d_a = problem.d_a;
    let d_c = problem.d_c;
    let two_copy_choi = d_c * d_c * (d_a * d_a * d_c * d_c);
    let d2_half_bits = if max_copies(rho, a, b, c)? >= 2 && two_copy_choi <= 1024 {
        let (state2, g2) = multi_copy(rho, a, b, c, 2)?;
        let p2 = RecoveryProblem::new(&state2, &refs(&g2.a), &refs(&g2.b), &refs(&g2.c))?;
        Some(p2.relative_entropy_of_recovery(opts)?.value / 2.0)
    } else {
        None
    };

    let dh_reports = problem.hypothesis_testing_sweep(epsilons, opts)?;
    let dh_bits: Vec<(f64, f64)> = dh_reports
        .iter()
        .map(|r| (r.epsilon, r.value_bits))
        .collect();

    let mut flags = Vec::new();
    let fr_slack = cqmi_bits - neg_log2_fidelity;
    flags.push(ChainFlag {
        name: "cqmi-dominates-neg-log2-fidelity".into(),
        satisfied: fr_slack >= -1e-6,
        slack: fr_slack,
    });
    let dom_slack = d1_bits - neg_log2_fidelity;
    flags.push(ChainFlag {
        name: "relative-entropy-dominates-neg-log2-fidelity".into(),
        satisfied: dom_slack >= -1e-6,
        slack: dom_slack,
    });
    for r in &dh_reports {
        let slack = r.value_bits - r.floor_bits;
        flags.push(ChainFlag {
            name: format!("dh-floor[eps={}]", r.epsilon),
            satisfied: slack >= -1e-9,
            slack,
        });
    }
    let mono_slack = dh_reports
        .windows(2)
        .map(|w| w[1].value_bits - w[0].value_bits)
        .fold(f64::INFINITY, f64::min);
    if dh_reports.len() >= 2 {
        flags.push(ChainFlag {
            name: "dh-nondecreasing-in-eps".into(),
            satisfied: mono_slack >= -1e-9,
            slack: mono_slack,
        });
    }
    if let Some(d2h) = d2_half_bits {
        let slack = d1_bits + 5e-5 - d2h;
        flags.push(ChainFlag {
            name: "two-copy-subadditivity".into(),
            satisfied: slack >= 0.0,
            slack: d1_bits - d2h,
        });
    }

    Ok(ChainReport {
        cqmi_bits,
        neg_log2_fidelity,
        d1_bits,
        d2_half_bits,
        dh_bits,
        i_minus_d1_bits: cqmi_bits - d1_bits,
        flags,
    })
}

/// One closure-suite check.
#[derive(Debug, Clone)]
pub struct ClosureCheck {
    pub name: String,
    /// Worst Frobenius residual observed across samples.
    pub residual: f64,
    pub passed: bool,
}

/// Results of the five recovered-set closure checks.
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub checks: Vec<ClosureCheck>,
}

impl ClosureReport {
    /// True when every check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn swapped_copy_label(label: &str) -> String {
    if let Some(base) = label.strip_suffix(".1") {
        format!("{base}.2")
    } else if let Some(base) = label.strip_suffix(".2") {
        format!("{base}.1")
    } else {
        label.to_string()
    }
}

/// Executes the five closure properties of the recovered set — convexity,
/// existence of a full-rank member, reduction from two copies to one,
/// parallel concatenation, and permutation covariance — each by building the
/// explicit member channel from the constructive proof and checking the
/// states agree within [`CLOSURE_TOL`]. The full-rank check additionally
/// requires `ρ_B` to be full rank (true for all shipped fixtures).
pub fn closure_suite(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    samples: usize,
    seed: u64,
) -> Result<ClosureReport> {
    let samples = samples.max(1);
    let p1 = RecoveryProblem::new(rho, a, b, c)?;
    let (rho2, g2) = multi_copy(rho, a, b, c, 2)?;
    let p2 = RecoveryProblem::new(&rho2, &refs(&g2.a), &refs(&g2.b), &refs(&g2.c))?;
    let mut sampler = Sampler::new(seed);
    let mut checks = Vec::with_capacity(5);

    // 1. Convexity: mixing outputs = output of the mixed channel.
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let r1 = p1.random_channel(&mut sampler)?;
        let r2 = p1.random_channel(&mut sampler)?;
        let o1 = r1.apply_matrix(p1.input.matrix(), p1.input.layout())?.0;
        let o2 = r2.apply_matrix(p1.input.matrix(), p1.input.layout())?.0;
        for lambda in [0.3, 0.7] {
            let direct = &o1 * C64::new(lambda, 0.0) + &o2 * C64::new(1.0 - lambda, 0.0);
            let mixed = r1.mix(&r2, lambda)?;
            let om = mixed.apply_matrix(p1.input.matrix(), p1.input.layout())?.0;
            worst = worst.max(frobenius_distance(&direct, &om));
        }
    }
    checks.push(ClosureCheck {
        name: "convexity".into(),
        residual: worst,
        passed: worst <= CLOSURE_TOL,
    });

    // 2. Full-rank member: trace out C, prepare the maximal mixture on AC.
    let d_ac = p1.out_layout.total_dim();
    let pi_ac = LabeledState::new(
        p1.out_layout.clone(),
        identity(d_ac) / C64::new(d_ac as f64, 0.0),
    )?;
    let r0 = ChoiChannel::replace_with(&p1.in_layout, &pi_ac)?;
    let out0 = r0.apply_matrix(p1.input.matrix(), p1.input.layout())?.0;
    let rho_b = p1.state.reduce(&refs(&p1.b))?;
    let expect0 = kron(pi_ac.matrix(), rho_b.matrix())?;
    let residual0 = frobenius_distance(&out0, &expect0);
    let min_eig = herm_eigen_unchecked(&out0)?.min_value();
    checks.push(ClosureCheck {
        name: "full-rank-member".into(),
        residual: residual0,
        passed: residual0 <= CLOSURE_TOL && min_eig > 1e-12,
    });

    // 3. Reduction: the copy-1 marginal of a recovered 2-copy state is itself
    //    recovered, by the explicit channel X ↦ Tr_{A₂C₂} R₂(X ⊗ ρ_C).
    let c1: Vec<String> = c.iter().map(|l| format!("{l}.1")).collect();
    let a1: Vec<String> = a.iter().map(|l| format!("{l}.1")).collect();
    let b1: Vec<String> = b.iter().map(|l| format!("{l}.1")).collect();
    let rho_c = p1.state.reduce(&refs(&p1.c))?;
    let rho_c2 = {
        let names: Vec<String> = p1.c.iter().map(|l| format!("{l}.2")).collect();
        let map: Vec<(&str, &str)> = p1
            .c
            .iter()
            .zip(names.iter())
            .map(|(old, new)| (old.as_str(), new.as_str()))
            .collect();
        rho_c.relabel(&map)?
    };
    let in1 = p2.state.layout().sublayout_ordered(&refs(&c1))?;
    let mut out1_labels = refs(&a1);
    out1_labels.extend(refs(&c1));
    let out1 = p2.state.layout().sublayout_ordered(&out1_labels)?;
    let mut keep1 = refs(&a1);
    keep1.extend(refs(&c1));
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let r2c = p2.random_channel(&mut sampler)?;
        let omega2 = r2c.apply_matrix(p2.input.matrix(), p2.input.layout())?;
        let mut keep_first = keep1.clone();
        keep_first.extend(refs(&b1));
        let (lhs, _) = partial_trace(&omega2.0, &omega2.1, &keep_first)?;
        let reduced = ChoiChannel::from_map(&in1, &out1, |x| {
            let embedded = kron(x, rho_c2.matrix())?;
            let (y, ylay) = r2c.apply_matrix(&embedded, r2c.in_layout())?;
            let (kept, _) = partial_trace(&y, &ylay, &keep1)?;
            Ok(kept)
        })?;
        let mut in_cb1 = refs(&c1);
        in_cb1.extend(refs(&b1));
        let input1 = p2.state.reduce(&in_cb1)?;
        let (rhs, _) = reduced.apply_matrix(input1.matrix(), input1.layout())?;
        worst = worst.max(frobenius_distance(&lhs, &rhs));
    }
    checks.push(ClosureCheck {
        name: "reduction".into(),
        residual: worst,
        passed: worst <= CLOSURE_TOL,
    });

    // 4. Concatenation: tensoring two recovered 1-copy states lands in the
    //    recovered set of the 2-copy state via the tensor channel.
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let r1 = p1.random_channel(&mut sampler)?;
        let r2 = p1.random_channel(&mut sampler)?;
        let suffix = |channel: &ChoiChannel, k: usize| -> Result<ChoiChannel> {
            let in_new: Vec<String> = p1.c.iter().map(|l| format!("{l}.{k}")).collect();
            let mut out_old = refs(&p1.a);
            out_old.extend(refs(&p1.c));
            let out_new: Vec<String> = out_old.iter().map(|l| format!("{l}.{k}")).collect();
            let in_map: Vec<(&str, &str)> = p1
                .c
                .iter()
                .zip(in_new.iter())
                .map(|(o, n)| (o.as_str(), n.as_str()))
                .collect();
            let out_map: Vec<(&str, &str)> = out_old
                .iter()
                .zip(out_new.iter())
                .map(|(o, n)| (*o, n.as_str()))
                .collect();
            channel.relabeled(&in_map, &out_map)
        };
        let joint = suffix(&r1, 1)?.tensor(&suffix(&r2, 2)?)?;
        let (omega12, lay12) = joint.apply_matrix(p2.input.matrix(), p2.input.layout())?;
        let o1 = r1.apply(&p1.input)?;
        let o2 = r2.apply(&p1.input)?;
        let relabel_copy = |state: &LabeledState, k: usize| -> Result<LabeledState> {
            let old = state.layout().labels();
            let names: Vec<String> = old.iter().map(|l| format!("{l}.{k}")).collect();
            let map: Vec<(&str, &str)> = old
                .iter()
                .zip(names.iter())
                .map(|(o, n)| (*o, n.as_str()))
                .collect();
            state.relabel(&map)
        };
        let product = relabel_copy(&o1, 1)?.tensor(&relabel_copy(&o2, 2)?)?;
        let order = lay12.labels();
        let (product_m, _) = reorder_systems(product.matrix(), product.layout(), &order)?;
        worst = worst.max(frobenius_distance(&omega12, &product_m));
    }
    checks.push(ClosureCheck {
        name: "concatenation".into(),
        residual: worst,
        passed: worst <= CLOSURE_TOL,
    });

    // 5. Permutation: swapping the two copies of a recovered state equals
    //    applying the copy-swap-conjugated channel.
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let r = p2.random_channel(&mut sampler)?;
        let (omega, olay) = r.apply_matrix(p2.input.matrix(), p2.input.layout())?;
        let swapped_order: Vec<String> = olay
            .labels()
            .iter()
            .map(|l| swapped_copy_label(l))
            .collect();
        let (lhs, _) = reorder_systems(&omega, &olay, &refs(&swapped_order))?;
        let in_swap: Vec<String> = p2
            .in_layout
            .labels()
            .iter()
            .map(|l| swapped_copy_label(l))
            .collect();
        let out_swap: Vec<String> = p2
            .out_layout
            .labels()
            .iter()
            .map(|l| swapped_copy_label(l))
            .collect();
        let conjugated = ChoiChannel::from_map(&p2.in_layout, &p2.out_layout, |x| {
            let (xs, _) = reorder_systems(x, &p2.in_layout, &refs(&in_swap))?;
            let (y, ylay) = r.apply_matrix(&xs, &p2.in_layout)?;
            let (ys, _) = reorder_systems(&y, &ylay, &refs(&out_swap))?;
            Ok(ys)
        })?;
        let (rhs, _) = conjugated.apply_matrix(p2.input.matrix(), p2.input.layout())?;
        worst = worst.max(frobenius_distance(&lhs, &rhs));
    }
    checks.push(ClosureCheck {
        name: "permutation".into(),
        residual: worst,
        passed: worst <= CLOSURE_TOL,
    });

    Ok(ClosureReport { checks })
}

/// Verdict of the promise-problem decision gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    PromiseViolated,
}

impl Verdict {
    /// Stable lowercase token for serialization.
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::PromiseViolated => "promise_violated",
        }
    }
}

/// Decision-gate result.
#[derive(Debug, Clone)]
pub struct DecisionReport {
    pub verdict: Verdict,
    pub fidelity: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
}

/// Decides the promise problem "F(A;B|C) ≥ α or F(A;B|C) ≤ β" by computing
/// the fidelity of recovery. Requires `0 < β < α < 1`. `tol` (default 1e-4)
/// absorbs solver error around the thresholds.
pub fn decide(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    alpha: f64,
    beta: f64,
    tol: Option<f64>,
    opts: &MeasureOptions,
) -> Result<DecisionReport> {
    if !(0.0 < beta && beta < alpha && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "thresholds must satisfy 0 < beta < alpha < 1, got alpha={alpha}, beta={beta}"
        )));
    }
    let tol = tol.unwrap_or(DECISION_TOL_DEFAULT);
    if tol < 0.0 {
        return Err(Error::InvalidArgument("tolerance must be nonnegative".into()));
    }
    let outcome = fidelity_of_recovery(rho, a, b, c, opts)?;
    let f = outcome.value;
    let verdict = if f >= alpha - tol {
        Verdict::Yes
    } else if f <= beta + tol {
        Verdict::No
    } else {
        Verdict::PromiseViolated
    };
    Ok(DecisionReport {
        verdict,
        fidelity: f,
        alpha,
        beta,
        tol,
    })
}
