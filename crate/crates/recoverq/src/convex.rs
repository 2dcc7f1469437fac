//! Projected-gradient ascent of concave objectives over the set of CPTP Choi
//! matrices, plus the Neyman–Pearson optimal-test subroutine used by the
//! hypothesis-testing measure.
//!
//! The feasible set `{J ⪰ 0, Tr_out J = I_in}` is the intersection of the PSD
//! cone with an affine subspace, so projections are computed by Dykstra's
//! alternating scheme (the affine side needs no correction term). The ascent
//! uses Barzilai–Borwein step seeding with Armijo backtracking along the
//! feasible segment between the current point and its projected trial point,
//! which keeps every accepted iterate feasible and the objective monotone.

use crate::channels::{kraus_to_choi, validate_cptp_matrix};
use crate::error::{Error, Result};
use crate::linalg::{herm_eigen_unchecked, psd_project};
use crate::sample::Sampler;
use crate::tensor::{frobenius_distance, hermitian_part, identity, kron, re_inner, CMat, C64};

/// Dykstra sweep cap before projection is declared non-convergent.
pub const MAX_PROJECTION_SWEEPS: usize = 5000;

/// Residual level at which a projection that exhausted its sweep budget is
/// still accepted as a best-effort iterate. Near rank-deficient faces the
/// alternating sweeps slow to a crawl; iterates inside this floor are safe
/// for the ascent (objectives clip negative parts), and final witnesses are
/// repaired to strict feasibility before being reported, so the floor only
/// bounds the noise of intermediate quantities such as the stationarity
/// residual.
pub const PROJECTION_STALL_TOL: f64 = 1e-4;

/// Ascent stops early once the value is within this gap of a known bound.
pub const EARLY_EXIT_GAP: f64 = 1e-9;

/// Armijo sufficient-increase parameter.
const ARMIJO_SIGMA: f64 = 1e-4;

/// A concave function of a Choi matrix to be maximized over the CPTP set.
pub trait ConcaveObjective {
    /// Objective value at `j` (assumed feasible up to projection tolerance).
    fn evaluate(&self, j: &CMat) -> Result<f64>;

    /// Supergradient at `j` (Hermitian, same shape as `j`).
    fn gradient(&self, j: &CMat) -> Result<CMat>;

    /// A certified upper bound on the optimum, used for early exit.
    /// Defaults to `+∞` (no early exit).
    fn upper_bound(&self) -> f64 {
        f64::INFINITY
    }

    /// Short name for diagnostics.
    fn name(&self) -> &str;
}

/// The feasible set of Choi matrices for channels `in → out`.
#[derive(Debug, Clone, Copy)]
pub struct ChoiFeasibleSet {
    d_in: usize,
    d_out: usize,
}

impl ChoiFeasibleSet {
    /// Feasible set for the given input/output dimensions.
    pub fn new(d_in: usize, d_out: usize) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidArgument(
                "channel dimensions must be positive".into(),
            ));
        }
        Ok(Self { d_in, d_out })
    }

    /// Input dimension.
    pub fn d_in(&self) -> usize {
        self.d_in
    }

    /// Output dimension.
    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Side length of the Choi matrices in this set.
    pub fn choi_dim(&self) -> usize {
        self.d_in * self.d_out
    }

    /// The fully depolarizing channel `J = I_in ⊗ I_out / d_out`, an interior
    /// point of the set.
    pub fn interior_point(&self) -> CMat {
        identity(self.choi_dim()) / C64::new(self.d_out as f64, 0.0)
    }

    /// A seeded random member, built from a Haar Stinespring isometry so it is
    /// exactly feasible.
    pub fn random_member(&self, sampler: &mut Sampler) -> CMat {
        let d_env = self.d_in.min(4).max(1);
        let v = sampler.haar_isometry(self.d_out * d_env, self.d_in);
        let kraus: Vec<CMat> = (0..d_env)
            .map(|k| CMat::from_fn(self.d_out, self.d_in, |o, i| v[(o * d_env + k, i)]))
            .collect();
        kraus_to_choi(&kraus, self.d_in, self.d_out)
            .expect("Kraus shapes are correct by construction")
    }

    /// Frobenius projection onto the feasible set via Dykstra's algorithm,
    /// returning the projected matrix (exactly trace-preserving, PSD within
    /// the target) and the final sweep residual.
    pub fn project(&self, j: &CMat, tol: f64) -> Result<(CMat, f64)> {
        let n = self.choi_dim();
        if j.nrows() != n || j.ncols() != n {
            return Err(Error::Shape(format!(
                "Choi matrix is {}x{}, expected {n}",
                j.nrows(),
                j.ncols()
            )));
        }
        let target = tol.min(1e-9).max(1e-14);
        let mut x = hermitian_part(j);
        let mut correction = CMat::zeros(n, n);
        let mut delta = f64::INFINITY;
        for _ in 0..MAX_PROJECTION_SWEEPS {
            let z = &x + &correction;
            let (y, _) = psd_project(&z)?;
            correction = z - &y;
            let next = project_tp(&y, self.d_in, self.d_out);
            delta = frobenius_distance(&next, &y);
            x = next;
            if delta <= target {
                return Ok((x, delta));
            }
        }
        // Near rank-deficient faces the alternating sweeps converge linearly
        // with a poor rate; accept a stalled projection while it is still
        // comfortably inside the channel acceptance gate.
        let report = validate_cptp_matrix(&x, self.d_in, self.d_out)?;
        if report.psd_violation <= PROJECTION_STALL_TOL && report.tp_residual <= PROJECTION_STALL_TOL
        {
            return Ok((x, delta));
        }
        Err(Error::Convergence(format!(
            "Choi projection stalled after {MAX_PROJECTION_SWEEPS} sweeps: \
             sweep residual {delta:.3e}, psd violation {:.3e}, tp residual {:.3e}",
            report.psd_violation, report.tp_residual
        )))
    }
}

/// Orthogonal projection onto the affine subspace `Tr_out J = I_in`:
/// `J ↦ J − (Tr_out J − I_in) ⊗ I_out / d_out`.
pub fn project_tp(j: &CMat, d_in: usize, d_out: usize) -> CMat {
    let marginal = crate::channels::trace_out_output(j, d_in, d_out);
    let defect = marginal - identity(d_in);
    let correction = kron(&defect, &identity(d_out)).expect("dimensions already validated")
        / C64::new(d_out as f64, 0.0);
    j - correction
}

/// Options controlling the projected-gradient engine.
#[derive(Debug, Clone, Copy)]
pub struct EngineOptions {
    /// Relative step-size tolerance for declaring stationarity.
    pub tol: f64,
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Seed for the random restarts.
    pub seed: u64,
    /// Number of seeded random feasible starts appended to the caller's.
    pub random_restarts: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 600,
            seed: 7,
            random_restarts: 3,
        }
    }
}

/// Outcome of a maximization run.
#[derive(Debug, Clone)]
pub struct OptimizationReport<W> {
    /// Best objective value found.
    pub value: f64,
    /// The maximizing witness.
    pub witness: W,
    /// Total ascent iterations across all starts.
    pub iterations: usize,
    /// `max(psd violation, tp residual)` of the witness.
    pub feasibility_residual: f64,
    /// `‖P(J + ∇f(J)) − J‖_F` at the witness.
    pub stationarity_residual: f64,
    /// Accepted objective values of the winning start, in order.
    pub trace: Vec<f64>,
    /// Whether the winning start terminated by a convergence criterion
    /// (stationarity, vanishing gain, or certified bound) rather than the
    /// iteration cap.
    pub converged: bool,
}

impl<W> OptimizationReport<W> {
    /// Re-wraps the witness, keeping all diagnostics.
    pub fn map_witness<V>(self, f: impl FnOnce(W) -> V) -> OptimizationReport<V> {
        OptimizationReport {
            value: self.value,
            witness: f(self.witness),
            iterations: self.iterations,
            feasibility_residual: self.feasibility_residual,
            stationarity_residual: self.stationarity_residual,
            trace: self.trace,
            converged: self.converged,
        }
    }
}

struct SingleRun {
    value: f64,
    witness: CMat,
    iterations: usize,
    trace: Vec<f64>,
    converged: bool,
}

/// Projects `x + scale·g`, shrinking `scale` whenever the projection itself
/// fails to converge: a long trial step can park the projector in a region
/// where Dykstra's rate collapses, while the segment toward the feasible `x`
/// is benign. Returns the projected point and the scale that succeeded.
fn project_shrinking(
    set: &ChoiFeasibleSet,
    x: &CMat,
    g: &CMat,
    mut scale: f64,
    tol: f64,
) -> Result<(CMat, f64)> {
    loop {
        let trial = x + g * C64::new(scale, 0.0);
        match set.project(&trial, tol) {
            Ok((projected, _)) => return Ok((projected, scale)),
            Err(Error::Convergence(_)) if scale > 1e-8 => scale *= 0.25,
            Err(e) => return Err(e),
        }
    }
}

fn ascend_from<O: ConcaveObjective + ?Sized>(
    obj: &O,
    set: &ChoiFeasibleSet,
    start: &CMat,
    opts: &EngineOptions,
) -> Result<SingleRun> {
    let (mut x, _) = set.project(start, opts.tol)?;
    let mut f = obj.evaluate(&x)?;
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut step = 1.0f64;
    let mut previous: Option<(CMat, CMat)> = None;
    let bound = obj.upper_bound();

    for _ in 0..opts.max_iters {
        if f >= bound - EARLY_EXIT_GAP {
            converged = true;
            break;
        }
        iterations += 1;
        let g = obj.gradient(&x)?;
        if let Some((x_prev, g_prev)) = &previous {
            let s_vec = &x - x_prev;
            let y_vec = &g - g_prev;
            let ss = re_inner(&s_vec, &s_vec);
            let sy = re_inner(&s_vec, &y_vec).abs();
            if sy > 1e-18 && ss.is_finite() {
                step = (ss / sy).clamp(1e-6, 1e6);
            }
        }
        // Trust cap: the feasible set has Frobenius diameter ≤ 2·d_in, so a
        // trial point further than a few diameters only burdens the
        // projection (piecewise-linear objectives drive the quasi-Newton step
        // to its clamp).
        let step_cap = 4.0 * set.d_in() as f64;
        let g_norm = g.norm();
        let effective = if step * g_norm > step_cap {
            step_cap / g_norm.max(1e-300)
        } else {
            step
        };
        let projected = match project_shrinking(set, &x, &g, effective, opts.tol) {
            Ok((projected, _)) => projected,
            // Even the shortest trial step stalls the projector: keep the
            // best feasible iterate found so far instead of failing the run.
            Err(Error::Convergence(_)) => break,
            Err(e) => return Err(e),
        };
        let direction = &projected - &x;
        let dir_norm = direction.norm();
        let gain = re_inner(&g, &direction);
        if dir_norm <= opts.tol * x.norm().max(1.0) || gain <= 1e-14 * f.abs().max(1.0) {
            converged = true;
            break;
        }

        // Backtrack along the feasible segment x + t·direction, t ∈ (0, 1].
        let mut t = 1.0f64;
        let mut accepted = None;
        loop {
            let candidate = &x + &direction * C64::new(t, 0.0);
            let ft = obj.evaluate(&candidate)?;
            if ft >= f + ARMIJO_SIGMA * t * gain {
                accepted = Some((candidate, ft));
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                // Flat to numerical precision along this direction: accept a
                // non-decreasing point or stop.
                if ft >= f - 1e-14 {
                    accepted = Some((candidate, ft));
                }
                break;
            }
        }
        match accepted {
            Some((candidate, ft)) => {
                previous = Some((x, g));
                x = candidate;
                f = ft;
                trace.push(f);
            }
            None => {
                converged = true;
                break;
            }
        }
    }

    Ok(SingleRun {
        value: f,
        witness: x,
        iterations,
        trace,
        converged,
    })
}

/// Maximizes a concave objective over the CPTP set by multi-start projected
/// gradient ascent. Starts run in order: the caller's `extra_starts` (which
/// may hit the certified bound immediately and skip everything else), then
/// the depolarizing interior point, then `opts.random_restarts` seeded random
/// channels; the best run wins.
pub fn maximize_concave<O: ConcaveObjective + ?Sized>(
    obj: &O,
    set: &ChoiFeasibleSet,
    extra_starts: &[CMat],
    opts: &EngineOptions,
) -> Result<OptimizationReport<CMat>> {
    let mut starts: Vec<CMat> = extra_starts.to_vec();
    starts.push(set.interior_point());
    let mut sampler = Sampler::new(opts.seed);
    for _ in 0..opts.random_restarts {
        starts.push(set.random_member(&mut sampler));
    }

    let mut best: Option<SingleRun> = None;
    let mut total_iterations = 0;
    let mut last_stall: Option<Error> = None;
    for start in &starts {
        let run = match ascend_from(obj, set, start, opts) {
            Ok(run) => run,
            // A start whose very first projection stalls is skipped; the
            // remaining starts still compete.
            Err(e @ Error::Convergence(_)) => {
                last_stall = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        total_iterations += run.iterations;
        let improves = match &best {
            Some(b) => run.value > b.value,
            None => true,
        };
        if improves {
            best = Some(run);
        }
        if let Some(b) = &best {
            if b.value >= obj.upper_bound() - EARLY_EXIT_GAP {
                break;
            }
        }
    }
    let mut best = match best {
        Some(best) => best,
        None => {
            return Err(last_stall
                .unwrap_or_else(|| Error::Convergence("no ascent start completed".into())))
        }
    };

    // Best-effort projections may leave the winner a hair outside the PSD
    // cone. Mix in just enough of the strictly interior depolarizing point to
    // restore exact feasibility (the concave objective moves by O(t)), then
    // report the honest value at the repaired witness.
    let pre = validate_cptp_matrix(&best.witness, set.d_in, set.d_out)?;
    if pre.psd_violation > 1e-9 {
        let t = (2.0 * pre.psd_violation * set.d_out as f64).min(1e-3);
        best.witness = &best.witness * C64::new(1.0 - t, 0.0)
            + set.interior_point() * C64::new(t, 0.0);
        best.value = obj.evaluate(&best.witness)?;
    }

    let feasibility = validate_cptp_matrix(&best.witness, set.d_in, set.d_out)?;
    // When the value certifies optimality against the known bound, the
    // projected-gradient residual is zero up to that gap by construction;
    // skip the extra projection (it can dominate runtime at large dimension).
    let stationarity_residual = if best.value >= obj.upper_bound() - EARLY_EXIT_GAP {
        0.0
    } else {
        let g = obj.gradient(&best.witness)?;
        match project_shrinking(set, &best.witness, &g, 1.0, opts.tol) {
            // `‖P(x + s·g) − x‖ / s` is the full-step residual at s = 1 and
            // approaches the projected-gradient norm as s shrinks.
            Ok((reprojected, scale)) => {
                frobenius_distance(&reprojected, &best.witness) / scale
            }
            Err(Error::Convergence(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        }
    };

    Ok(OptimizationReport {
        value: best.value,
        witness: best.witness,
        iterations: total_iterations,
        feasibility_residual: feasibility.psd_violation.max(feasibility.tp_residual),
        stationarity_residual,
        trace: best.trace,
        converged: best.converged,
    })
}

/// A measurement test operator with `0 ⪯ Q ⪯ I` (within 1e-9).
#[derive(Debug, Clone)]
pub struct TestOperator {
    matrix: CMat,
}

impl TestOperator {
    /// Validates the operator inequality and wraps.
    pub fn new(matrix: CMat) -> Result<Self> {
        let eig = herm_eigen_unchecked(&matrix)?;
        if eig.min_value() < -1e-9 || eig.max_value() > 1.0 + 1e-9 {
            return Err(Error::Domain(format!(
                "test operator eigenvalues must lie in [0,1], got [{:.3e}, {:.3e}]",
                eig.min_value(),
                eig.max_value()
            )));
        }
        Ok(Self { matrix })
    }

    /// The operator.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// `Tr[Q ρ]` (type-I success probability against `rho`).
    pub fn accept_probability(&self, rho: &CMat) -> f64 {
        re_inner(&self.matrix, rho)
    }
}

/// Solves the Neyman–Pearson problem
/// `β_ε(ρ‖τ) = min { Tr[Qτ] : 0 ⪯ Q ⪯ I, Tr[Qρ] ≥ 1−ε }`
/// exactly: bisect the threshold `t` in the likelihood operator `ρ − tτ`,
/// then fill greedily over its eigenvectors in descending eigenvalue order
/// with one fractional weight, so that `Tr[Qρ] = 1−ε` exactly.
///
/// Returns `(β, Q)`. `Q` is a supergradient of the concave map `τ ↦ β_ε(ρ‖τ)`
/// at this `τ`.
pub fn np_test(rho: &CMat, tau: &CMat, epsilon: f64) -> Result<(f64, TestOperator)> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0,1), got {epsilon}"
        )));
    }
    if rho.nrows() != rho.ncols() || tau.nrows() != tau.ncols() || rho.nrows() != tau.nrows() {
        return Err(Error::Shape(
            "hypothesis-test inputs must be square matrices of equal dimension".into(),
        ));
    }
    let target = 1.0 - epsilon;
    let dim = rho.nrows();

    // ρ-weight captured by the strictly positive eigenspace of ρ − tτ.
    let positive_weight = |t: f64| -> Result<f64> {
        let shifted = rho - tau * C64::new(t, 0.0);
        let eig = herm_eigen_unchecked(&shifted)?;
        let mut total = 0.0;
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda > 0.0 {
                let v = eig.vectors.column(k);
                total += (v.adjoint() * rho * v)[(0, 0)].re;
            }
        }
        Ok(total)
    };

    // Bracket the threshold: weight(0) = Tr[ρ] ≥ target, weight decreasing.
    let cap = 1e18;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while positive_weight(hi)? > target && hi < cap {
        lo = hi;
        hi *= 2.0;
    }
    // When unbracketed at the cap (e.g. τ vanishes on supp ρ), skip the
    // bisection; the greedy fill below at the capped threshold still handles
    // this correctly.
    if positive_weight(hi)? <= target {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if positive_weight(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let t_star = hi.min(cap);

    // Greedy fill over eigenvectors of ρ − t*τ, descending eigenvalue.
    let shifted = rho - tau * C64::new(t_star, 0.0);
    let eig = herm_eigen_unchecked(&shifted)?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.values[b].partial_cmp(&eig.values[a]).unwrap());

    let mut q = CMat::zeros(dim, dim);
    let mut cum = 0.0f64;
    for &k in &order {
        if cum >= target - 1e-15 {
            break;
        }
        let v = eig.vectors.column(k);
        let w = (v.adjoint() * rho * v)[(0, 0)].re.max(0.0);
        let projector = v * v.adjoint();
        if cum + w <= target + 1e-14 {
            q += &projector;
            cum += w;
        } else {
            if w < 1e-14 {
                continue;
            }
            let x = ((target - cum) / w).clamp(0.0, 1.0);
            q += projector * C64::new(x, 0.0);
            break;
        }
    }

    let q = hermitian_part(&q);
    let beta = re_inner(&q, tau).max(0.0);
    Ok((beta, TestOperator::new(q)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::trace;

    /// Classical Neyman–Pearson oracle on diagonal inputs: sort outcomes by
    /// likelihood ratio p/q descending and fill the acceptance budget.
    fn classical_beta(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
        let target = 1.0 - epsilon;
        let mut idx: Vec<usize> = (0..p.len()).collect();
        idx.sort_by(|&a, &b| {
            let ra = p[a] / q[a].max(1e-300);
            let rb = p[b] / q[b].max(1e-300);
            rb.partial_cmp(&ra).unwrap()
        });
        let mut cum = 0.0;
        let mut beta = 0.0;
        for &i in &idx {
            if cum + p[i] <= target + 1e-15 {
                cum += p[i];
                beta += q[i];
            } else {
                if p[i] > 1e-15 {
                    beta += q[i] * (target - cum) / p[i];
                }
                break;
            }
        }
        beta
    }

    fn diag(values: &[f64]) -> CMat {
        CMat::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    struct Linear {
        h: CMat,
    }

    impl ConcaveObjective for Linear {
        fn evaluate(&self, j: &CMat) -> Result<f64> {
            Ok(re_inner(&self.h, j))
        }
        fn gradient(&self, _j: &CMat) -> Result<CMat> {
            Ok(self.h.clone())
        }
        fn name(&self) -> &str {
            "linear"
        }
    }

    struct NegativeDistance {
        target: CMat,
    }

    impl ConcaveObjective for NegativeDistance {
        fn evaluate(&self, j: &CMat) -> Result<f64> {
            let d = j - &self.target;
            Ok(-re_inner(&d, &d))
        }
        fn gradient(&self, j: &CMat) -> Result<CMat> {
            Ok((&self.target - j) * C64::new(2.0, 0.0))
        }
        fn upper_bound(&self) -> f64 {
            0.0
        }
        fn name(&self) -> &str {
            "negative-distance"
        }
    }

    #[test]
    fn project_tp_enforces_marginal_and_is_idempotent() {
        let mut s = Sampler::new(11);
        let raw = hermitian_part(&s.ginibre(8, 8));
        let projected = project_tp(&raw, 2, 4);
        let marginal = crate::channels::trace_out_output(&projected, 2, 4);
        assert!(frobenius_distance(&marginal, &identity(2)) < 1e-12);
        let twice = project_tp(&projected, 2, 4);
        assert!(frobenius_distance(&twice, &projected) < 1e-12);
    }

    #[test]
    fn projection_is_identity_on_members_and_repairs_outsiders() {
        let set = ChoiFeasibleSet::new(2, 2).unwrap();
        let mut s = Sampler::new(12);
        let member = set.random_member(&mut s);
        let (back, residual) = set.project(&member, 1e-9).unwrap();
        assert!(frobenius_distance(&back, &member) < 1e-8);
        assert!(residual <= 1e-9);

        // Scaled identity-channel Choi is PSD but not TP.
        let id = crate::channels::ChoiChannel::identity_channel(
            &crate::tensor::SystemLayout::new(&[("C", 2)]).unwrap(),
        )
        .unwrap();
        let bad = id.choi() * C64::new(0.4, 0.0);
        let (fixed, _) = set.project(&bad, 1e-9).unwrap();
        let report = validate_cptp_matrix(&fixed, 2, 2).unwrap();
        assert!(report.is_cptp(), "projection output must be CPTP");
    }

    #[test]
    fn projection_satisfies_variational_inequality() {
        let set = ChoiFeasibleSet::new(2, 2).unwrap();
        let mut s = Sampler::new(13);
        let raw = hermitian_part(&(s.ginibre(4, 4) * C64::new(0.7, 0.0)));
        let (p, _) = set.project(&raw, 1e-10).unwrap();
        // ⟨raw − P(raw), Y − P(raw)⟩ ≤ 0 for every feasible Y.
        let residual = &raw - &p;
        for _ in 0..50 {
            let y = set.random_member(&mut s);
            let overlap = re_inner(&residual, &(&y - &p));
            assert!(overlap <= 1e-7, "variational inequality violated: {overlap}");
        }
    }

    #[test]
    fn np_test_matches_classical_enumeration_on_diagonal_inputs() {
        let mut s = Sampler::new(14);
        for round in 0..6 {
            let dim = 6;
            let mut p: Vec<f64> = (0..dim).map(|_| s.uniform()).collect();
            let mut q: Vec<f64> = (0..dim).map(|_| s.uniform()).collect();
            let ps: f64 = p.iter().sum();
            let qs: f64 = q.iter().sum();
            p.iter_mut().for_each(|v| *v /= ps);
            q.iter_mut().for_each(|v| *v /= qs);
            let epsilon = [0.05, 0.3, 0.7][round % 3];
            let (beta, test) = np_test(&diag(&p), &diag(&q), epsilon).unwrap();
            let oracle = classical_beta(&p, &q, epsilon);
            assert!(
                (beta - oracle).abs() < 1e-9,
                "beta {beta} vs classical {oracle} (round {round})"
            );
            let accept = test.accept_probability(&diag(&p));
            assert!((accept - (1.0 - epsilon)).abs() < 1e-10);
        }
    }

    #[test]
    fn np_test_reference_cases() {
        // Identical hypotheses: β = 1 − ε for any ε.
        let mut s = Sampler::new(15);
        let rho = s
            .random_density(&crate::tensor::SystemLayout::new(&[("A", 3)]).unwrap(), 3)
            .unwrap()
            .matrix()
            .clone();
        for epsilon in [0.0, 0.2, 0.9] {
            let (beta, _) = np_test(&rho, &rho, epsilon).unwrap();
            assert!((beta - (1.0 - epsilon)).abs() < 1e-9, "epsilon {epsilon}");
        }

        // Orthogonal hypotheses: β = 0 even though the threshold never brackets.
        let zero = diag(&[1.0, 0.0]);
        let one = diag(&[0.0, 1.0]);
        let (beta, test) = np_test(&zero, &one, 0.25).unwrap();
        assert!(beta < 1e-12);
        assert!((test.accept_probability(&zero) - 0.75).abs() < 1e-10);

        // ε = 0 reduces to the support projector of ρ.
        let tau = diag(&[0.3, 0.7]);
        let (beta0, _) = np_test(&zero, &tau, 0.0).unwrap();
        assert!((beta0 - 0.3).abs() < 1e-10);

        // Invalid ε rejected.
        assert!(np_test(&zero, &tau, 1.0).is_err());
        assert!(np_test(&zero, &tau, -0.1).is_err());
    }

    #[test]
    fn test_operator_validation_rejects_out_of_range_eigenvalues() {
        assert!(TestOperator::new(diag(&[0.5, 1.0])).is_ok());
        assert!(TestOperator::new(diag(&[1.5, 0.0])).is_err());
        assert!(TestOperator::new(diag(&[-0.1, 0.2])).is_err());
    }

    #[test]
    fn linear_objective_beats_random_sampling() {
        let set = ChoiFeasibleSet::new(2, 2).unwrap();
        let mut s = Sampler::new(16);
        let h = hermitian_part(&s.ginibre(4, 4));
        let obj = Linear { h: h.clone() };
        let report = maximize_concave(&obj, &set, &[], &EngineOptions::default()).unwrap();
        assert!(report.feasibility_residual < 1e-8);
        assert!(report.stationarity_residual < 1e-5);
        assert!(report.converged);

        let mut sampler = Sampler::new(17);
        for _ in 0..200 {
            let y = set.random_member(&mut sampler);
            assert!(re_inner(&h, &y) <= report.value + 1e-7);
        }
    }

    #[test]
    fn quadratic_objective_recovers_known_optimum_with_early_exit() {
        let set = ChoiFeasibleSet::new(2, 2).unwrap();
        let mut s = Sampler::new(18);
        let target = set.random_member(&mut s);
        let obj = NegativeDistance {
            target: target.clone(),
        };
        let report = maximize_concave(&obj, &set, &[], &EngineOptions::default()).unwrap();
        assert!(report.value >= -1e-8, "value {}", report.value);
        assert!(frobenius_distance(&report.witness, &target) < 1e-3);
        assert!(report.converged);
        // Trace of the winning start must be monotone.
        for pair in report.trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-10);
        }
        // The witness stays trace-preserving to projection accuracy.
        assert!((trace(&report.witness).re - 2.0).abs() < 1e-8);
    }

    #[test]
    fn engine_is_deterministic_for_fixed_seed() {
        let set = ChoiFeasibleSet::new(2, 2).unwrap();
        let mut s = Sampler::new(19);
        let h = hermitian_part(&s.ginibre(4, 4));
        let obj = Linear { h };
        let a = maximize_concave(&obj, &set, &[], &EngineOptions::default()).unwrap();
        let b = maximize_concave(&obj, &set, &[], &EngineOptions::default()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }
}
