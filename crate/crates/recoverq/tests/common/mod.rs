//! Shared oracles for the integration tests.
//!
//! Everything here is kept deliberately independent of the convex engine:
//! the channel optimizer below ascends over Stinespring isometries with
//! central-difference gradients and an SVD retraction, and the
//! hypothesis-testing oracle is the classical Neyman–Pearson enumeration.
//! Agreement between these and the production solvers is what the oracle
//! tests certify.

#![allow(dead_code)] // each test binary uses its own subset

use nalgebra::linalg::SVD;
use recoverq::channels::kraus_to_choi;
use recoverq::measures::RecoveryProblem;
use recoverq::{C64, CMat, LabeledState, Result, Sampler};

/// Extracts the Kraus family encoded by a Stinespring isometry
/// `W: in → out ⊗ env`, with the environment as the minor row index.
fn kraus_from_isometry(w: &CMat, d_in: usize, d_out: usize, d_env: usize) -> Vec<CMat> {
    (0..d_env)
        .map(|k| CMat::from_fn(d_out, d_in, |o, i| w[(o * d_env + k, i)]))
        .collect()
}

/// Re-projects a perturbed isometry candidate onto the isometry manifold by
/// dropping the singular values of its thin SVD.
fn retract(m: &CMat) -> CMat {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("SVD with vectors requested");
    let v_t = svd.v_t.expect("SVD with vectors requested");
    u * v_t
}

/// Fidelity of recovery by brute force: seeded random-restart ascent over
/// Stinespring isometries of the recovery channel, using central-difference
/// gradients, an SVD retraction, and a backtracking line search. Values are
/// evaluated through the problem's own channel-fidelity functional (a direct
/// formula, not an optimizer), so this path shares no parameterization,
/// gradient, or projection with the convex engine. Every value is achieved
/// by an explicit channel and is therefore a valid lower bound.
pub fn brute_force_fidelity(
    rho: &LabeledState,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    let problem = RecoveryProblem::new(rho, a, b, c)?;
    let d_in = problem.in_layout().total_dim();
    let d_out = problem.out_layout().total_dim();
    let d_env = d_in * d_out;
    let rows = d_out * d_env;

    let evaluate = |w: &CMat| -> Result<f64> {
        let kraus = kraus_from_isometry(w, d_in, d_out, d_env);
        let choi = kraus_to_choi(&kraus, d_in, d_out)?;
        let channel = problem.wrap_choi(choi)?;
        problem.channel_fidelity(&channel)
    };

    let delta = 1e-4;
    let mut best = 0.0_f64;
    for r in 0..restarts.max(1) {
        let mut sampler = Sampler::derived(seed, 100 + r as u64);
        let mut w = sampler.haar_isometry(rows, d_in);
        let mut value = evaluate(&w)?;
        let mut step = 0.5_f64;
        for _ in 0..iters {
            // Central-difference gradient over every real coordinate,
            // re-projected onto the isometries before each evaluation.
            let mut grad = CMat::zeros(rows, d_in);
            for i in 0..rows {
                for j in 0..d_in {
                    for (re, im) in [(delta, 0.0), (0.0, delta)] {
                        let bump = C64::new(re, im);
                        let mut plus = w.clone();
                        plus[(i, j)] += bump;
                        let mut minus = w.clone();
                        minus[(i, j)] -= bump;
                        let slope = (evaluate(&retract(&plus))?
                            - evaluate(&retract(&minus))?)
                            / (2.0 * delta);
                        grad[(i, j)] += bump / delta * slope;
                    }
                }
            }
            let gnorm = grad.norm();
            if gnorm < 1e-9 {
                break;
            }
            let direction = grad / C64::new(gnorm, 0.0);

            let mut improved = false;
            let mut t = step;
            for _ in 0..12 {
                let candidate = retract(&(&w + &direction * C64::new(t, 0.0)));
                let trial = evaluate(&candidate)?;
                if trial > value + 1e-13 {
                    w = candidate;
                    value = trial;
                    step = (t * 1.5).min(2.0);
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(value);
    }
    Ok(best)
}

/// The measure-and-prepare recovery channel for the GHZ state: measure the
/// conditioning qubit in the computational basis and prepare the matching
/// pair on the reconstructed-output qubits, `K_b = |bb⟩⟨b|`. Applied to the
/// GHZ marginal it yields the even mixture of `|000⟩` and `|111⟩`, whose
/// overlap with the GHZ state is exactly 1/2 — a closed-form feasible point.
pub fn ghz_measure_prepare_fidelity(rho: &LabeledState) -> Result<f64> {
    let problem = RecoveryProblem::new(rho, &["A"], &["B"], &["C"])?;
    let kraus: Vec<CMat> = (0..2)
        .map(|b| {
            CMat::from_fn(4, 2, |o, i| {
                if o == 3 * b && i == b {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    let choi = kraus_to_choi(&kraus, 2, 4)?;
    let channel = problem.wrap_choi(choi)?;
    problem.channel_fidelity(&channel)
}

/// Classical Neyman–Pearson oracle: the minimal Type-II error of a test
/// between two probability vectors under a Type-I budget `epsilon`, by the
/// textbook likelihood-ratio construction (sort outcomes by `p/q`, accept
/// greedily, split the marginal outcome fractionally).
pub fn classical_np_beta(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut order: Vec<usize> = (0..p.len()).collect();
    let ratio = |i: usize| -> f64 {
        if q[i] > 0.0 {
            p[i] / q[i]
        } else if p[i] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    order.sort_by(|&i, &j| ratio(j).partial_cmp(&ratio(i)).expect("finite ratios"));

    let target = 1.0 - epsilon;
    let mut captured = 0.0;
    let mut beta = 0.0;
    for i in order {
        if captured >= target - 1e-15 {
            break;
        }
        let need = target - captured;
        if p[i] <= need {
            captured += p[i];
            beta += q[i];
        } else {
            beta += q[i] * need / p[i];
            captured = target;
        }
    }
    beta
}
