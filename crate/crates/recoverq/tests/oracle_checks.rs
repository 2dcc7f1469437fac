//! Cross-validation of the production solvers against the independent
//! oracles in `common`: a gradient-free Stinespring hill climb, a closed-form
//! feasible channel for the GHZ state, and the classical Neyman–Pearson
//! enumeration for commuting hypothesis tests.

mod common;

use recoverq::convex::np_test;
use recoverq::measures::{self, MeasureOptions};
use recoverq::{fixtures, C64, CMat, Sampler};

fn opts() -> MeasureOptions {
    MeasureOptions {
        restarts: 2,
        ..MeasureOptions::default()
    }
}

#[test]
fn ghz_brute_force_and_closed_form_confirm_the_engine() {
    let ghz = fixtures::ghz().unwrap();

    let analytic = common::ghz_measure_prepare_fidelity(&ghz).unwrap();
    assert!(
        (analytic - 0.5).abs() <= 1e-9,
        "measure-and-prepare channel should score exactly 1/2, got {analytic}"
    );

    let engine = measures::fidelity_of_recovery(&ghz, &["A"], &["B"], &["C"], &opts())
        .unwrap()
        .value;
    assert!((engine - 0.5).abs() <= 1e-3, "engine value {engine}");
    assert!(engine >= analytic - 1e-6, "engine must dominate the feasible point");

    let brute =
        common::brute_force_fidelity(&ghz, &["A"], &["B"], &["C"], 5, 60, 17).unwrap();
    assert!(
        brute <= engine + 1e-6,
        "independent climber must not beat the engine: brute {brute} vs engine {engine}"
    );
    assert!(
        engine - brute <= 5e-3,
        "independent climber should reproduce the engine value: brute {brute} vs engine {engine}"
    );
}

#[test]
fn brute_force_handles_a_trivial_conditioning_system() {
    // With a one-dimensional conditioning system every recovery channel
    // prepares some fixed state, and for the maximally entangled fixture all
    // of them score exactly 1/4 — any climber must land there immediately.
    let bell = fixtures::bell_trivial_c().unwrap();
    let brute = common::brute_force_fidelity(&bell, &["A"], &["B"], &["C"], 2, 10, 3).unwrap();
    assert!((brute - 0.25).abs() <= 1e-9, "got {brute}");
}

#[test]
fn neyman_pearson_agrees_with_classical_enumeration() {
    // Handcrafted pair with a fractional split on the marginal outcome.
    let p = vec![0.5, 0.5];
    let q = vec![0.9, 0.1];
    let beta = common::classical_np_beta(&p, &q, 0.25);
    assert!((beta - 0.55).abs() <= 1e-12, "got {beta}");

    // Pair with a zero atom in the alternative (infinite likelihood ratio).
    let p = vec![0.3, 0.7, 0.0];
    let q = vec![0.0, 0.5, 0.5];
    let beta = common::classical_np_beta(&p, &q, 0.2);
    assert!((beta - 0.5 * (0.5 / 0.7)).abs() <= 1e-12, "got {beta}");

    // Random diagonal pairs: the semidefinite test must reduce to the
    // classical likelihood-ratio optimum on commuting inputs.
    for dim in [2usize, 3, 4, 8] {
        for trial in 0..3u64 {
            let mut sampler = Sampler::derived(900 + trial, dim as u64);
            let draw = |s: &mut Sampler| -> Vec<f64> {
                let g = s.ginibre(dim, 1);
                let total: f64 = g.iter().map(|z| z.norm_sqr()).sum();
                g.iter().map(|z| z.norm_sqr() / total).collect()
            };
            let p = draw(&mut sampler);
            let q = draw(&mut sampler);
            let dp = CMat::from_fn(dim, dim, |i, j| {
                if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) }
            });
            let dq = CMat::from_fn(dim, dim, |i, j| {
                if i == j { C64::new(q[i], 0.0) } else { C64::new(0.0, 0.0) }
            });
            for eps in [0.1, 0.3, 0.5, 0.7] {
                let (beta_q, _) = np_test(&dp, &dq, eps).unwrap();
                let beta_c = common::classical_np_beta(&p, &q, eps);
                assert!(
                    (beta_q - beta_c).abs() <= 1e-9,
                    "dim {dim} trial {trial} eps {eps}: quantum {beta_q} vs classical {beta_c}"
                );
            }
        }
    }
}
