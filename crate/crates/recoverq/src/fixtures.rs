//! Canonical states shared by the examples, the integration tests, and the
//! CLI state generator.
//!
//! Three families cover the interesting regimes:
//!
//! * exactly recoverable states (short chains and product states), where
//!   every measure sits at its floor and the transpose channel certifies the
//!   optimum;
//! * the GHZ state, maximally non-recoverable for qubit `C` with
//!   closed-form reference values;
//! * seeded random states for property checks.
//!
//! The four-party `*_pure4` variants purify and regroup the tripartite
//! fixtures into the canonical `A, B, C, D` parties the proof-system
//! simulations act on.

use crate::error::Result;
use crate::qip::merge_four;
use crate::sample::Sampler;
use crate::states::{purify, LabeledState, PureState};
use crate::tensor::{CVec, SystemLayout, C64};

/// GHZ state vector on qubits `A, B, C`.
pub fn ghz_pure() -> Result<PureState> {
    let layout = SystemLayout::new(&[("A", 2), ("B", 2), ("C", 2)])?;
    let mut v = CVec::zeros(8);
    v[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[7] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState::new(layout, v)
}

/// GHZ density matrix on qubits `A, B, C`.
pub fn ghz() -> Result<LabeledState> {
    ghz_pure()?.density()
}

/// GHZ as a four-party pure state with a trivial purifying party `D`
/// (the state is already pure).
pub fn ghz_pure4() -> Result<PureState> {
    merge_four(&ghz_pure()?, &["A"], &["B"], &["C"], &[])
}

/// Bell pair on `A, B` with a trivial (one-dimensional) conditioning system
/// `C`: recovery degenerates to state preparation.
pub fn bell_trivial_c_pure() -> Result<PureState> {
    let layout = SystemLayout::new(&[("A", 2), ("B", 2), ("C", 1)])?;
    let mut v = CVec::zeros(4);
    v[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[3] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState::new(layout, v)
}

/// Density-matrix form of [`bell_trivial_c_pure`].
pub fn bell_trivial_c() -> Result<LabeledState> {
    bell_trivial_c_pure()?.density()
}

/// [`bell_trivial_c_pure`] as a four-party state (both `C` and `D` trivial).
pub fn bell_pure4() -> Result<PureState> {
    merge_four(&bell_trivial_c_pure()?, &["A"], &["B"], &["C"], &[])
}

/// A seeded short chain `ρ_AC1 ⊗ ψ_C2B` on `A, B, C1, C2`: conditioning on
/// `C = C1 C2` makes the conditional mutual information vanish exactly, so
/// the state is exactly recoverable. The `AC1` marginal has rank 2.
pub fn markov(seed: u64) -> Result<LabeledState> {
    let mut s = Sampler::new(seed);
    let rho_ac1 = s.random_density(&SystemLayout::new(&[("A", 2), ("C1", 2)])?, 2)?;
    let psi = s.random_pure(&SystemLayout::new(&[("C2", 2), ("B", 2)])?)?;
    rho_ac1
        .tensor(&psi.density()?)?
        .reorder(&["A", "B", "C1", "C2"])
}

/// [`markov`] purified (rank-2 purifier `D`) and regrouped into the canonical
/// four parties with `C = C1 C2`.
pub fn markov_pure4(seed: u64) -> Result<PureState> {
    let phi = purify(&markov(seed)?, "D")?;
    merge_four(&phi, &["A"], &["B"], &["C1", "C2"], &["D"])
}

/// A seeded product of independent full-rank qubit states on `A, B, C`:
/// trivially recoverable, with every correlation measure at zero.
pub fn product(seed: u64) -> Result<LabeledState> {
    let mut s = Sampler::new(seed);
    let a = s.random_density(&SystemLayout::new(&[("A", 2)])?, 2)?;
    let b = s.random_density(&SystemLayout::new(&[("B", 2)])?, 2)?;
    let c = s.random_density(&SystemLayout::new(&[("C", 2)])?, 2)?;
    a.tensor(&b)?.tensor(&c)
}

/// [`product`] purified and regrouped into the canonical four parties.
pub fn product_pure4(seed: u64) -> Result<PureState> {
    let phi = purify(&product(seed)?, "D")?;
    merge_four(&phi, &["A"], &["B"], &["C"], &["D"])
}

/// A seeded Haar-random pure state on four qubits `A, B, C, D`.
pub fn random_pure4(seed: u64) -> Result<PureState> {
    let mut s = Sampler::new(seed);
    s.random_pure(&SystemLayout::new(&[("A", 2), ("B", 2), ("C", 2), ("D", 2)])?)
}

/// A seeded full-rank random density matrix on three qubits `A, B, C`.
pub fn random_mixed_abc(seed: u64) -> Result<LabeledState> {
    let mut s = Sampler::new(seed);
    s.random_full_rank_density(&SystemLayout::new(&[("A", 2), ("B", 2), ("C", 2)])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::RecoveryProblem;

    #[test]
    fn fixtures_have_the_advertised_shapes() {
        assert_eq!(ghz().unwrap().layout().dims(), vec![2, 2, 2]);
        assert_eq!(ghz_pure4().unwrap().layout().dims(), vec![2, 2, 2, 1]);
        assert_eq!(bell_trivial_c().unwrap().layout().dims(), vec![2, 2, 1]);
        assert_eq!(markov(7).unwrap().layout().labels(), vec!["A", "B", "C1", "C2"]);
        assert_eq!(markov_pure4(7).unwrap().layout().dims(), vec![2, 2, 4, 2]);
        assert_eq!(product_pure4(7).unwrap().layout().dims(), vec![2, 2, 2, 8]);
        assert_eq!(random_pure4(7).unwrap().layout().total_dim(), 16);
        assert_eq!(random_mixed_abc(7).unwrap().layout().total_dim(), 8);
    }

    #[test]
    fn chain_fixtures_have_vanishing_conditional_mutual_information() {
        let rho = markov(11).unwrap();
        let p = RecoveryProblem::new(&rho, &["A"], &["B"], &["C1", "C2"]).unwrap();
        assert!(p.cqmi_bits().abs() <= 1e-9);

        let rho = product(11).unwrap();
        let p = RecoveryProblem::new(&rho, &["A"], &["B"], &["C"]).unwrap();
        assert!(p.cqmi_bits().abs() <= 1e-9);

        // Purification round-trips to the same reduced state: the merged
        // `C` axis is `C1⊗C2` in order, so the matrices match entrywise.
        let phi = markov_pure4(11).unwrap();
        let back = phi.density().unwrap().reduce(&["A", "B", "C"]).unwrap();
        let direct = markov(11).unwrap();
        let diff = (back.matrix() - direct.matrix()).norm();
        assert!(diff <= 1e-10, "purification mismatch {diff}");
    }
}
