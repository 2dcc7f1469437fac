//! Dense numerical toolkit for quantum recoverability measures.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`] — labeled multipartite Hilbert spaces and dense complex-matrix
//!   algebra (Kronecker products, partial traces, permutations, controlled
//!   swaps, state-vector contractions).
//! * [`linalg`] — Hermitian eigendecompositions, spectral matrix functions,
//!   polar decompositions, and deterministic unitary completions.
//!
//! Higher layers (states, channels, solvers, measures, proof-system
//! simulators) build strictly on these.

pub mod channels;
pub mod convex;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod measures;
pub mod qip;
pub mod sample;
pub mod states;
pub mod tensor;

pub use channels::ChoiChannel;
pub use error::{Error, Result};
pub use measures::{MeasureOptions, RecoveryOutcome, RecoveryProblem};
pub use qip::{ProverStrategy2, ProverStrategy4};
pub use sample::Sampler;
pub use states::{LabeledState, PureState};
pub use tensor::{C64, CMat, CVec, SystemLayout, MAX_TOTAL_DIM};
