//! Generalised qubit measurements realised as discrete-time quantum walks.
//!
//! * [`qubit`]: states, binary observables, effects and the joint POVM
//!   families for noisy Pauli observables.
//! * [`walk`]: state-vector simulation of a coined walk on the line and the
//!   POVM induced by position detection.
//! * [`compiler`]: rank-1 POVM → walk program synthesis and verification.
//! * [`metrics`]: observable distances and error-disturbance relations.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x <= tol)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod compiler;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod qubit;
pub mod sampling;
pub mod tolerance;
pub mod walk;

pub use compiler::{compile, compile_with_splitting, solve_iteration_coins, verify, CompilationResult};
pub use error::{Error, Result};
pub use metrics::{DistancePair, RelationCheck};
pub use qubit::{BinaryObservable, BlochState, Effect, OutcomeLabel, PauliAxis, Povm, PovmElement, Sign};
pub use walk::{CoinOp, Position, StepRule, WalkProgram, WalkState};

/// Crate version, recorded in report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
