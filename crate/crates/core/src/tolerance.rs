//! Numerical tolerances shared by every module.

/// Exact closed-form constructions (states, observables, POVM families).
pub const EXACT: f64 = 1e-12;

/// Compiled or simulated objects checked end-to-end.
pub const VERIFIED: f64 = 1e-9;

/// Internal threshold of the per-iteration coin solve.
pub const SOLVE: f64 = 1e-10;

/// Margin tolerance of relation checks: `holds ⇔ margin ≥ −RELATION`.
pub const RELATION: f64 = 1e-9;

/// Rank-1 test: second eigenvalue of a target element.
pub const RANK_ONE: f64 = 1e-10;
