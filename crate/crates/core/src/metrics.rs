//! Distances between binary observables and error-disturbance relations.

use crate::error::Result;
use crate::linalg::{add3, norm3, sub3, Vec3};
use crate::qubit::{BinaryObservable, BlochState, PauliAxis};
use crate::tolerance;

/// State-dependent and state-independent squared distances of one
/// approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistancePair {
    pub state_dependent_sq: f64,
    pub state_independent_sq: f64,
}

impl DistancePair {
    pub fn new(state: &BlochState, sharp: &BinaryObservable, approx: &BinaryObservable) -> Self {
        DistancePair {
            state_dependent_sq: state_dependent_distance_sq(state, sharp, approx),
            state_independent_sq: state_independent_distance_sq(sharp, approx),
        }
    }
}

/// Result of evaluating one inequality `lhs ≥ rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl RelationCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        RelationCheck { lhs, rhs, margin, holds: margin >= -tolerance::RELATION }
    }
}

/// `Δ(A_ρ, A'_ρ)² = 4|p(A+) − p(A'+)|`.
pub fn state_dependent_distance_sq(state: &BlochState, sharp: &BinaryObservable, approx: &BinaryObservable) -> f64 {
    4.0 * (sharp.probability_plus(state) - approx.probability_plus(state)).abs()
}

/// `Δ(A, A')² = 2|a0 − a0'| + 2‖a − a'‖`, the maximum of the
/// state-dependent distance over the Bloch ball.
pub fn state_independent_distance_sq(sharp: &BinaryObservable, approx: &BinaryObservable) -> f64 {
    2.0 * (sharp.a0() - approx.a0()).abs() + 2.0 * norm3(&sub3(&sharp.a(), &approx.a()))
}

/// `√2 (‖a − b‖ + ‖a + b‖ − 2)`; negative for nearly parallel directions.
pub fn blw_bound(a: &Vec3, b: &Vec3) -> f64 {
    core::f64::consts::SQRT_2 * (norm3(&sub3(a, b)) + norm3(&add3(a, b)) - 2.0)
}

/// `Δ(A,A')² + Δ(B,B')² ≥ √2 (‖a − b‖ + ‖a + b‖ − 2)` for sharp `A`, `B`.
pub fn check_pair_relation(
    a: &BinaryObservable,
    a_approx: &BinaryObservable,
    b: &BinaryObservable,
    b_approx: &BinaryObservable,
) -> RelationCheck {
    let lhs = state_independent_distance_sq(a, a_approx) + state_independent_distance_sq(b, b_approx);
    RelationCheck::new(lhs, blw_bound(&a.a(), &b.a()))
}

/// `r · min{Δ(X,X')², Δ(Y,Y')², Δ(Z,Z')²}`.
pub fn triple_bound(r: f64, dx_sq: f64, dy_sq: f64, dz_sq: f64) -> f64 {
    r * dx_sq.min(dy_sq).min(dz_sq)
}

/// Sum over the Pauli triple of state-dependent distances to unsharp
/// versions with efficiencies `etas`, against [`triple_bound`].
pub fn check_triple_relation(state: &BlochState, etas: [f64; 3]) -> Result<RelationCheck> {
    let mut lhs = 0.0;
    let mut dist = [0.0; 3];
    for axis in PauliAxis::ALL {
        let sharp = BinaryObservable::sharp(axis);
        let approx = BinaryObservable::unsharp(axis, etas[axis.index()])?;
        let d = DistancePair::new(state, &sharp, &approx);
        lhs += d.state_dependent_sq;
        dist[axis.index()] = d.state_independent_sq;
    }
    Ok(RelationCheck::new(lhs, triple_bound(state.radius(), dist[0], dist[1], dist[2])))
}

/// Purity radius estimated from measured Pauli means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusEstimate {
    pub r: f64,
    /// The raw norm exceeded 1 and was clamped.
    pub overshoot: bool,
}

/// `√(⟨X⟩² + ⟨Y⟩² + ⟨Z⟩²)`, clamped to `[0, 1]`.
pub fn estimate_r(mean_x: f64, mean_y: f64, mean_z: f64) -> RadiusEstimate {
    let raw = norm3(&[mean_x, mean_y, mean_z]);
    RadiusEstimate { r: raw.min(1.0), overshoot: raw > 1.0 }
}
