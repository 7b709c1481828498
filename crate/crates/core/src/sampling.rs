//! Random states, unitaries and POVMs for verification and property tests.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by std inherents when std is linked
use num_traits::Float;

use rand::Rng;

use crate::linalg::{bloch_ket, Mat2, Vec2, Vec3, C64};
use crate::qubit::{BlochState, Effect, OutcomeLabel, Povm, PovmElement};

/// Uniformly distributed unit vector on the sphere.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

/// Haar-random pure coin state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    let ket = bloch_ket(&random_direction(rng));
    let phase = C64::cis(2.0 * PI * rng.random::<f64>());
    [ket[0] * phase, ket[1] * phase]
}

/// State drawn uniformly from the Bloch ball.
pub fn random_bloch_state<R: Rng + ?Sized>(rng: &mut R) -> BlochState {
    let r = rng.random::<f64>().cbrt();
    let n = random_direction(rng);
    BlochState::new([r * n[0], r * n[1], r * n[2]]).expect("inside the unit ball")
}

/// Haar-random 2×2 unitary.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let u = random_pure_state(rng);
    let phase = C64::cis(2.0 * PI * rng.random::<f64>());
    Mat2::new(u[0], -(u[1].conj() * phase), u[1], u[0].conj() * phase)
}

/// Random rank-1 POVM with `n ≥ 2` elements: random weighted directions
/// `vᵢ`, completed to the identity as `eᵢ = S^{-1/2} vᵢ`, `S = Σ vᵢvᵢ†`.
pub fn random_rank1_povm<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Povm {
    assert!(n >= 2, "a POVM needs at least two elements");
    loop {
        let vs: Vec<Vec2> = (0..n)
            .map(|_| {
                let w = 0.05 + rng.random::<f64>();
                let k = random_pure_state(rng);
                [k[0] * w.sqrt(), k[1] * w.sqrt()]
            })
            .collect();
        let mut s = Mat2::ZERO;
        for v in &vs {
            s += Mat2::outer(v, v);
        }
        let eig = s.eigh();
        if eig.values[1] < 1e-3 * eig.values[0] {
            continue;
        }
        let mut inv_sqrt = Mat2::ZERO;
        for j in 0..2 {
            let w = eig.vectors[j];
            inv_sqrt += Mat2::outer(&w, &w).scale_real(1.0 / eig.values[j].sqrt());
        }
        let elements = vs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let e = inv_sqrt.apply(v);
                PovmElement {
                    label: OutcomeLabel::Index(i as i64),
                    effect: Effect::hermitian_part(Mat2::outer(&e, &e)),
                }
            })
            .collect();
        return Povm::new_unchecked(elements);
    }
}
