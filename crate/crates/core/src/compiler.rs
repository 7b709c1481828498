//! Compilation of rank-1 qubit POVMs into walk programs.
//!
//! Each iteration is two steps. Step (a) applies `C1` at `x = 0`; step (b)
//! applies `C2` at `x = 1` and NOT at `x = −1`. The right-moving output of
//! `C2` leaves the interaction region at `x = 2` and never returns, so it
//! carries exactly one extracted element. Everything else recombines at the
//! origin, where the residual operator `R` of the remaining elements lives:
//!
//! ```text
//! A_i = C2₀₀ · ⟨→|C1 R          (escape row vector, A_i†A_i = E_i)
//! R'  = [[0, 1], [C2₁₀, 0]] · C1 · R
//! ```
//!
//! With `n` pieces the element extracted at iteration `j` (0-based) ends at
//! `x = 2(n − 1 − j)`; the final residual stays at `x = 0`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by std inherents when std is linked
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{inner, vec2_norm_sqr, Mat2, Vec2, ONE, ZERO};
use crate::qubit::{validate_povm, BlochState, Effect, OutcomeLabel, Povm, Sign};
use crate::sampling::random_pure_state;
use crate::tolerance;
use crate::walk::{
    position_distribution, run_unnormalized, transfer_operators, CoinOp, Position, StepRule, WalkProgram,
};

/// Singular values below this are treated as zero in the coin solve.
const SINGULAR_CUTOFF: f64 = 1e-11;

/// Coins for one extraction iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationCoins {
    pub c1: CoinOp,
    pub c2: CoinOp,
    /// Escape row vector `A_i`.
    pub escape: Vec2,
    pub new_residual: Mat2,
}

impl IterationCoins {
    /// `A_i†A_i`.
    pub fn extracted_effect(&self) -> Mat2 {
        let col = [self.escape[0].conj(), self.escape[1].conj()];
        Mat2::outer(&col, &col)
    }
}

/// Output of [`compile`].
#[derive(Clone, Debug, PartialEq)]
pub struct CompilationResult {
    pub program: WalkProgram,
    /// Final position → index of the target element it realises.
    pub outcome_map: BTreeMap<Position, usize>,
    /// Max entrywise deviation of the regrouped induced effects from the target.
    pub residual_error: f64,
    /// Number of target outcomes.
    pub outcome_count: usize,
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Angles `(θ, β)`, `θ ∈ [0, π/2]`, of the coin whose first row is `⟨û|` up
/// to a global phase.
fn row_angles(u: &Vec2) -> (f64, f64) {
    let (m0, m1) = (u[0].norm(), u[1].norm());
    let theta = m1.atan2(m0);
    let beta = if m1 == 0.0 {
        0.0
    } else if m0 == 0.0 {
        u[1].arg()
    } else {
        wrap_angle(u[1].arg() - u[0].arg())
    };
    (theta, beta)
}

/// Solves one iteration: extract `target` from the residual `R`.
pub fn solve_iteration_coins(residual: &Mat2, target: &Effect) -> Result<IterationCoins> {
    solve_indexed(residual, target, 0)
}

fn solve_indexed(residual: &Mat2, target: &Effect, index: usize) -> Result<IterationCoins> {
    let ev = target.eigenvalues();
    if ev[1].abs() > tolerance::RANK_ONE {
        return Err(Error::NotRankOne { index, second_eigenvalue: ev[1] });
    }
    let e = target.dominant_vector();

    // u with R†u = e, via the singular system of R.
    let mut u = [ZERO, ZERO];
    if vec2_norm_sqr(&e) > 0.0 {
        let left = (*residual * residual.adjoint()).eigh();
        let r_dag = residual.adjoint();
        for j in 0..2 {
            let sigma = left.values[j].max(0.0).sqrt();
            if sigma <= SINGULAR_CUTOFF {
                continue;
            }
            let w = left.vectors[j];
            let rv = r_dag.apply(&w);
            let v = [rv[0] / sigma, rv[1] / sigma];
            let y = inner(&v, &e) / sigma;
            u[0] += y * w[0];
            u[1] += y * w[1];
        }
    }

    let weight = vec2_norm_sqr(&u);
    if weight > (1.0 + tolerance::VERIFIED).powi(2) {
        return Err(Error::Unsatisfiable { index, weight });
    }
    let s = weight.sqrt();
    let (c1, c2) = if s == 0.0 {
        (CoinOp::angles(0.0, 0.0), CoinOp::angles(PI / 2.0, 0.0))
    } else {
        let u_hat = [u[0] / s, u[1] / s];
        let (theta, beta) = row_angles(&u_hat);
        (CoinOp::angles(theta, beta), CoinOp::angles(s.min(1.0).acos(), 0.0))
    };

    let c1m = c1.matrix() * *residual;
    let c2m = c2.matrix();
    let escape = [c2m[(0, 0)] * c1m[(0, 0)], c2m[(0, 0)] * c1m[(0, 1)]];
    let recombine = Mat2::new(ZERO, ONE, c2m[(1, 0)], ZERO);
    let coins = IterationCoins { c1, c2, escape, new_residual: recombine * c1m };

    let miss = coins.extracted_effect().max_abs_diff(target.matrix());
    if miss > tolerance::VERIFIED {
        return Err(Error::ResidualTooLarge { residual: miss });
    }
    Ok(coins)
}

fn iteration_steps(coins: &IterationCoins) -> Result<[StepRule; 2]> {
    Ok([StepRule::new().with(0, coins.c1)?, StepRule::new().with(1, coins.c2)?.with(-1, CoinOp::NOT)?])
}

/// Compiles a POVM whose elements all have rank 1.
pub fn compile(target: &Povm) -> Result<CompilationResult> {
    precheck(target)?;
    let mut pieces = Vec::with_capacity(target.len());
    for (index, effect) in target.effects().enumerate() {
        let second = effect.eigenvalues()[1];
        if second.abs() > tolerance::RANK_ONE {
            return Err(Error::NotRankOne { index, second_eigenvalue: second });
        }
        pieces.push((index, *effect));
    }
    compile_pieces(target, &pieces)
}

/// Like [`compile`], but rank-2 elements are split spectrally into two
/// rank-1 pieces that share the element's outcome.
pub fn compile_with_splitting(target: &Povm) -> Result<CompilationResult> {
    precheck_validity(target)?;
    let mut pieces = Vec::with_capacity(2 * target.len());
    for (index, effect) in target.effects().enumerate() {
        let eig = effect.matrix().eigh();
        if eig.values[1].abs() > tolerance::RANK_ONE {
            for j in 0..2 {
                let v = eig.vectors[j];
                let m = Mat2::outer(&v, &v).scale_real(eig.values[j]);
                pieces.push((index, Effect::hermitian_part(m)));
            }
        } else {
            pieces.push((index, *effect));
        }
    }
    if pieces.len() < 2 {
        return Err(Error::TooFewElements(pieces.len()));
    }
    compile_pieces(target, &pieces)
}

fn precheck_validity(target: &Povm) -> Result<()> {
    let report = validate_povm(target);
    if !report.passed {
        return Err(report.into_error());
    }
    Ok(())
}

fn precheck(target: &Povm) -> Result<()> {
    if target.len() < 2 {
        return Err(Error::TooFewElements(target.len()));
    }
    precheck_validity(target)
}

fn compile_pieces(target: &Povm, pieces: &[(usize, Effect)]) -> Result<CompilationResult> {
    let n = pieces.len();
    let mut residual = Mat2::IDENTITY;
    let mut steps = Vec::with_capacity(2 * (n - 1));
    for (index, effect) in &pieces[..n - 1] {
        let coins = solve_indexed(&residual, effect, *index)?;
        steps.extend(iteration_steps(&coins)?);
        residual = coins.new_residual;
    }
    let outcome_map = pieces.iter().enumerate().map(|(j, (index, _))| (2 * (n - 1 - j) as Position, *index)).collect();
    let mut result = CompilationResult {
        program: WalkProgram::new(steps)?,
        outcome_map,
        residual_error: 0.0,
        outcome_count: target.len(),
    };
    result.residual_error = result.deviation_from(target);
    if result.residual_error > tolerance::VERIFIED {
        return Err(Error::ResidualTooLarge { residual: result.residual_error });
    }
    Ok(result)
}

impl CompilationResult {
    /// Number of extraction iterations (two steps each).
    pub fn iterations(&self) -> usize {
        self.program.len() / 2
    }

    /// Induced effects regrouped by `outcome_map`, in target order, plus the
    /// summed effect of unmapped positions.
    pub fn grouped_effects(&self) -> (Vec<Mat2>, Mat2) {
        let mut grouped = alloc::vec![Mat2::ZERO; self.outcome_count];
        let mut stray = Mat2::ZERO;
        for (x, k) in transfer_operators(&self.program) {
            let e = k.adjoint() * k;
            match self.outcome_map.get(&x) {
                Some(&i) => grouped[i] += e,
                None => stray += e,
            }
        }
        (grouped, stray)
    }

    /// The induced POVM as target-indexed effects, labeled like `target`.
    pub fn regrouped_povm(&self, target: &Povm) -> Povm {
        let (grouped, _) = self.grouped_effects();
        Povm::new_unchecked(
            target
                .labels()
                .zip(grouped)
                .map(|(label, m)| crate::qubit::PovmElement { label: label.clone(), effect: Effect::hermitian_part(m) })
                .collect(),
        )
    }

    fn deviation_from(&self, target: &Povm) -> f64 {
        let (grouped, stray) = self.grouped_effects();
        target
            .effects()
            .zip(&grouped)
            .map(|(t, g)| g.max_abs_diff(t.matrix()))
            .fold(stray.max_abs_diff(&Mat2::ZERO), f64::max)
    }

    /// Outcome probabilities of a pure coin state by direct simulation,
    /// grouped by `outcome_map`; the second value is the unmapped mass.
    pub fn simulate_ket(&self, ket: &Vec2) -> (Vec<f64>, f64) {
        let mut probs = alloc::vec![0.0; self.outcome_count];
        let mut stray = 0.0;
        let final_state = run_unnormalized(&self.program, *ket, 0);
        for (x, p) in position_distribution(&final_state) {
            match self.outcome_map.get(&x) {
                Some(&i) => probs[i] += p,
                None => stray += p,
            }
        }
        (probs, stray)
    }

    /// Outcome probabilities of a (possibly mixed) state, simulated as the
    /// spectral mixture of pure walker runs.
    pub fn simulate(&self, state: &BlochState) -> Vec<f64> {
        let mut probs = alloc::vec![0.0; self.outcome_count];
        for (w, ket) in state.mixture() {
            if w == 0.0 {
                continue;
            }
            let (p, _) = self.simulate_ket(&ket);
            for (acc, pi) in probs.iter_mut().zip(p) {
                *acc += w * pi;
            }
        }
        probs
    }
}

/// Outcome of [`verify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerificationReport {
    pub states: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Compares walk-simulated probabilities with `Tr(ρEᵢ)` for `states` random
/// pure states; state `i` is drawn from stream `i` of `seed`.
pub fn verify(result: &CompilationResult, target: &Povm, states: usize, seed: u64) -> VerificationReport {
    let mut max_deviation = 0.0_f64;
    for i in 0..states {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let ket = random_pure_state(&mut rng);
        let (probs, stray) = result.simulate_ket(&ket);
        let rho = Mat2::outer(&ket, &ket);
        max_deviation = max_deviation.max(stray);
        for (p, e) in probs.iter().zip(target.effects()) {
            let born = (rho * *e.matrix()).trace().re;
            max_deviation = max_deviation.max((p - born).abs());
        }
    }
    VerificationReport { states, max_deviation, passed: max_deviation <= tolerance::VERIFIED }
}

fn label(signs: &[i8]) -> OutcomeLabel {
    OutcomeLabel::Signs(signs.iter().map(|&s| if s > 0 { Sign::Plus } else { Sign::Minus }).collect())
}

/// Published detector positions of the two-observable network.
pub fn preset_pair_mapping() -> Vec<(Position, OutcomeLabel)> {
    alloc::vec![(5, label(&[1, 1])), (3, label(&[-1, -1])), (1, label(&[1, -1])), (-1, label(&[-1, 1])),]
}

/// Published detector positions of the three-observable network.
pub fn preset_triple_mapping() -> Vec<(Position, OutcomeLabel)> {
    alloc::vec![
        (13, label(&[1, 1, 1])),
        (11, label(&[-1, -1, -1])),
        (9, label(&[1, 1, -1])),
        (7, label(&[-1, -1, 1])),
        (5, label(&[1, -1, 1])),
        (3, label(&[-1, 1, -1])),
        (1, label(&[1, -1, -1])),
        (-1, label(&[-1, 1, 1])),
    ]
}
