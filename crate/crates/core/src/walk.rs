//! One-dimensional discrete-time quantum walk with position- and
//! time-dependent coins.
//!
//! A step applies the coin assigned to each occupied position and then the
//! conditional translation `|x,→⟩ ↦ |x+1,→⟩`, `|x,←⟩ ↦ |x−1,←⟩`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by std inherents when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{vec2_norm_sqr, Mat2, Vec2, C64, ONE, ZERO};
use crate::qubit::{Effect, OutcomeLabel, Povm, PovmElement};
use crate::tolerance;

/// Lattice position of the walker.
pub type Position = i64;

/// A unitary acting on the coin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoinOp {
    /// `[[cos θ, e^{−iβ} sin θ], [−e^{iβ} sin θ, cos θ]]`.
    Angles { theta: f64, beta: f64 },
    /// Explicit unitary matrix.
    Matrix(Mat2),
}

impl CoinOp {
    pub const IDENTITY: CoinOp = CoinOp::Matrix(Mat2::IDENTITY);
    pub const NOT: CoinOp = CoinOp::Matrix(Mat2::SIGMA_X);

    pub fn angles(theta: f64, beta: f64) -> Self {
        CoinOp::Angles { theta, beta }
    }

    /// Accepts `m` if `m†m = 𝟙` within [`tolerance::EXACT`].
    pub fn unitary(m: Mat2) -> Result<Self> {
        let defect = m.unitarity_defect();
        if !(defect <= tolerance::EXACT) {
            return Err(Error::NotUnitary { defect });
        }
        Ok(CoinOp::Matrix(m))
    }

    pub fn matrix(&self) -> Mat2 {
        match *self {
            CoinOp::Angles { theta, beta } => {
                let (s, c) = theta.sin_cos();
                let phase = C64::cis(beta);
                Mat2::new(C64::new(c, 0.0), phase.conj() * s, -phase * s, C64::new(c, 0.0))
            }
            CoinOp::Matrix(m) => m,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.matrix() == Mat2::IDENTITY
    }
}

/// Coins for one step: explicit per-position assignments plus a default.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRule {
    coins: BTreeMap<Position, CoinOp>,
    default: CoinOp,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule { coins: BTreeMap::new(), default: CoinOp::IDENTITY }
    }
}

impl StepRule {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rejects non-unitary coins.
    pub fn with_default(default: CoinOp) -> Result<Self> {
        check_unitary(&default)?;
        Ok(StepRule { coins: BTreeMap::new(), default })
    }

    pub fn from_coins<I>(coins: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Position, CoinOp)>,
    {
        let mut rule = StepRule::new();
        for (x, c) in coins {
            rule = rule.with(x, c)?;
        }
        Ok(rule)
    }

    pub fn with(mut self, position: Position, coin: CoinOp) -> Result<Self> {
        check_unitary(&coin)?;
        self.coins.insert(position, coin);
        Ok(self)
    }

    pub fn coin_at(&self, position: Position) -> &CoinOp {
        self.coins.get(&position).unwrap_or(&self.default)
    }

    pub fn coins(&self) -> &BTreeMap<Position, CoinOp> {
        &self.coins
    }

    pub fn default_coin(&self) -> &CoinOp {
        &self.default
    }
}

fn check_unitary(coin: &CoinOp) -> Result<()> {
    let defect = coin.matrix().unitarity_defect();
    if !(defect <= tolerance::EXACT) {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Nonempty sequence of steps, each "apply coins, then translate".
#[derive(Clone, Debug, PartialEq)]
pub struct WalkProgram {
    steps: Vec<StepRule>,
}

impl WalkProgram {
    pub fn new(steps: Vec<StepRule>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyProgram);
        }
        Ok(WalkProgram { steps })
    }

    pub fn steps(&self) -> &[StepRule] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Sparse walker state: occupied positions → `(amp_→, amp_←)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct WalkState {
    amplitudes: BTreeMap<Position, Vec2>,
}

impl WalkState {
    pub fn localized(position: Position, coin: Vec2) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(position, coin);
        WalkState { amplitudes }
    }

    pub fn from_amplitudes<I: IntoIterator<Item = (Position, Vec2)>>(iter: I) -> Self {
        let mut state = WalkState::default();
        for (x, v) in iter {
            state.accumulate(x, v);
        }
        state
    }

    pub fn amplitude(&self, position: Position) -> Vec2 {
        self.amplitudes.get(&position).copied().unwrap_or([ZERO, ZERO])
    }

    pub fn amplitudes(&self) -> &BTreeMap<Position, Vec2> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(vec2_norm_sqr).sum()
    }

    /// Positions carrying nonzero amplitude.
    pub fn support(&self) -> impl Iterator<Item = Position> + '_ {
        self.amplitudes.iter().filter(|(_, v)| vec2_norm_sqr(v) > 0.0).map(|(x, _)| *x)
    }

    fn accumulate(&mut self, position: Position, v: Vec2) {
        let slot = self.amplitudes.entry(position).or_insert([ZERO, ZERO]);
        slot[0] += v[0];
        slot[1] += v[1];
    }
}

/// Conditional translation.
pub fn translate(state: &WalkState) -> WalkState {
    let mut out = WalkState::default();
    for (&x, v) in &state.amplitudes {
        out.accumulate(x + 1, [v[0], ZERO]);
        out.accumulate(x - 1, [ZERO, v[1]]);
    }
    out
}

/// Coins per position, then translation.
pub fn apply_step(state: &WalkState, rule: &StepRule) -> WalkState {
    let mut out = WalkState::default();
    for (&x, v) in &state.amplitudes {
        let w = rule.coin_at(x).matrix().apply(v);
        out.accumulate(x + 1, [w[0], ZERO]);
        out.accumulate(x - 1, [ZERO, w[1]]);
    }
    out
}

/// Runs `program` on a walker starting at `x0` with the given coin.
pub fn run(program: &WalkProgram, coin_state: Vec2, x0: Position) -> Result<WalkState> {
    let norm_sqr = vec2_norm_sqr(&coin_state);
    if !((norm_sqr - 1.0).abs() <= tolerance::EXACT) {
        return Err(Error::NotNormalized { norm_sqr });
    }
    Ok(run_unnormalized(program, coin_state, x0))
}

pub(crate) fn run_unnormalized(program: &WalkProgram, coin_state: Vec2, x0: Position) -> WalkState {
    program.steps.iter().fold(WalkState::localized(x0, coin_state), |s, rule| apply_step(&s, rule))
}

/// `p(x) = ‖ψ(x)‖²` over occupied positions.
pub fn position_distribution(state: &WalkState) -> BTreeMap<Position, f64> {
    state.amplitudes.iter().map(|(&x, v)| (x, vec2_norm_sqr(v))).collect()
}

/// Transfer operators `K_x` of a program started at the origin: column `j`
/// holds the final coin amplitudes at `x` for input basis state `j`.
pub fn transfer_operators(program: &WalkProgram) -> BTreeMap<Position, Mat2> {
    let right = run_unnormalized(program, [ONE, ZERO], 0);
    let left = run_unnormalized(program, [ZERO, ONE], 0);
    let mut out: BTreeMap<Position, Mat2> = BTreeMap::new();
    for (&x, v) in right.amplitudes() {
        let k = out.entry(x).or_insert(Mat2::ZERO);
        k[(0, 0)] = v[0];
        k[(1, 0)] = v[1];
    }
    for (&x, v) in left.amplitudes() {
        let k = out.entry(x).or_insert(Mat2::ZERO);
        k[(0, 1)] = v[0];
        k[(1, 1)] = v[1];
    }
    out
}

/// POVM on the coin realised by detecting the final position,
/// `E_x = K_x†K_x`, labeled `Index(x)` in ascending position order.
pub fn induced_povm(program: &WalkProgram) -> Povm {
    let elements = transfer_operators(program)
        .into_iter()
        .map(|(x, k)| PovmElement { label: OutcomeLabel::Index(x), effect: Effect::hermitian_part(k.adjoint() * k) })
        .collect();
    Povm::new_unchecked(elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{born_probabilities, validate_povm, BlochState};
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    const R: Vec2 = [ONE, ZERO];
    const L: Vec2 = [ZERO, ONE];

    fn one_step(rule: StepRule) -> WalkProgram {
        WalkProgram::new(vec![rule]).unwrap()
    }

    #[test]
    fn translate_examples() {
        let s = translate(&WalkState::localized(0, R));
        assert_eq!(s.amplitude(1), R);
        let s = translate(&WalkState::localized(0, L));
        assert_eq!(s.amplitude(-1), L);

        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let s = translate(&WalkState::localized(0, [h, h]));
        assert_eq!(s.amplitude(1), [h, ZERO]);
        assert_eq!(s.amplitude(-1), [ZERO, h]);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn apply_step_examples() {
        let not = StepRule::from_coins([(0, CoinOp::NOT)]).unwrap();
        assert_eq!(apply_step(&WalkState::localized(0, R), &not).amplitude(-1), L);

        assert_eq!(apply_step(&WalkState::localized(2, R), &StepRule::new()).amplitude(3), R);

        let c = StepRule::from_coins([(0, CoinOp::angles(FRAC_PI_4, 0.0))]).unwrap();
        let s = apply_step(&WalkState::localized(0, R), &c);
        assert_abs_diff_eq!(s.amplitude(1)[0].re, FRAC_PI_4.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(-1)[1].re, -FRAC_PI_4.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_unitary_coin() {
        let m = Mat2::from_real(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(CoinOp::unitary(m), Err(Error::NotUnitary { .. })));
        assert!(matches!(StepRule::new().with(0, CoinOp::Matrix(m)), Err(Error::NotUnitary { .. })));
        assert_eq!(WalkProgram::new(vec![]), Err(Error::EmptyProgram));
    }

    #[test]
    fn run_examples() {
        let n = 7;
        let prog = WalkProgram::new(vec![StepRule::new(); n]).unwrap();
        let s = run(&prog, R, 0).unwrap();
        assert_eq!(s.amplitude(n as i64), R);

        let prog = WalkProgram::new(vec![
            StepRule::from_coins([(0, CoinOp::NOT)]).unwrap(),
            StepRule::from_coins([(-1, CoinOp::NOT)]).unwrap(),
        ])
        .unwrap();
        let s = run(&prog, R, 0).unwrap();
        assert_eq!(s.support().collect::<Vec<_>>(), vec![0]);
        assert_eq!(s.amplitude(0), R);

        assert!(matches!(run(&prog, [ONE, ONE], 0), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn position_distribution_examples() {
        let d = position_distribution(&WalkState::localized(1, R));
        assert_eq!(d.get(&1), Some(&1.0));

        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let s = WalkState::from_amplitudes([(1, [h, ZERO]), (-1, [ZERO, h])]);
        let d = position_distribution(&s);
        assert_abs_diff_eq!(d[&1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[&-1], 0.5, epsilon = 1e-15);

        let c = one_step(StepRule::from_coins([(0, CoinOp::angles(FRAC_PI_4, 0.0))]).unwrap());
        let d = position_distribution(&run(&c, R, 0).unwrap());
        assert_abs_diff_eq!(d[&1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[&-1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn induced_povm_of_identity_step_is_sigma_z() {
        let povm = induced_povm(&one_step(StepRule::new()));
        assert_eq!(povm.len(), 2);
        let e_right = povm.elements().iter().find(|e| e.label == OutcomeLabel::Index(1)).unwrap();
        let e_left = povm.elements().iter().find(|e| e.label == OutcomeLabel::Index(-1)).unwrap();
        assert!(e_right.effect.matrix().max_abs_diff(&Mat2::from_real(1.0, 0.0, 0.0, 0.0)) < 1e-15);
        assert!(e_left.effect.matrix().max_abs_diff(&Mat2::from_real(0.0, 0.0, 0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn induced_povm_of_coin_step_projects_onto_rotated_basis() {
        let coin = CoinOp::angles(FRAC_PI_4, 0.3);
        let povm = induced_povm(&one_step(StepRule::from_coins([(0, coin)]).unwrap()));
        let c_dag = coin.matrix().adjoint();
        let right = c_dag.apply(&R);
        let left = c_dag.apply(&L);
        let e1 = povm.elements().iter().find(|e| e.label == OutcomeLabel::Index(1)).unwrap();
        let em1 = povm.elements().iter().find(|e| e.label == OutcomeLabel::Index(-1)).unwrap();
        assert!(e1.effect.matrix().max_abs_diff(&Mat2::outer(&right, &right)) < 1e-15);
        assert!(em1.effect.matrix().max_abs_diff(&Mat2::outer(&left, &left)) < 1e-15);
        assert!(e1.effect.eigenvalues()[1].abs() < 1e-15);
        assert!(validate_povm(&povm).passed);
    }

    #[test]
    fn induced_povm_matches_simulation_for_pure_state() {
        let prog = WalkProgram::new(vec![
            StepRule::from_coins([(0, CoinOp::angles(0.4, 1.1))]).unwrap(),
            StepRule::from_coins([(1, CoinOp::angles(1.2, -0.5)), (-1, CoinOp::NOT)]).unwrap(),
            StepRule::with_default(CoinOp::angles(0.7, 0.2)).unwrap(),
        ])
        .unwrap();
        let povm = induced_povm(&prog);
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let direct = position_distribution(&run(&prog, psi, 0).unwrap());
        let born = born_probabilities(&BlochState::from_ket(&psi).unwrap(), &povm).unwrap();
        for (label, p) in born.labels.iter().zip(born.probs) {
            let OutcomeLabel::Index(x) = label else { unreachable!() };
            assert_abs_diff_eq!(direct[x], p, epsilon = 1e-14);
        }
    }
}
