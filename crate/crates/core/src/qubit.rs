//! Qubit states, binary observables, effects and POVM families.

use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // shadowed by std inherents when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{bloch_ket, dot3, norm3, scale3, Mat2, Vec2, Vec3};
use crate::tolerance;

/// One of the three Pauli directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn index(self) -> usize {
        match self {
            PauliAxis::X => 0,
            PauliAxis::Y => 1,
            PauliAxis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }

    pub fn sigma(self) -> Mat2 {
        match self {
            PauliAxis::X => Mat2::SIGMA_X,
            PauliAxis::Y => Mat2::SIGMA_Y,
            PauliAxis::Z => Mat2::SIGMA_Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'X' => Some(PauliAxis::X),
            'Y' => Some(PauliAxis::Y),
            'Z' => Some(PauliAxis::Z),
            _ => None,
        }
    }
}

/// A ±1 measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Outcome label of a POVM element.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutcomeLabel {
    /// One sign per approximated observable.
    Signs(Vec<Sign>),
    /// Opaque index (walker positions use this).
    Index(i64),
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeLabel::Signs(signs) => {
                f.write_str("(")?;
                for (i, s) in signs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
            OutcomeLabel::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Qubit state `ρ = ½(𝟙 + r·σ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState {
    r: Vec3,
}

impl BlochState {
    pub fn new(r: Vec3) -> Result<Self> {
        let norm = norm3(&r);
        if !(norm <= 1.0 + tolerance::EXACT) {
            return Err(Error::UnphysicalState { norm });
        }
        Ok(BlochState { r })
    }

    pub fn maximally_mixed() -> Self {
        BlochState { r: [0.0; 3] }
    }

    /// The `sign` eigenstate of `σ_axis`.
    pub fn axis_eigenstate(axis: PauliAxis, sign: Sign) -> Self {
        BlochState { r: scale3(sign.value(), &axis.unit()) }
    }

    /// Pure state of a (not necessarily normalised) coin vector.
    pub fn from_ket(v: &Vec2) -> Result<Self> {
        let n = crate::linalg::vec2_norm_sqr(v);
        if n == 0.0 {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let rho = Mat2::outer(v, v).scale_real(1.0 / n);
        let (_, r) = rho.bloch_params();
        BlochState::new(r)
    }

    pub fn bloch(&self) -> Vec3 {
        self.r
    }

    /// Purity radius `r = ‖r‖`.
    pub fn radius(&self) -> f64 {
        norm3(&self.r)
    }

    pub fn density(&self) -> Mat2 {
        Mat2::from_bloch(1.0, &self.r)
    }

    /// `ρ = Σ wᵢ |φᵢ⟩⟨φᵢ|` with weights `(1 ± r)/2`.
    pub fn mixture(&self) -> [(f64, Vec2); 2] {
        let r = self.radius();
        let n = if r > 0.0 { scale3(1.0 / r, &self.r) } else { [0.0, 0.0, 1.0] };
        let rc = r.min(1.0);
        [(0.5 * (1.0 + rc), bloch_ket(&n)), (0.5 * (1.0 - rc), bloch_ket(&scale3(-1.0, &n)))]
    }
}

/// `ρ = ½(𝟙 + r·σ)` for a physical Bloch vector.
pub fn bloch_to_density(r: Vec3) -> Result<Mat2> {
    Ok(BlochState::new(r)?.density())
}

/// Hermitian 2×2 POVM element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Effect(Mat2);

impl Effect {
    /// Accepts a matrix Hermitian within [`tolerance::VERIFIED`]; positivity is
    /// checked by [`validate_povm`].
    pub fn from_matrix(m: Mat2) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > tolerance::VERIFIED {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Effect(m))
    }

    /// `½(a0·𝟙 + a·σ)`.
    pub fn from_bloch(a0: f64, a: &Vec3) -> Self {
        Effect(Mat2::from_bloch(a0, a))
    }

    /// `(m + m†)/2`.
    pub fn hermitian_part(m: Mat2) -> Self {
        Effect((m + m.adjoint()).scale_real(0.5))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn bloch_params(&self) -> (f64, Vec3) {
        self.0.bloch_params()
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> [f64; 2] {
        self.0.eigh().values
    }

    /// `|v⟩` with `E = |v⟩⟨v|` for the dominant eigenpair.
    pub fn dominant_vector(&self) -> Vec2 {
        let e = self.0.eigh();
        let s = e.values[0].max(0.0).sqrt();
        [e.vectors[0][0] * s, e.vectors[0][1] * s]
    }

    /// `Tr(ρE)`.
    pub fn expectation(&self, state: &BlochState) -> f64 {
        let (a0, a) = self.bloch_params();
        0.5 * (a0 + dot3(&state.bloch(), &a))
    }

    pub fn to_observable(&self) -> Result<BinaryObservable> {
        let (a0, a) = self.bloch_params();
        BinaryObservable::new(a0, a)
    }
}

impl core::ops::Add for Effect {
    type Output = Effect;
    fn add(self, rhs: Effect) -> Effect {
        Effect(self.0 + rhs.0)
    }
}

/// A ±1 observable given by its "+" effect `E(+) = ½(a0·𝟙 + a·σ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryObservable {
    a0: f64,
    a: Vec3,
}

impl BinaryObservable {
    /// Both `E(+)` and `E(−) = 𝟙 − E(+)` must be positive:
    /// `‖a‖ ≤ min(a0, 2 − a0)`.
    pub fn new(a0: f64, a: Vec3) -> Result<Self> {
        let len = norm3(&a);
        if !(len <= a0.min(2.0 - a0) + tolerance::EXACT) {
            return Err(Error::InvalidObservable { a0, len });
        }
        Ok(BinaryObservable { a0, a })
    }

    pub fn sharp(axis: PauliAxis) -> Self {
        BinaryObservable { a0: 1.0, a: axis.unit() }
    }

    pub fn unsharp(axis: PauliAxis, eta: f64) -> Result<Self> {
        make_unsharp_observable(axis.unit(), eta)
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a(&self) -> Vec3 {
        self.a
    }

    pub fn effect_plus(&self) -> Effect {
        Effect::from_bloch(self.a0, &self.a)
    }

    pub fn effect_minus(&self) -> Effect {
        Effect::from_bloch(2.0 - self.a0, &scale3(-1.0, &self.a))
    }

    pub fn is_sharp(&self) -> bool {
        (self.a0 - 1.0).abs() <= tolerance::EXACT && (norm3(&self.a) - 1.0).abs() <= tolerance::EXACT
    }

    /// `η = ‖a‖` for unbiased (`a0 = 1`) observables.
    pub fn efficiency(&self) -> Option<f64> {
        ((self.a0 - 1.0).abs() <= tolerance::EXACT).then(|| norm3(&self.a))
    }

    /// Relabel outcomes `+ ↔ −`.
    pub fn relabeled(&self) -> Self {
        BinaryObservable { a0: 2.0 - self.a0, a: scale3(-1.0, &self.a) }
    }

    /// `p(+) = Tr(ρE(+))`.
    pub fn probability_plus(&self, state: &BlochState) -> f64 {
        self.effect_plus().expectation(state)
    }
}

/// `E(+) = ½(𝟙 + η·axis·σ)`.
pub fn make_unsharp_observable(axis: Vec3, eta: f64) -> Result<BinaryObservable> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidEfficiency { eta });
    }
    let norm = norm3(&axis);
    if !((norm - 1.0).abs() <= tolerance::EXACT) {
        return Err(Error::NonUnitAxis { norm });
    }
    Ok(BinaryObservable { a0: 1.0, a: scale3(eta, &axis) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement {
    pub label: OutcomeLabel,
    pub effect: Effect,
}

/// Ordered, labeled list of effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<PovmElement>,
}

impl Povm {
    /// Validates at [`tolerance::VERIFIED`].
    pub fn new(elements: Vec<PovmElement>) -> Result<Self> {
        let povm = Povm { elements };
        let report = validate_povm(&povm);
        if !report.passed {
            return Err(report.into_error());
        }
        Ok(povm)
    }

    pub fn new_unchecked(elements: Vec<PovmElement>) -> Self {
        Povm { elements }
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &OutcomeLabel> {
        self.elements.iter().map(|e| &e.label)
    }

    pub fn effects(&self) -> impl Iterator<Item = &Effect> {
        self.elements.iter().map(|e| &e.effect)
    }

    pub fn position_of(&self, label: &OutcomeLabel) -> Option<usize> {
        self.elements.iter().position(|e| &e.label == label)
    }
}

/// Outcome of [`validate_povm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationReport {
    /// Most negative eigenvalue over all elements.
    pub min_eigenvalue: f64,
    /// Max entrywise `|Σ Eᵢ − 𝟙|`.
    pub completeness_residual: f64,
    pub passed: bool,
}

impl ValidationReport {
    pub(crate) fn into_error(self) -> Error {
        Error::InvalidPovm { min_eigenvalue: self.min_eigenvalue, completeness_residual: self.completeness_residual }
    }
}

pub fn validate_povm(povm: &Povm) -> ValidationReport {
    let mut sum = Mat2::ZERO;
    let mut min_eigenvalue = f64::INFINITY;
    for e in povm.effects() {
        sum += *e.matrix();
        min_eigenvalue = min_eigenvalue.min(e.eigenvalues()[1]);
    }
    let completeness_residual = sum.max_abs_diff(&Mat2::IDENTITY);
    let passed =
        !povm.is_empty() && min_eigenvalue >= -tolerance::VERIFIED && completeness_residual <= tolerance::VERIFIED;
    ValidationReport { min_eigenvalue, completeness_residual, passed }
}

fn sign_tuples(arity: usize) -> Vec<Vec<Sign>> {
    let mut out: Vec<Vec<Sign>> = alloc::vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                Sign::BOTH.into_iter().map(move |s| {
                    let mut p = prefix.clone();
                    p.push(s);
                    p
                })
            })
            .collect();
    }
    out
}

/// Upper efficiency bound for joint measurability of two unbiased observables.
pub fn pair_eta_bound() -> f64 {
    core::f64::consts::FRAC_1_SQRT_2
}

/// Upper efficiency bound for joint measurability of the Pauli triple.
pub fn triple_eta_bound() -> f64 {
    1.0 / 3.0_f64.sqrt()
}

pub fn jointly_measurable_pair(eta: f64) -> bool {
    eta > 0.0 && eta <= pair_eta_bound() + tolerance::EXACT
}

pub fn jointly_measurable_triple(eta: f64) -> bool {
    eta > 0.0 && eta <= triple_eta_bound() + tolerance::EXACT
}

/// `M_{a,b} = [𝟙 + η(a σ_k + b σ_l)]/4` without any positivity check.
pub fn pair_family_elements(k: PauliAxis, l: PauliAxis, eta: f64) -> Vec<PovmElement> {
    sign_tuples(2)
        .into_iter()
        .map(|signs| {
            let mut a = [0.0; 3];
            a[k.index()] += 0.5 * eta * signs[0].value();
            a[l.index()] += 0.5 * eta * signs[1].value();
            PovmElement { effect: Effect::from_bloch(0.5, &a), label: OutcomeLabel::Signs(signs) }
        })
        .collect()
}

/// Joint measurement of noisy `σ_k` and `σ_l`, labels `(a, b)`.
pub fn joint_povm_pair(k: PauliAxis, l: PauliAxis, eta: f64) -> Result<Povm> {
    if k == l {
        return Err(Error::SameAxis(k));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidEfficiency { eta });
    }
    if !jointly_measurable_pair(eta) {
        return Err(Error::EfficiencyAboveBound { eta, bound: pair_eta_bound() });
    }
    Ok(Povm::new_unchecked(pair_family_elements(k, l, eta)))
}

/// `M_{a,b,c} = [𝟙 + η(a σ_x + b σ_y + c σ_z)]/8` without any positivity check.
pub fn triple_family_elements(eta: f64) -> Vec<PovmElement> {
    sign_tuples(3)
        .into_iter()
        .map(|signs| {
            let a = [0.25 * eta * signs[0].value(), 0.25 * eta * signs[1].value(), 0.25 * eta * signs[2].value()];
            PovmElement { effect: Effect::from_bloch(0.25, &a), label: OutcomeLabel::Signs(signs) }
        })
        .collect()
}

/// Joint measurement of noisy `σ_x`, `σ_y`, `σ_z`, labels `(a, b, c)`.
pub fn joint_povm_triple(eta: f64) -> Result<Povm> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidEfficiency { eta });
    }
    if !jointly_measurable_triple(eta) {
        return Err(Error::EfficiencyAboveBound { eta, bound: triple_eta_bound() });
    }
    Ok(Povm::new_unchecked(triple_family_elements(eta)))
}

/// Projective (sharp) measurement of `σ_axis`, labels `(+)` and `(−)`.
pub fn sharp_povm(axis: PauliAxis) -> Povm {
    let obs = BinaryObservable::sharp(axis);
    Povm::new_unchecked(alloc::vec![
        PovmElement { label: OutcomeLabel::Signs(alloc::vec![Sign::Plus]), effect: obs.effect_plus() },
        PovmElement { label: OutcomeLabel::Signs(alloc::vec![Sign::Minus]), effect: obs.effect_minus() },
    ])
}

/// Sum of the elements whose label carries `sign` at position `index`.
pub fn marginal(povm: &Povm, index: usize, sign: Sign) -> Result<Effect> {
    let mut sum = Mat2::ZERO;
    for el in povm.elements() {
        match &el.label {
            OutcomeLabel::Signs(signs) => {
                let s = signs.get(index).ok_or(Error::MarginalIndexOutOfRange { index, arity: signs.len() })?;
                if *s == sign {
                    sum += *el.effect.matrix();
                }
            }
            OutcomeLabel::Index(_) => return Err(Error::UnsupportedMarginal),
        }
    }
    Ok(Effect(sum))
}

/// Labeled Born-rule probabilities, in POVM order.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub labels: Vec<OutcomeLabel>,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn get(&self, label: &OutcomeLabel) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `pᵢ = Tr(ρEᵢ)`, clamped to `[0, 1]`.
pub fn born_probabilities(state: &BlochState, povm: &Povm) -> Result<Distribution> {
    let report = validate_povm(povm);
    if !report.passed {
        return Err(report.into_error());
    }
    Ok(Distribution {
        labels: povm.labels().cloned().collect(),
        probs: povm.effects().map(|e| e.expectation(state).clamp(0.0, 1.0)).collect(),
    })
}
