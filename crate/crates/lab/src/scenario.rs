//! Scenario configuration and the end-to-end experiment pipeline.
//!
//! A scenario measures a list of input states with one device — the joint
//! POVM of a pair or of all three Pauli observables, or separate unsharp
//! single-axis measurements — next to sharp von Neumann references for
//! every approximated axis. State-independent distances are estimated on
//! calibration states, the `+` eigenstates of each approximated axis, where
//! the state-dependent distance attains its maximum.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use povmwalk::metrics::{blw_bound, estimate_r, state_independent_distance_sq, triple_bound};
use povmwalk::qubit::{
    born_probabilities, joint_povm_pair, joint_povm_triple, jointly_measurable_pair, jointly_measurable_triple,
    marginal, pair_eta_bound, sharp_povm, triple_eta_bound,
};
use povmwalk::{
    compile_with_splitting, BinaryObservable, BlochState, CompilationResult, OutcomeLabel, PauliAxis, Povm,
    PovmElement, RelationCheck, Sign,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::sampling::{monte_carlo_errorbars_joint, sample_counts, Counts, DEFAULT_MC_RUNS};

/// Radius of the demonstration `psi` preset.
pub const PSI_RADIUS: f64 = 0.9888;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PairXy,
    PairXz,
    PairYz,
    Triple,
    VonNeumann,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::PairXy,
        ScenarioKind::PairXz,
        ScenarioKind::PairYz,
        ScenarioKind::Triple,
        ScenarioKind::VonNeumann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::PairXy => "pair-xy",
            ScenarioKind::PairXz => "pair-xz",
            ScenarioKind::PairYz => "pair-yz",
            ScenarioKind::Triple => "triple",
            ScenarioKind::VonNeumann => "von-neumann",
        }
    }

    /// Approximated observables, in outcome-label order.
    pub fn axes(self) -> &'static [PauliAxis] {
        use PauliAxis::*;
        match self {
            ScenarioKind::PairXy => &[X, Y],
            ScenarioKind::PairXz => &[X, Z],
            ScenarioKind::PairYz => &[Y, Z],
            ScenarioKind::Triple | ScenarioKind::VonNeumann => &[X, Y, Z],
        }
    }

    pub fn eta_bound(self) -> f64 {
        match self {
            ScenarioKind::Triple => triple_eta_bound(),
            ScenarioKind::VonNeumann => 1.0,
            _ => pair_eta_bound(),
        }
    }

    /// The largest jointly measurable efficiency; 1 for separate measurements.
    pub fn default_eta(self) -> f64 {
        self.eta_bound()
    }

    pub fn outcome_count(self) -> usize {
        match self {
            ScenarioKind::Triple => 8,
            ScenarioKind::VonNeumann => 6,
            _ => 4,
        }
    }

    pub fn default_states(self) -> Vec<NamedState> {
        let names: &[&str] = match self {
            ScenarioKind::Triple => &["psi", "x+", "y+", "z+"],
            _ => &["x+", "y+", "z+"],
        };
        names.iter().map(|n| NamedState::preset(n).expect("built-in preset")).collect()
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::Config(format!("unknown scenario kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Born rule on the POVM itself.
    #[default]
    Analytic,
    /// Compile the POVM to a walk program and simulate the walker.
    Walk,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Analytic => "analytic",
            Backend::Walk => "walk",
        })
    }
}

impl FromStr for Backend {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Backend::Analytic),
            "walk" => Ok(Backend::Walk),
            _ => Err(LabError::Config(format!("unknown backend {s:?}"))),
        }
    }
}

/// An input state with a display name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedState {
    pub name: String,
    pub bloch: [f64; 3],
}

impl NamedState {
    /// `x±`, `y±`, `z±`, and `psi` = (r/√3)(1, 1, 1) with r = [`PSI_RADIUS`].
    ///
    /// `psi` is a demonstration state for the generic-state path; it is not
    /// the state of any particular experiment.
    pub fn preset(name: &str) -> Option<Self> {
        let bloch = match name {
            "psi" => [PSI_RADIUS / 3.0_f64.sqrt(); 3],
            _ => {
                let mut chars = name.chars();
                let axis = PauliAxis::from_letter(chars.next()?)?;
                let sign = match (chars.next()?, chars.next()) {
                    ('+', None) => 1.0,
                    ('-', None) => -1.0,
                    _ => return None,
                };
                let mut r = [0.0; 3];
                r[axis.index()] = sign;
                r
            }
        };
        Some(NamedState { name: name.to_string(), bloch })
    }

    pub fn presets() -> Vec<NamedState> {
        ["x+", "x-", "y+", "y-", "z+", "z-", "psi"].iter().filter_map(|n| Self::preset(n)).collect()
    }

    /// A preset name or a Bloch vector `"x,y,z"`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(p) = Self::preset(text) {
            return Ok(p);
        }
        let parts: Vec<_> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parts.as_slice() {
            [Ok(x), Ok(y), Ok(z)] => {
                let state = NamedState { name: text.to_string(), bloch: [*x, *y, *z] };
                state.to_state()?;
                Ok(state)
            }
            _ => Err(LabError::Config(format!("state {text:?} is neither a preset nor \"x,y,z\""))),
        }
    }

    pub fn to_state(&self) -> Result<BlochState> {
        Ok(BlochState::new(self.bloch)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub eta: f64,
    pub states: Vec<NamedState>,
    /// Detections per measurement setting; 0 uses exact probabilities.
    pub shots: u64,
    pub mc_runs: usize,
    pub seed: u64,
    pub backend: Backend,
    /// Relative detection efficiency per device outcome, multiplied into the
    /// outcome probabilities which are then renormalised.
    pub efficiencies: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        ScenarioConfig {
            kind,
            eta: kind.default_eta(),
            states: kind.default_states(),
            shots: 0,
            mc_runs: DEFAULT_MC_RUNS,
            seed: 0,
            backend: Backend::Analytic,
            efficiencies: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.eta;
        let measurable = match self.kind {
            ScenarioKind::Triple => jointly_measurable_triple(eta),
            ScenarioKind::VonNeumann => eta > 0.0 && eta <= 1.0,
            _ => jointly_measurable_pair(eta),
        };
        if !measurable {
            return Err(LabError::Config(format!(
                "eta = {eta} outside (0, {}] for {}",
                self.kind.eta_bound(),
                self.kind
            )));
        }
        if self.states.is_empty() {
            return Err(LabError::Config("no input states".into()));
        }
        for s in &self.states {
            s.to_state()?;
        }
        if self.shots > 0 && self.mc_runs < 2 {
            return Err(LabError::Config(format!("mc_runs = {} but at least 2 are needed", self.mc_runs)));
        }
        if let Some(eff) = &self.efficiencies {
            let n = self.kind.outcome_count();
            if eff.len() != n {
                return Err(LabError::Config(format!("{} efficiencies given, {} expects {n}", eff.len(), self.kind)));
            }
            if let Some(e) = eff.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
                return Err(LabError::Config(format!("efficiency {e} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// A measuring device: a POVM, how its outcomes vote on each approximated
/// axis, and optionally its compiled walk.
struct Device {
    povm: Povm,
    labels: Vec<String>,
    /// `(slot, sign)` votes of each outcome.
    votes: Vec<Vec<(usize, Sign)>>,
    compiled: Option<CompilationResult>,
}

fn sign_votes(label: &OutcomeLabel) -> Vec<(usize, Sign)> {
    match label {
        OutcomeLabel::Signs(s) => s.iter().copied().enumerate().collect(),
        OutcomeLabel::Index(_) => Vec::new(),
    }
}

impl Device {
    fn from_povm(povm: Povm, labels: Vec<String>, votes: Vec<Vec<(usize, Sign)>>, backend: Backend) -> Result<Self> {
        let compiled = match backend {
            Backend::Analytic => None,
            Backend::Walk => Some(compile_with_splitting(&povm).map_err(LabError::Compile)?),
        };
        Ok(Device { povm, labels, votes, compiled })
    }

    fn joint(kind: ScenarioKind, eta: f64, backend: Backend) -> Result<Self> {
        let povm = match kind {
            ScenarioKind::Triple => joint_povm_triple(eta)?,
            ScenarioKind::VonNeumann => {
                // Each axis is chosen with probability 1/3 and measured alone.
                let mut elements = Vec::new();
                for axis in PauliAxis::ALL {
                    let obs = BinaryObservable::unsharp(axis, eta)?;
                    for effect in [obs.effect_plus(), obs.effect_minus()] {
                        elements.push(PovmElement {
                            label: OutcomeLabel::Index(elements.len() as i64),
                            effect: povmwalk::Effect::hermitian_part(effect.matrix().scale_real(1.0 / 3.0)),
                        });
                    }
                }
                Povm::new(elements)?
            }
            _ => {
                let axes = kind.axes();
                joint_povm_pair(axes[0], axes[1], eta)?
            }
        };
        let (labels, votes) = if kind == ScenarioKind::VonNeumann {
            PauliAxis::ALL
                .iter()
                .enumerate()
                .flat_map(|(slot, axis)| Sign::BOTH.map(move |s| (format!("{}{s}", axis.letter()), vec![(slot, s)])))
                .unzip()
        } else {
            povm.labels().map(|l| (l.to_string(), sign_votes(l))).unzip()
        };
        Device::from_povm(povm, labels, votes, backend)
    }

    fn sharp(axis: PauliAxis, backend: Backend) -> Result<Self> {
        let povm = sharp_povm(axis);
        let (labels, votes) = povm.labels().map(|l| (l.to_string(), sign_votes(l))).unzip();
        Device::from_povm(povm, labels, votes, backend)
    }

    /// Ideal outcome probabilities and the walk-vs-Born deviation.
    fn probabilities(&self, state: &BlochState) -> Result<(Vec<f64>, f64)> {
        let born = born_probabilities(state, &self.povm)?.probs;
        match &self.compiled {
            None => Ok((born, 0.0)),
            Some(c) => {
                let walk: Vec<f64> = c.simulate(state).into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
                let dev = walk.iter().zip(&born).map(|(w, b)| (w - b).abs()).fold(0.0, f64::max);
                Ok((walk, dev))
            }
        }
    }

    fn compile_residual(&self) -> f64 {
        self.compiled.as_ref().map_or(0.0, |c| c.residual_error)
    }

    /// Frequency of `+` on `slot` among the outcomes that vote on it.
    fn p_plus(&self, freqs: &[f64], slot: usize) -> f64 {
        let (mut plus, mut all) = (0.0, 0.0);
        for (f, votes) in freqs.iter().zip(&self.votes) {
            for &(s, sign) in votes {
                if s == slot {
                    all += f;
                    if sign == Sign::Plus {
                        plus += f;
                    }
                }
            }
        }
        if all > 0.0 {
            plus / all
        } else {
            0.5
        }
    }

    /// Device marginal for `slot`, ignoring detector efficiencies.
    fn marginal_observable(&self, kind: ScenarioKind, eta: f64, slot: usize) -> Result<BinaryObservable> {
        match kind {
            ScenarioKind::VonNeumann => Ok(BinaryObservable::unsharp(kind.axes()[slot], eta)?),
            _ => Ok(marginal(&self.povm, slot, Sign::Plus)?.to_observable()?),
        }
    }
}

fn apply_efficiencies(probs: &[f64], efficiencies: Option<&[f64]>) -> Result<Vec<f64>> {
    let Some(eff) = efficiencies else {
        return Ok(probs.to_vec());
    };
    let weighted: Vec<f64> = probs.iter().zip(eff).map(|(p, e)| p * e).collect();
    let total: f64 = weighted.iter().sum();
    if !(total > 0.0) {
        return Err(LabError::Config("efficiencies remove every detection".into()));
    }
    Ok(weighted.into_iter().map(|w| w / total).collect())
}

/// One measurement setting applied to one state.
struct Observation {
    ideal: Vec<f64>,
    /// Exact probabilities after efficiencies, or sampled frequencies.
    estimate: Vec<f64>,
    counts: Option<Counts>,
    deviation: f64,
}

fn observe(
    device: &Device,
    state: &BlochState,
    efficiencies: Option<&[f64]>,
    shots: u64,
    seed: u64,
) -> Result<Observation> {
    let (ideal, deviation) = device.probabilities(state)?;
    let expected = apply_efficiencies(&ideal, efficiencies)?;
    let (estimate, counts) = if shots == 0 {
        (expected, None)
    } else {
        let renormalised: f64 = expected.iter().sum();
        let dist = povmwalk::qubit::Distribution {
            labels: device.povm.labels().cloned().collect(),
            probs: expected.iter().map(|p| p / renormalised).collect(),
        };
        let counts = sample_counts(&dist, shots, seed)?;
        (counts.frequencies(), Some(counts))
    };
    Ok(Observation { ideal, estimate, counts, deviation })
}

#[derive(Clone, Copy, Debug, Default)]
struct AxisValues {
    p_sharp: f64,
    p_approx: f64,
    state_dep: f64,
    state_indep: f64,
    mean_sharp: f64,
    mean_approx: f64,
}

impl AxisValues {
    const WIDTH: usize = 6;

    fn push_to(&self, out: &mut Vec<f64>) {
        out.extend([self.p_sharp, self.p_approx, self.state_dep, self.state_indep, self.mean_sharp, self.mean_approx]);
    }

    fn from_slice(v: &[f64]) -> Self {
        AxisValues {
            p_sharp: v[0],
            p_approx: v[1],
            state_dep: v[2],
            state_indep: v[3],
            mean_sharp: v[4],
            mean_approx: v[5],
        }
    }
}

/// Every derived quantity of one state; flattened for Monte-Carlo.
#[derive(Clone, Debug)]
struct Derived {
    probs: Vec<f64>,
    axes: Vec<AxisValues>,
    r: f64,
    r_overshoot: bool,
    relation: Option<RelationCheck>,
}

impl Derived {
    fn flatten(&self) -> Vec<f64> {
        let mut out = self.probs.clone();
        for a in &self.axes {
            a.push_to(&mut out);
        }
        out.push(self.r);
        if let Some(rel) = &self.relation {
            out.extend([rel.lhs, rel.rhs, rel.margin]);
        }
        out
    }

    /// Reads error bars back in the layout of `self`.
    fn errors_from(&self, flat: &[f64]) -> Derived {
        let n = self.probs.len();
        let w = AxisValues::WIDTH;
        let m = self.axes.len();
        let axes = (0..m).map(|i| AxisValues::from_slice(&flat[n + w * i..n + w * (i + 1)])).collect();
        let r = flat[n + w * m];
        let relation = self.relation.map(|_| {
            let b = n + w * m + 1;
            RelationCheck { lhs: flat[b], rhs: flat[b + 1], margin: flat[b + 2], holds: true }
        });
        Derived { probs: flat[..n].to_vec(), axes, r, r_overshoot: false, relation }
    }
}

struct Pipeline<'a> {
    config: &'a ScenarioConfig,
    device: Device,
    sharp: Vec<Device>,
}

impl Pipeline<'_> {
    fn calibration_distance(&self, slot: usize, device_f: &[f64], sharp_f: &[f64]) -> f64 {
        4.0 * (sharp_f[0] - self.device.p_plus(device_f, slot)).abs()
    }

    /// Derived quantities from device, sharp, calibration-device and
    /// calibration-sharp frequencies.
    fn derive(&self, device_f: &[f64], sharp_f: &[Vec<f64>], cal_dev: &[Vec<f64>], cal_sharp: &[Vec<f64>]) -> Derived {
        let kind = self.config.kind;
        let axes: Vec<AxisValues> = (0..kind.axes().len())
            .map(|s| {
                let p_sharp = sharp_f[s][0];
                let p_approx = self.device.p_plus(device_f, s);
                AxisValues {
                    p_sharp,
                    p_approx,
                    state_dep: 4.0 * (p_sharp - p_approx).abs(),
                    state_indep: self.calibration_distance(s, &cal_dev[s], &cal_sharp[s]),
                    mean_sharp: 2.0 * p_sharp - 1.0,
                    mean_approx: 2.0 * p_approx - 1.0,
                }
            })
            .collect();
        let (r, r_overshoot) = if axes.len() == 3 {
            let est = estimate_r(axes[0].mean_sharp, axes[1].mean_sharp, axes[2].mean_sharp);
            (est.r, est.overshoot)
        } else {
            (0.0, false)
        };
        let relation = match kind {
            ScenarioKind::VonNeumann => None,
            ScenarioKind::Triple => {
                let lhs = axes.iter().map(|a| a.state_dep).sum();
                Some(RelationCheck::new(
                    lhs,
                    triple_bound(r, axes[0].state_indep, axes[1].state_indep, axes[2].state_indep),
                ))
            }
            _ => {
                let (k, l) = (kind.axes()[0], kind.axes()[1]);
                Some(RelationCheck::new(axes[0].state_indep + axes[1].state_indep, blw_bound(&k.unit(), &l.unit())))
            }
        };
        Derived { probs: device_f.to_vec(), axes, r, r_overshoot, relation }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Probability {
    pub label: String,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimatedProbability {
    pub label: String,
    pub p: f64,
    pub err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalReport {
    pub observable: String,
    pub p_sharp: f64,
    pub p_sharp_err: f64,
    pub p_approx: f64,
    pub p_approx_err: f64,
    pub mean_sharp: f64,
    pub mean_sharp_err: f64,
    pub mean_approx: f64,
    pub mean_approx_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub name: String,
    pub state_dep: f64,
    pub state_indep: f64,
    /// Error bar of `state_dep`.
    pub err: f64,
    pub state_indep_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Error bar of `margin`.
    pub err: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusReport {
    pub value: f64,
    pub err: f64,
    /// Norm of the prepared Bloch vector.
    pub exact: f64,
    pub overshoot: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StateReport {
    pub state: String,
    pub bloch: [f64; 3],
    pub distribution_ideal: Vec<Probability>,
    pub distribution_est: Vec<EstimatedProbability>,
    pub marginals: Vec<MarginalReport>,
    pub distances: Vec<DistanceReport>,
    pub relations: Vec<RelationReport>,
    pub r_est: Option<RadiusReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationReport {
    pub observable: String,
    pub state: String,
    pub state_indep: f64,
    pub err: f64,
    /// Closed-form distance of the device marginal, without efficiencies.
    pub theory: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BackendResidual {
    pub backend: Backend,
    /// Largest deviation of a compiled POVM from its target.
    pub compile_residual: f64,
    /// Largest |walk − Born| probability over every simulated state.
    pub max_probability_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub package: String,
    pub version: String,
    pub core_version: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ScenarioConfig,
    pub per_state: Vec<StateReport>,
    pub calibration: Vec<CalibrationReport>,
    pub backend_residual: BackendResidual,
    pub provenance: Provenance,
}

fn axis_name(axis: PauliAxis) -> String {
    axis.letter().to_string()
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let kind = config.kind;
    let axes = kind.axes();
    let pipeline = Pipeline {
        config,
        device: Device::joint(kind, config.eta, config.backend)?,
        sharp: axes.iter().map(|&a| Device::sharp(a, config.backend)).collect::<Result<_>>()?,
    };
    let eff = config.efficiencies.as_deref();
    let shots = config.shots;
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let mut deviation = 0.0_f64;

    let mut cal_dev = Vec::new();
    let mut cal_sharp = Vec::new();
    for (slot, &axis) in axes.iter().enumerate() {
        let state = BlochState::axis_eigenstate(axis, Sign::Plus);
        let d = observe(&pipeline.device, &state, eff, shots, seeds.next_u64())?;
        let s = observe(&pipeline.sharp[slot], &state, None, shots, seeds.next_u64())?;
        deviation = deviation.max(d.deviation).max(s.deviation);
        cal_dev.push(d);
        cal_sharp.push(s);
    }
    let cal_dev_f: Vec<Vec<f64>> = cal_dev.iter().map(|o| o.estimate.clone()).collect();
    let cal_sharp_f: Vec<Vec<f64>> = cal_sharp.iter().map(|o| o.estimate.clone()).collect();
    let m = axes.len();

    let cal_seed = seeds.next_u64();
    let cal_err = if shots > 0 {
        let sets: Vec<&Counts> =
            cal_dev.iter().chain(&cal_sharp).map(|o| o.counts.as_ref().expect("sampled")).collect();
        monte_carlo_errorbars_joint(&sets, config.mc_runs, cal_seed, |f| {
            (0..m).map(|s| pipeline.calibration_distance(s, &f[s], &f[m + s])).collect()
        })?
    } else {
        vec![0.0; m]
    };
    let calibration = axes
        .iter()
        .enumerate()
        .map(|(slot, &axis)| {
            let approx = pipeline.device.marginal_observable(kind, config.eta, slot)?;
            Ok(CalibrationReport {
                observable: axis_name(axis),
                state: format!("{}+", axis.letter().to_ascii_lowercase()),
                state_indep: pipeline.calibration_distance(slot, &cal_dev_f[slot], &cal_sharp_f[slot]),
                err: cal_err[slot],
                theory: state_independent_distance_sq(&BinaryObservable::sharp(axis), &approx),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_state = Vec::with_capacity(config.states.len());
    for named in &config.states {
        let state = named.to_state()?;
        let dev = observe(&pipeline.device, &state, eff, shots, seeds.next_u64())?;
        let sharp = (0..m)
            .map(|s| observe(&pipeline.sharp[s], &state, None, shots, seeds.next_u64()))
            .collect::<Result<Vec<_>>>()?;
        let mc_seed = seeds.next_u64();
        deviation = sharp.iter().fold(deviation.max(dev.deviation), |d, o| d.max(o.deviation));
        let sharp_f: Vec<Vec<f64>> = sharp.iter().map(|o| o.estimate.clone()).collect();

        let value = pipeline.derive(&dev.estimate, &sharp_f, &cal_dev_f, &cal_sharp_f);
        let err = if shots > 0 {
            let counts = |o: &Observation| o.counts.clone().expect("sampled");
            let owned: Vec<Counts> =
                std::iter::once(&dev).chain(&sharp).chain(&cal_dev).chain(&cal_sharp).map(counts).collect();
            let sets: Vec<&Counts> = owned.iter().collect();
            let flat = monte_carlo_errorbars_joint(&sets, config.mc_runs, mc_seed, |f| {
                pipeline.derive(&f[0], &f[1..1 + m], &f[1 + m..1 + 2 * m], &f[1 + 2 * m..]).flatten()
            })?;
            value.errors_from(&flat)
        } else {
            value.errors_from(&vec![0.0; value.flatten().len()])
        };
        per_state.push(state_report(&pipeline, named, &state, &dev, &value, &err));
    }

    let compile_residual =
        pipeline.sharp.iter().map(Device::compile_residual).fold(pipeline.device.compile_residual(), f64::max);
    Ok(ExperimentReport {
        config: config.clone(),
        per_state,
        calibration,
        backend_residual: BackendResidual {
            backend: config.backend,
            compile_residual,
            max_probability_deviation: deviation,
        },
        provenance: Provenance {
            seed: config.seed,
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: povmwalk::VERSION.to_string(),
        },
    })
}

fn state_report(
    pipeline: &Pipeline,
    named: &NamedState,
    state: &BlochState,
    dev: &Observation,
    value: &Derived,
    err: &Derived,
) -> StateReport {
    let kind = pipeline.config.kind;
    let labels = &pipeline.device.labels;
    let axes = kind.axes();
    StateReport {
        state: named.name.clone(),
        bloch: named.bloch,
        distribution_ideal: labels.iter().zip(&dev.ideal).map(|(l, &p)| Probability { label: l.clone(), p }).collect(),
        distribution_est: labels
            .iter()
            .zip(&value.probs)
            .zip(&err.probs)
            .map(|((l, &p), &e)| EstimatedProbability { label: l.clone(), p, err: e })
            .collect(),
        marginals: axes
            .iter()
            .zip(value.axes.iter().zip(&err.axes))
            .map(|(&axis, (v, e))| MarginalReport {
                observable: axis_name(axis),
                p_sharp: v.p_sharp,
                p_sharp_err: e.p_sharp,
                p_approx: v.p_approx,
                p_approx_err: e.p_approx,
                mean_sharp: v.mean_sharp,
                mean_sharp_err: e.mean_sharp,
                mean_approx: v.mean_approx,
                mean_approx_err: e.mean_approx,
            })
            .collect(),
        distances: axes
            .iter()
            .zip(value.axes.iter().zip(&err.axes))
            .map(|(&axis, (v, e))| DistanceReport {
                name: axis_name(axis),
                state_dep: v.state_dep,
                state_indep: v.state_indep,
                err: e.state_dep,
                state_indep_err: e.state_indep,
            })
            .collect(),
        relations: value
            .relation
            .iter()
            .zip(&err.relation)
            .map(|(v, e)| RelationReport {
                name: if kind == ScenarioKind::Triple { "triple" } else { "pair" }.to_string(),
                lhs: v.lhs,
                rhs: v.rhs,
                margin: v.margin,
                err: e.margin,
                holds: v.holds,
            })
            .collect(),
        r_est: (axes.len() == 3).then(|| RadiusReport {
            value: value.r,
            err: err.r,
            exact: state.radius(),
            overshoot: value.r_overshoot,
        }),
    }
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// One row per (state, quantity): `state,quantity,value,err`.
    /// Calibration rows use the state name `calib`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "quantity", "value", "err"])?;
        let mut row = |state: &str, quantity: String, value: f64, err: f64| {
            w.write_record([state, &quantity, &value.to_string(), &err.to_string()])
        };
        for c in &self.calibration {
            row("calib", format!("dist_sq_indep:{}", c.observable), c.state_indep, c.err)?;
            row("calib", format!("dist_sq_theory:{}", c.observable), c.theory, 0.0)?;
        }
        for s in &self.per_state {
            for p in &s.distribution_ideal {
                row(&s.state, format!("p_ideal:{}", p.label), p.p, 0.0)?;
            }
            for p in &s.distribution_est {
                row(&s.state, format!("p_est:{}", p.label), p.p, p.err)?;
            }
            for m in &s.marginals {
                row(&s.state, format!("p_sharp:{}", m.observable), m.p_sharp, m.p_sharp_err)?;
                row(&s.state, format!("p_approx:{}", m.observable), m.p_approx, m.p_approx_err)?;
                row(&s.state, format!("mean_sharp:{}", m.observable), m.mean_sharp, m.mean_sharp_err)?;
                row(&s.state, format!("mean_approx:{}", m.observable), m.mean_approx, m.mean_approx_err)?;
            }
            for d in &s.distances {
                row(&s.state, format!("dist_sq:{}", d.name), d.state_dep, d.err)?;
                row(&s.state, format!("dist_sq_indep:{}", d.name), d.state_indep, d.state_indep_err)?;
            }
            for r in &s.relations {
                row(&s.state, format!("{}_lhs", r.name), r.lhs, 0.0)?;
                row(&s.state, format!("{}_rhs", r.name), r.rhs, 0.0)?;
                row(&s.state, format!("{}_margin", r.name), r.margin, r.err)?;
            }
            if let Some(r) = &s.r_est {
                row(&s.state, "r".to_string(), r.value, r.err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exact(kind: ScenarioKind, states: &[&str]) -> ExperimentReport {
        let mut c = ScenarioConfig::new(kind);
        c.states = states.iter().map(|s| NamedState::parse(s).unwrap()).collect();
        run_scenario(&c).unwrap()
    }

    #[test]
    fn pair_yz_on_x_plus_has_zero_state_distances() {
        let r = exact(ScenarioKind::PairYz, &["x+"]);
        for d in &r.per_state[0].distances {
            assert_abs_diff_eq!(d.state_dep, 0.0, epsilon = 1e-15);
            assert_eq!(d.err, 0.0);
        }
    }

    #[test]
    fn pair_xy_relation_is_tight() {
        let r = exact(ScenarioKind::PairXy, &["z+"]);
        let rel = &r.per_state[0].relations[0];
        assert_abs_diff_eq!(rel.rhs, 4.0 - 2.0 * 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rel.lhs, rel.rhs, epsilon = 1e-9);
        assert!(rel.holds);
        for c in &r.calibration {
            assert_abs_diff_eq!(c.state_indep, c.theory, epsilon = 1e-12);
        }
    }

    #[test]
    fn triple_on_z_plus() {
        let r = exact(ScenarioKind::Triple, &["z+"]);
        let s = &r.per_state[0];
        let d: Vec<f64> = s.distances.iter().map(|d| d.state_dep).collect();
        assert_abs_diff_eq!(d[2], 2.0 * (3.0_f64.sqrt() - 1.0) / 3.0_f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.relations[0].margin, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.r_est.as_ref().unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_reports_are_reproducible() {
        let c = ScenarioConfig::new(ScenarioKind::Triple);
        assert_eq!(run_scenario(&c).unwrap().to_json(), run_scenario(&c).unwrap().to_json());
    }

    #[test]
    fn von_neumann_means_follow_the_state() {
        let r = exact(ScenarioKind::VonNeumann, &["0.3,-0.4,0.5"]);
        let s = &r.per_state[0];
        assert!(s.relations.is_empty());
        for (m, want) in s.marginals.iter().zip([0.3, -0.4, 0.5]) {
            assert_abs_diff_eq!(m.mean_sharp, want, epsilon = 1e-12);
            assert_abs_diff_eq!(m.mean_approx, want, epsilon = 1e-12);
        }
        let total: f64 = s.distribution_ideal.iter().map(|p| p.p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn efficiencies_renormalise() {
        let mut c = ScenarioConfig::new(ScenarioKind::PairXy);
        c.states = vec![NamedState::preset("z+").unwrap()];
        c.efficiencies = Some(vec![1.0, 0.5, 1.0, 1.0]);
        let r = run_scenario(&c).unwrap();
        let est: Vec<f64> = r.per_state[0].distribution_est.iter().map(|p| p.p).collect();
        assert_abs_diff_eq!(est.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est[1], 0.125 / 0.875, epsilon = 1e-12);
        for p in &r.per_state[0].distribution_ideal {
            assert_abs_diff_eq!(p.p, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = ScenarioConfig::new(ScenarioKind::Triple);
        c.eta = 0.7;
        assert!(matches!(c.validate(), Err(LabError::Config(_))));
        let mut c = ScenarioConfig::new(ScenarioKind::PairXz);
        c.efficiencies = Some(vec![1.0; 3]);
        assert!(c.validate().is_err());
        c.efficiencies = Some(vec![1.0, 1.0, 0.0, 1.0]);
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::new(ScenarioKind::PairXz);
        c.shots = 10;
        c.mc_runs = 1;
        assert!(c.validate().is_err());
        assert!(NamedState::parse("1,1,0").is_err());
        assert!(NamedState::parse("w+").is_err());
        assert!("pair-ab".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn presets() {
        let psi = NamedState::preset("psi").unwrap().to_state().unwrap();
        assert_abs_diff_eq!(psi.radius(), PSI_RADIUS, epsilon = 1e-15);
        assert_eq!(NamedState::preset("y-").unwrap().bloch, [0.0, -1.0, 0.0]);
        assert_eq!(NamedState::presets().len(), 7);
    }

    #[test]
    fn csv_has_one_row_per_quantity() {
        let r = exact(ScenarioKind::PairXy, &["x+"]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("state,quantity,value,err\n"));
        assert!(text.contains("x+,dist_sq:X,"));
        assert!(text.contains("calib,dist_sq_indep:Y,"));
        assert!(text.contains("x+,pair_margin,"));
    }
}
