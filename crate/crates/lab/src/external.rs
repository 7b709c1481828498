//! Re-analysis of externally measured distances and probabilities.
//!
//! Input is a long table, as CSV with a header or as a JSON array of
//! objects, with columns
//!
//! | column        | values                                                   |
//! |---------------|----------------------------------------------------------|
//! | `experiment`  | `XY`, `XZ`, `YZ` (pairs) or `XYZ` (triple)               |
//! | `state`       | `calib` for calibration runs, otherwise any state name   |
//! | `observable`  | `X`, `Y`, `Z`; empty for `r`                             |
//! | `quantity`    | `dist_sq`, `p_sharp`, `p_approx`, `mean` or `r`          |
//! | `value`       | measured value                                           |
//! | `uncertainty` | optional one-sigma error                                  |
//!
//! A squared distance may be given directly or as its `p_sharp`/`p_approx`
//! pair; `r` may be given directly or through the three `mean`s.
//!
//! Errors are propagated in quadrature; the linear sum of the input errors
//! is reported as well since published error bars are often linear sums.
//! Negative margins are flagged, never fatal.

use std::collections::BTreeMap;
use std::path::Path;

use povmwalk::metrics::{blw_bound, estimate_r, triple_bound};
use povmwalk::PauliAxis;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scenario::{NamedState, ScenarioKind};

pub const CALIBRATION_STATE: &str = "calib";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: String,
    pub state: String,
    #[serde(default)]
    pub observable: String,
    pub quantity: String,
    pub value: f64,
    #[serde(default, deserialize_with = "optional_number")]
    pub uncertainty: Option<f64>,
}

/// Accepts a number, `null`, or an empty string (blank CSV cell).
fn optional_number<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Number(f64),
        Text(String),
    }
    match Option::<Cell>::deserialize(d)? {
        None => Ok(None),
        Some(Cell::Number(x)) => Ok(Some(x)),
        Some(Cell::Text(s)) if s.trim().is_empty() => Ok(None),
        Some(Cell::Text(s)) => s.trim().parse().map(Some).map_err(serde::de::Error::custom),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonRecords {
    Bare(Vec<Record>),
    Wrapped { records: Vec<Record> },
}

pub fn parse_csv(text: &str) -> Result<Vec<Record>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| LabError::Data { row: i + 1, message: e.to_string() }))
        .collect()
}

pub fn parse_json(text: &str) -> Result<Vec<Record>> {
    Ok(match serde_json::from_str(text)? {
        JsonRecords::Bare(r) | JsonRecords::Wrapped { records: r } => r,
    })
}

/// Reads records, choosing the format by extension (`.json`, else CSV).
pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => parse_json(&text),
        _ => parse_csv(&text),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Quantity {
    DistSq,
    PSharp,
    PApprox,
    Mean,
    R,
}

impl Quantity {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "dist_sq" => Quantity::DistSq,
            "p_sharp" => Quantity::PSharp,
            "p_approx" => Quantity::PApprox,
            "mean" => Quantity::Mean,
            "r" => Quantity::R,
            _ => return None,
        })
    }

    fn range(self) -> (f64, f64) {
        match self {
            Quantity::DistSq => (0.0, 4.0),
            Quantity::PSharp | Quantity::PApprox | Quantity::R => (0.0, 1.0),
            Quantity::Mean => (-1.0, 1.0),
        }
    }
}

/// A measured value with quadrature and linear error bars.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub err: f64,
    pub err_linear: f64,
}

impl Measured {
    fn exact(value: f64) -> Self {
        Measured { value, err: 0.0, err_linear: 0.0 }
    }

    fn sum(terms: &[Measured]) -> Self {
        Measured {
            value: terms.iter().map(|t| t.value).sum(),
            err: terms.iter().map(|t| t.err * t.err).sum::<f64>().sqrt(),
            err_linear: terms.iter().map(|t| t.err_linear).sum(),
        }
    }
}

fn experiment_axes(name: &str) -> Option<Vec<PauliAxis>> {
    if !(2..=3).contains(&name.len()) {
        return None;
    }
    let axes: Option<Vec<_>> = name.chars().map(PauliAxis::from_letter).collect();
    let axes = axes?;
    let ok = match axes.len() {
        2 => axes[0].index() < axes[1].index(),
        _ => axes == PauliAxis::ALL,
    };
    ok.then_some(axes)
}

type Key = (String, String, PauliAxis, Quantity);

struct Table {
    values: BTreeMap<Key, Measured>,
    /// Per (experiment, state): the radius, if given directly.
    radius: BTreeMap<(String, String), Measured>,
}

impl Table {
    fn build(records: &[Record]) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut radius = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            let bad = |message: String| LabError::Data { row, message };
            let axes =
                experiment_axes(&r.experiment).ok_or_else(|| bad(format!("unknown experiment {:?}", r.experiment)))?;
            let q = Quantity::parse(&r.quantity).ok_or_else(|| bad(format!("unknown quantity {:?}", r.quantity)))?;
            if !r.value.is_finite() {
                return Err(bad(format!("value {} is not finite", r.value)));
            }
            let (lo, hi) = q.range();
            if !(lo..=hi).contains(&r.value) {
                let what = match q {
                    Quantity::PSharp | Quantity::PApprox => "probability",
                    _ => r.quantity.as_str(),
                };
                return Err(bad(format!("{what} {} outside [{lo}, {hi}]", r.value)));
            }
            let u = r.uncertainty.unwrap_or(0.0);
            if !(u >= 0.0 && u.is_finite()) {
                return Err(bad(format!("uncertainty {u} must be finite and non-negative")));
            }
            let m = Measured { value: r.value, err: u, err_linear: u };
            if q == Quantity::R {
                if !r.observable.is_empty() {
                    return Err(bad("r takes no observable".into()));
                }
                if radius.insert((r.experiment.clone(), r.state.clone()), m).is_some() {
                    return Err(bad(format!("duplicate r for state {:?}", r.state)));
                }
                continue;
            }
            let axis = r
                .observable
                .chars()
                .next()
                .filter(|_| r.observable.len() == 1)
                .and_then(PauliAxis::from_letter)
                .ok_or_else(|| bad(format!("unknown observable {:?}", r.observable)))?;
            if q != Quantity::Mean && !axes.contains(&axis) {
                return Err(bad(format!("observable {} is not measured in experiment {}", r.observable, r.experiment)));
            }
            let key = (r.experiment.clone(), r.state.clone(), axis, q);
            if values.insert(key, m).is_some() {
                return Err(bad(format!("duplicate {} {} for state {:?}", r.quantity, r.observable, r.state)));
            }
        }
        Ok(Table { values, radius })
    }

    fn get(&self, exp: &str, state: &str, axis: PauliAxis, q: Quantity) -> Option<Measured> {
        self.values.get(&(exp.to_string(), state.to_string(), axis, q)).copied()
    }

    /// Given directly, or `4|p_sharp − p_approx|`.
    fn distance(&self, exp: &str, state: &str, axis: PauliAxis) -> Option<Measured> {
        if let Some(d) = self.get(exp, state, axis, Quantity::DistSq) {
            return Some(d);
        }
        let s = self.get(exp, state, axis, Quantity::PSharp)?;
        let a = self.get(exp, state, axis, Quantity::PApprox)?;
        Some(Measured {
            value: 4.0 * (s.value - a.value).abs(),
            err: 4.0 * s.err.hypot(a.err),
            err_linear: 4.0 * (s.err_linear + a.err_linear),
        })
    }

    fn radius(&self, exp: &str, state: &str) -> Option<Measured> {
        if let Some(r) = self.radius.get(&(exp.to_string(), state.to_string())) {
            return Some(*r);
        }
        let means: Option<Vec<Measured>> =
            PauliAxis::ALL.iter().map(|&a| self.get(exp, state, a, Quantity::Mean)).collect();
        let means = means?;
        let est = estimate_r(means[0].value, means[1].value, means[2].value);
        let raw = (means.iter().map(|m| m.value * m.value).sum::<f64>()).sqrt();
        let grad = |m: &Measured| if raw > 0.0 { m.value / raw } else { 0.0 };
        Some(Measured {
            value: est.r,
            err: means.iter().map(|m| (grad(m) * m.err).powi(2)).sum::<f64>().sqrt(),
            err_linear: means.iter().map(|m| (grad(m) * m.err_linear).abs()).sum(),
        })
    }

    fn experiments(&self) -> Vec<String> {
        let mut e: Vec<String> =
            self.values.keys().map(|k| k.0.clone()).chain(self.radius.keys().map(|k| k.0.clone())).collect();
        e.sort_by_key(|x| (x.len(), x.clone()));
        e.dedup();
        e
    }

    fn states(&self, exp: &str) -> Vec<String> {
        let mut s: Vec<String> =
            self.values.keys().filter(|k| k.0 == exp && k.1 != CALIBRATION_STATE).map(|k| k.1.clone()).collect();
        s.dedup();
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Term {
    pub observable: String,
    #[serde(flatten)]
    pub measured: Measured,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExternalRelation {
    pub experiment: String,
    pub state: String,
    pub terms: Vec<Term>,
    pub lhs: Measured,
    pub r: Option<Measured>,
    pub rhs: Measured,
    pub margin: f64,
    /// Quadrature error of the margin.
    pub margin_err: f64,
    pub flagged: bool,
}

/// A state-dependent distance against the ideal value for an axis
/// eigenstate at the default efficiency of its experiment.
#[derive(Clone, Debug, Serialize)]
pub struct StateCheck {
    pub experiment: String,
    pub state: String,
    pub observable: String,
    pub measured: Measured,
    pub ideal: f64,
    /// `(measured − ideal) / err`, when an error is given.
    pub sigmas: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExternalReport {
    pub relations: Vec<ExternalRelation>,
    pub state_checks: Vec<StateCheck>,
    /// Experiments or states that lacked the inputs for a relation.
    pub skipped: Vec<String>,
}

impl ExternalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn flagged(&self) -> impl Iterator<Item = &ExternalRelation> {
        self.relations.iter().filter(|r| r.flagged)
    }
}

fn relation(experiment: &str, state: &str, terms: Vec<Term>, r: Option<Measured>, rhs: Measured) -> ExternalRelation {
    let lhs = Measured::sum(&terms.iter().map(|t| t.measured).collect::<Vec<_>>());
    let margin = lhs.value - rhs.value;
    ExternalRelation {
        experiment: experiment.to_string(),
        state: state.to_string(),
        terms,
        lhs,
        r,
        rhs,
        margin,
        margin_err: lhs.err.hypot(rhs.err),
        flagged: margin < 0.0,
    }
}

fn term(axis: PauliAxis, measured: Measured) -> Term {
    Term { observable: axis.letter().to_string(), measured }
}

/// Ideal `Δ²` for an axis-eigenstate preset: `2(1 − η)|r_k|`.
fn ideal_distance(state: &str, axis: PauliAxis, eta: f64) -> Option<f64> {
    if state == "psi" {
        return None;
    }
    let s = NamedState::preset(state)?;
    Some(2.0 * (1.0 - eta) * s.bloch[axis.index()].abs())
}

pub fn verify_records(records: &[Record]) -> Result<ExternalReport> {
    let table = Table::build(records)?;
    let mut relations = Vec::new();
    let mut state_checks = Vec::new();
    let mut skipped = Vec::new();

    for exp in table.experiments() {
        let axes = experiment_axes(&exp).expect("validated");
        let calib: Option<Vec<Measured>> = axes.iter().map(|&a| table.distance(&exp, CALIBRATION_STATE, a)).collect();
        match (&calib, axes.len()) {
            (Some(c), 2) => {
                let terms = axes.iter().zip(c).map(|(&a, &m)| term(a, m)).collect();
                let bound = blw_bound(&axes[0].unit(), &axes[1].unit());
                relations.push(relation(&exp, CALIBRATION_STATE, terms, None, Measured::exact(bound)));
            }
            (None, _) => skipped.push(format!("{exp}: calibration distances incomplete")),
            _ => {}
        }

        let eta = if axes.len() == 2 { ScenarioKind::PairXy } else { ScenarioKind::Triple }.default_eta();
        for state in table.states(&exp) {
            for &axis in &axes {
                if let Some(m) = table.distance(&exp, &state, axis) {
                    if let Some(ideal) = ideal_distance(&state, axis, eta) {
                        state_checks.push(StateCheck {
                            experiment: exp.clone(),
                            state: state.clone(),
                            observable: axis.letter().to_string(),
                            measured: m,
                            ideal,
                            sigmas: (m.err > 0.0).then(|| (m.value - ideal) / m.err),
                        });
                    }
                }
            }
            if axes.len() != 3 {
                continue;
            }
            let dists: Option<Vec<Measured>> = axes.iter().map(|&a| table.distance(&exp, &state, a)).collect();
            let (Some(dists), Some(calib), Some(r)) = (dists, &calib, table.radius(&exp, &state)) else {
                skipped.push(format!("{exp}/{state}: needs three distances, calibration and r"));
                continue;
            };
            let min = calib.iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("three calibration terms");
            let rhs = Measured {
                value: triple_bound(r.value, calib[0].value, calib[1].value, calib[2].value),
                err: (min.value * r.err).hypot(r.value * min.err),
                err_linear: min.value * r.err_linear + r.value * min.err_linear,
            };
            let terms = axes.iter().zip(&dists).map(|(&a, &m)| term(a, m)).collect();
            relations.push(relation(&exp, &state, terms, Some(r), rhs));
        }
    }
    Ok(ExternalReport { relations, state_checks, skipped })
}

pub fn verify_external(path: &Path) -> Result<ExternalReport> {
    verify_records(&read_records(path)?)
}
