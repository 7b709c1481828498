//! JSON documents for walk programs, POVMs and compilation results.
//!
//! ```json
//! {"steps": [{"0": {"theta": 0.5, "beta": 0.0}, "-1": [[0,0],[1,0],[1,0],[0,0]]}]}
//! ```
//!
//! Each step maps lattice positions to coins; an optional `"default"` key
//! sets the coin used at unlisted positions (identity otherwise). A coin is
//! either its two angles or the row-major matrix as four `[re, im]` pairs.
//! Floats are written with shortest round-trip precision and parsed
//! exactly, so documents round-trip bit for bit.

use std::collections::BTreeMap;
use std::fmt;

use povmwalk::linalg::{Mat2, C64};
use povmwalk::qubit::PovmElement;
use povmwalk::{CoinOp, CompilationResult, Effect, OutcomeLabel, Position, Povm, Sign, StepRule, WalkProgram};
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};

const DEFAULT_KEY: &str = "default";

type MatrixDoc = [[f64; 2]; 4];

fn matrix_doc(m: &Mat2) -> MatrixDoc {
    let e = |i, j| {
        let z: C64 = m[(i, j)];
        [z.re, z.im]
    };
    [e(0, 0), e(0, 1), e(1, 0), e(1, 1)]
}

fn matrix_from_doc(d: &MatrixDoc) -> Mat2 {
    let c = |k: usize| C64::new(d[k][0], d[k][1]);
    Mat2::new(c(0), c(1), c(2), c(3))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CoinDoc {
    Angles { theta: f64, beta: f64 },
    Matrix(MatrixDoc),
}

impl From<&CoinOp> for CoinDoc {
    fn from(c: &CoinOp) -> Self {
        match *c {
            CoinOp::Angles { theta, beta } => CoinDoc::Angles { theta, beta },
            CoinOp::Matrix(m) => CoinDoc::Matrix(matrix_doc(&m)),
        }
    }
}

impl CoinDoc {
    fn to_coin(&self) -> Result<CoinOp> {
        match self {
            CoinDoc::Angles { theta, beta } => Ok(CoinOp::angles(*theta, *beta)),
            CoinDoc::Matrix(d) => Ok(CoinOp::unitary(matrix_from_doc(d))?),
        }
    }
}

/// One step; keys kept in document order on both read and write.
#[derive(Clone, Debug)]
struct StepDoc(Vec<(String, CoinDoc)>);

impl Serialize for StepDoc {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for StepDoc {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct StepVisitor;
        impl<'de> Visitor<'de> for StepVisitor {
            type Value = StepDoc;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from positions to coins")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<StepDoc, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, CoinDoc>()? {
                    entries.push((k, v));
                }
                Ok(StepDoc(entries))
            }
        }
        deserializer.deserialize_map(StepVisitor)
    }
}

impl From<&StepRule> for StepDoc {
    fn from(rule: &StepRule) -> Self {
        let mut entries: Vec<_> = rule.coins().iter().map(|(x, c)| (x.to_string(), CoinDoc::from(c))).collect();
        if *rule.default_coin() != CoinOp::IDENTITY {
            entries.push((DEFAULT_KEY.to_string(), CoinDoc::from(rule.default_coin())));
        }
        StepDoc(entries)
    }
}

impl StepDoc {
    fn to_rule(&self) -> Result<StepRule> {
        let mut default = None;
        let mut coins = BTreeMap::new();
        for (key, doc) in &self.0 {
            let coin = doc.to_coin()?;
            if key == DEFAULT_KEY {
                if default.replace(coin).is_some() {
                    return Err(LabError::Format("duplicate \"default\" coin".into()));
                }
                continue;
            }
            let x: Position = key
                .parse()
                .map_err(|_| LabError::Format(format!("step key {key:?} is neither a position nor \"default\"")))?;
            if coins.insert(x, coin).is_some() {
                return Err(LabError::Format(format!("position {x} listed twice in one step")));
            }
        }
        let mut rule = StepRule::with_default(default.unwrap_or(CoinOp::IDENTITY))?;
        for (x, c) in coins {
            rule = rule.with(x, c)?;
        }
        Ok(rule)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ProgramDoc {
    steps: Vec<StepDoc>,
}

impl ProgramDoc {
    fn new(program: &WalkProgram) -> Self {
        ProgramDoc { steps: program.steps().iter().map(StepDoc::from).collect() }
    }

    fn to_program(&self) -> Result<WalkProgram> {
        let steps = self.steps.iter().map(StepDoc::to_rule).collect::<Result<Vec<_>>>()?;
        Ok(WalkProgram::new(steps)?)
    }
}

pub fn program_to_json(program: &WalkProgram) -> String {
    serde_json::to_string_pretty(&ProgramDoc::new(program)).expect("program documents always serialize")
}

pub fn program_from_json(text: &str) -> Result<WalkProgram> {
    serde_json::from_str::<ProgramDoc>(text)?.to_program()
}

#[derive(Debug, Serialize, Deserialize)]
struct CompilationDoc {
    steps: Vec<StepDoc>,
    outcome_map: BTreeMap<Position, usize>,
    residual_error: f64,
}

pub fn compilation_to_json(result: &CompilationResult) -> String {
    let doc = CompilationDoc {
        steps: ProgramDoc::new(&result.program).steps,
        outcome_map: result.outcome_map.clone(),
        residual_error: result.residual_error,
    };
    serde_json::to_string_pretty(&doc).expect("compilation documents always serialize")
}

/// The outcome count is recovered as one past the largest mapped index.
pub fn compilation_from_json(text: &str) -> Result<CompilationResult> {
    let doc: CompilationDoc = serde_json::from_str(text)?;
    let program = ProgramDoc { steps: doc.steps }.to_program()?;
    let outcome_count = doc.outcome_map.values().max().map_or(0, |m| m + 1);
    Ok(CompilationResult { program, outcome_map: doc.outcome_map, residual_error: doc.residual_error, outcome_count })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelDoc {
    Signs(Vec<i8>),
    Index(i64),
}

impl From<&OutcomeLabel> for LabelDoc {
    fn from(label: &OutcomeLabel) -> Self {
        match label {
            OutcomeLabel::Signs(s) => LabelDoc::Signs(s.iter().map(|s| s.value() as i8).collect()),
            OutcomeLabel::Index(i) => LabelDoc::Index(*i),
        }
    }
}

impl LabelDoc {
    fn to_label(&self) -> Result<OutcomeLabel> {
        match self {
            LabelDoc::Index(i) => Ok(OutcomeLabel::Index(*i)),
            LabelDoc::Signs(s) => s
                .iter()
                .map(|&v| match v {
                    1 => Ok(Sign::Plus),
                    -1 => Ok(Sign::Minus),
                    _ => Err(LabError::Format(format!("sign label entries must be ±1, found {v}"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(OutcomeLabel::Signs),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ElementDoc {
    label: LabelDoc,
    effect: MatrixDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct PovmDoc {
    elements: Vec<ElementDoc>,
}

/// `{"elements": [{"label": [1, -1] | 3, "effect": [[re, im] × 4]}]}`.
pub fn povm_to_json(povm: &Povm) -> String {
    let doc = PovmDoc {
        elements: povm
            .elements()
            .iter()
            .map(|e| ElementDoc { label: LabelDoc::from(&e.label), effect: matrix_doc(e.effect.matrix()) })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("POVM documents always serialize")
}

/// Parses and validates a POVM document.
pub fn povm_from_json(text: &str) -> Result<Povm> {
    let doc: PovmDoc = serde_json::from_str(text)?;
    let elements = doc
        .elements
        .iter()
        .map(|e| {
            Ok(PovmElement { label: e.label.to_label()?, effect: Effect::from_matrix(matrix_from_doc(&e.effect))? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Povm::new(elements)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use povmwalk::qubit::{joint_povm_pair, sharp_povm};
    use povmwalk::PauliAxis;

    #[test]
    fn program_round_trip_is_exact() {
        let rule = StepRule::with_default(CoinOp::angles(0.1, -0.2))
            .unwrap()
            .with(0, CoinOp::angles(0.625, 1e-300))
            .unwrap()
            .with(-1, CoinOp::NOT)
            .unwrap();
        let program = WalkProgram::new(vec![rule, StepRule::new()]).unwrap();
        let text = program_to_json(&program);
        assert_eq!(program_from_json(&text).unwrap(), program);
    }

    #[test]
    fn positions_keep_numeric_order() {
        let rule =
            StepRule::new().with(10, CoinOp::NOT).unwrap().with(2, CoinOp::NOT).unwrap().with(-3, CoinOp::NOT).unwrap();
        let program = WalkProgram::new(vec![rule]).unwrap();
        let text = program_to_json(&program);
        let (a, b, c) = (text.find("\"-3\"").unwrap(), text.find("\"2\"").unwrap(), text.find("\"10\"").unwrap());
        assert!(a < b && b < c);
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(program_from_json(r#"{"steps": []}"#).is_err());
        assert!(program_from_json(r#"{"steps": [{"left": {"theta": 0, "beta": 0}}]}"#).is_err());
        let not_unitary = r#"{"steps": [{"0": [[2,0],[0,0],[0,0],[1,0]]}]}"#;
        assert!(matches!(program_from_json(not_unitary), Err(LabError::Core(_))));
    }

    #[test]
    fn povm_round_trip() {
        let povm = joint_povm_pair(PauliAxis::X, PauliAxis::Y, 0.5).unwrap();
        assert_eq!(povm_from_json(&povm_to_json(&povm)).unwrap(), povm);
        let sharp = sharp_povm(PauliAxis::Z);
        assert_eq!(povm_from_json(&povm_to_json(&sharp)).unwrap(), sharp);
    }

    #[test]
    fn povm_document_is_validated() {
        let incomplete = r#"{"elements": [{"label": 0, "effect": [[1,0],[0,0],[0,0],[0,0]]}]}"#;
        assert!(matches!(povm_from_json(incomplete), Err(LabError::Core(_))));
        let bad_sign = r#"{"elements": [{"label": [2], "effect": [[1,0],[0,0],[0,0],[1,0]]}]}"#;
        assert!(matches!(povm_from_json(bad_sign), Err(LabError::Format(_))));
    }

    #[test]
    fn compilation_round_trip() {
        let target = joint_povm_pair(PauliAxis::Y, PauliAxis::Z, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let result = povmwalk::compile(&target).unwrap();
        let text = compilation_to_json(&result);
        assert!(text.contains("\"outcome_map\"") && text.contains("\"residual_error\""));
        assert_eq!(compilation_from_json(&text).unwrap(), result);
    }
}
