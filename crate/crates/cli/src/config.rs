//! JSON configuration documents.
//!
//! Explicit form:
//! `{"d": 2, "types": [{"theta": 1, "offspring": [{"j": [0, 2], "p": 0.5}, ...]}, ...], "marks": [[[0, 0]], [[0, 0]]]}`
//!
//! Builtin form:
//! `{"builtin": {"name": "paper-example", "p": 0.5, "alpha": 0.5}, "marks": "pure-death"}`
//!
//! `marks` may be a list of per-type vector lists, `"pure-death"`, `"twins"`,
//! or omitted (no marks).

use branching_marks::oracle::{example_spec, ExampleParams};
use branching_marks::{MarkedSets, OffspringVector, ProcessSpec, TypeLaw};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::report;
use crate::CliError;

const BUILTIN_EXAMPLE: &str = "paper-example";

#[derive(Debug, Clone)]
pub struct Config {
    pub spec: ProcessSpec,
    pub marks: MarkedSets,
}

impl Config {
    /// Explicit form with offspring sorted by vector, floats at full precision.
    pub fn canonical(&self) -> Value {
        let types = self
            .spec
            .laws()
            .iter()
            .map(|law| {
                let mut offspring: Vec<_> = law.offspring.iter().collect();
                offspring.sort_by(|a, b| a.0.cmp(&b.0));
                let offspring = offspring
                    .into_iter()
                    .map(|(j, p)| {
                        let mut m = Map::new();
                        m.insert("j".into(), Value::from(j.counts().to_vec()));
                        m.insert("p".into(), Value::from(*p));
                        Value::Object(m)
                    })
                    .collect::<Vec<_>>();
                let mut m = Map::new();
                m.insert("theta".into(), Value::from(law.theta));
                m.insert("offspring".into(), Value::Array(offspring));
                Value::Object(m)
            })
            .collect::<Vec<_>>();
        let marks = self
            .marks
            .sets()
            .iter()
            .map(|set| {
                Value::Array(
                    set.iter()
                        .map(|j| Value::from(j.counts().to_vec()))
                        .collect(),
                )
            })
            .collect::<Vec<_>>();
        let mut m = Map::new();
        m.insert("d".into(), Value::from(self.spec.dim()));
        m.insert("types".into(), Value::Array(types));
        m.insert("marks".into(), Value::Array(marks));
        Value::Object(m)
    }

    pub fn canonical_text(&self) -> String {
        report::to_string(&self.canonical())
    }

    /// Hex sha256 of the canonical text.
    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn parse_str(text: &str) -> Result<Config, CliError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("config: {e}")))?;
    parse_value(&doc)
}

pub fn parse_value(doc: &Value) -> Result<Config, CliError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| field("$", "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "d" | "types" | "marks" | "builtin") {
            return Err(field(key, "unknown field"));
        }
    }
    let spec = match obj.get("builtin") {
        Some(b) => {
            if obj.contains_key("d") || obj.contains_key("types") {
                return Err(field(
                    "builtin",
                    "builtin and explicit d/types are mutually exclusive",
                ));
            }
            parse_builtin(b)?
        }
        None => parse_explicit(obj)?,
    };
    let marks = parse_marks(&spec, obj.get("marks"))?;
    Ok(Config { spec, marks })
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{path}: {msg}"))
}

fn invalid_field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{path}: {msg}"))
}

fn spec_error(e: branching_marks::Error) -> CliError {
    use branching_marks::Error as E;
    let path = match &e {
        E::EmptySpec => "d".to_string(),
        E::LawCount { .. } => "types".to_string(),
        E::DimensionMismatch { ty, .. }
        | E::InvalidProbability { ty, .. }
        | E::ProbabilitySum { ty, .. }
        | E::DuplicateOffspring { ty, .. }
        | E::NoChangeSplit { ty, .. } => format!("types[{ty}].offspring"),
        E::InvalidRate { ty, .. } => format!("types[{ty}].theta"),
        _ => "types".to_string(),
    };
    invalid_field(&path, e)
}

fn number(v: &Value, path: &str) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| field(path, "expected a number"))
}

fn parse_builtin(b: &Value) -> Result<ProcessSpec, CliError> {
    let obj = b
        .as_object()
        .ok_or_else(|| field("builtin", "expected an object"))?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| field("builtin.name", "expected a string"))?;
    if name != BUILTIN_EXAMPLE {
        return Err(field(
            "builtin.name",
            format!("unknown builtin {name:?}; known: {BUILTIN_EXAMPLE:?}"),
        ));
    }
    let get = |key: &str| -> Result<f64, CliError> {
        let path = format!("builtin.{key}");
        number(obj.get(key).ok_or_else(|| field(&path, "missing"))?, &path)
    };
    let (p, alpha) = (get("p")?, get("alpha")?);
    let params = ExampleParams::new(p, alpha).map_err(|e| invalid_field("builtin", e))?;
    Ok(example_spec(params))
}

fn parse_explicit(obj: &Map<String, Value>) -> Result<ProcessSpec, CliError> {
    let d = obj
        .get("d")
        .ok_or_else(|| field("d", "missing"))?
        .as_u64()
        .filter(|&d| d > 0)
        .ok_or_else(|| field("d", "expected a positive integer"))? as usize;
    let types = obj
        .get("types")
        .ok_or_else(|| field("types", "missing"))?
        .as_array()
        .ok_or_else(|| field("types", "expected an array"))?;
    if types.len() != d {
        return Err(field(
            "types",
            format!("expected {d} entries, found {}", types.len()),
        ));
    }
    let mut laws = Vec::with_capacity(d);
    for (k, t) in types.iter().enumerate() {
        let base = format!("types[{k}]");
        let t = t
            .as_object()
            .ok_or_else(|| field(&base, "expected an object"))?;
        let theta_path = format!("{base}.theta");
        let theta = number(
            t.get("theta")
                .ok_or_else(|| field(&theta_path, "missing"))?,
            &theta_path,
        )?;
        let off_path = format!("{base}.offspring");
        let entries = t
            .get("offspring")
            .ok_or_else(|| field(&off_path, "missing"))?
            .as_array()
            .ok_or_else(|| field(&off_path, "expected an array"))?;
        let mut offspring = Vec::with_capacity(entries.len());
        for (e, entry) in entries.iter().enumerate() {
            let path = format!("{off_path}[{e}]");
            let entry = entry
                .as_object()
                .ok_or_else(|| field(&path, "expected an object"))?;
            let j_path = format!("{path}.j");
            let j = vector(
                entry.get("j").ok_or_else(|| field(&j_path, "missing"))?,
                &j_path,
                d,
            )?;
            let p_path = format!("{path}.p");
            let p = number(
                entry.get("p").ok_or_else(|| field(&p_path, "missing"))?,
                &p_path,
            )?;
            offspring.push((j, p));
        }
        laws.push(TypeLaw::new(theta, offspring));
    }
    ProcessSpec::new(d, laws).map_err(spec_error)
}

fn vector(v: &Value, path: &str, d: usize) -> Result<OffspringVector, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| field(path, "expected an integer array"))?;
    if arr.len() != d {
        return Err(field(
            path,
            format!("expected {d} entries, found {}", arr.len()),
        ));
    }
    let counts = arr
        .iter()
        .map(|c| c.as_u64().and_then(|c| u32::try_from(c).ok()))
        .collect::<Option<Vec<u32>>>()
        .ok_or_else(|| field(path, "expected nonnegative integers"))?;
    Ok(OffspringVector::new(counts))
}

fn parse_marks(spec: &ProcessSpec, marks: Option<&Value>) -> Result<MarkedSets, CliError> {
    let d = spec.dim();
    let sets = match marks {
        None | Some(Value::Null) => return Ok(MarkedSets::empty(d)),
        Some(Value::String(s)) => {
            return match s.as_str() {
                "pure-death" => Ok(MarkedSets::pure_death(spec)),
                "twins" => Ok(MarkedSets::twins(spec)),
                other => Err(field(
                    "marks",
                    format!("unknown shorthand {other:?}; use \"pure-death\" or \"twins\""),
                )),
            }
        }
        Some(Value::Array(sets)) => sets,
        Some(_) => return Err(field("marks", "expected an array or a shorthand string")),
    };
    if sets.len() != d {
        return Err(field(
            "marks",
            format!("expected {d} entries, found {}", sets.len()),
        ));
    }
    let mut out = Vec::with_capacity(d);
    for (k, set) in sets.iter().enumerate() {
        let path = format!("marks[{k}]");
        let set = set
            .as_array()
            .ok_or_else(|| field(&path, "expected an array of vectors"))?;
        let mut vectors: Vec<OffspringVector> = Vec::with_capacity(set.len());
        for (r, j) in set.iter().enumerate() {
            let path = format!("marks[{k}][{r}]");
            let j = vector(j, &path, d)?;
            if spec.laws()[k].probability(&j) <= 0.0 {
                return Err(invalid_field(
                    &path,
                    format!("{j} is not in the offspring support of type {}", k + 1),
                ));
            }
            if vectors.contains(&j) {
                return Err(invalid_field(&path, format!("{j} listed more than once")));
            }
            vectors.push(j);
        }
        out.push(vectors);
    }
    MarkedSets::new(spec, out).map_err(|e| invalid_field("marks", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip_is_identity() {
        let text = r#"{"d": 2, "types": [
            {"theta": 0.3, "offspring": [{"j": [1, 1], "p": 0.1}, {"j": [0, 0], "p": 0.9}]},
            {"theta": 1.7, "offspring": [{"j": [0, 0], "p": 0.0}, {"j": [2, 0], "p": 1.0}]}],
            "marks": [[[0, 0], [1, 1]], "twins"]}"#;
        assert!(parse_str(text).is_err());
        let text = text.replace(r#""twins""#, "[]");
        let first = parse_str(&text).unwrap();
        let second = parse_str(&first.canonical_text()).unwrap();
        let third = parse_str(&second.canonical_text()).unwrap();
        assert_eq!(second.spec, third.spec);
        assert_eq!(second.marks, third.marks);
        assert_eq!(first.canonical_text(), second.canonical_text());
        assert_eq!(first.marks, second.marks);
        // zero-probability entries are dropped before canonicalization
        assert_eq!(second.spec.laws()[1].offspring.len(), 1);
    }

    #[test]
    fn shorthand_marks() {
        let doc =
            r#"{"builtin": {"name": "paper-example", "p": 0.2, "alpha": 0.2}, "marks": "twins"}"#;
        let cfg = parse_str(doc).unwrap();
        assert_eq!(cfg.marks.set(0), &[]);
        assert_eq!(cfg.marks.set(1), &[]);
        let doc = doc.replace("twins", "pure-death");
        assert_eq!(parse_str(&doc).unwrap().marks.total(), 2);
        assert!(parse_str(&doc.replace("pure-death", "triplets")).is_err());
    }
}
