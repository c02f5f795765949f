//! JSON model files.
//!
//! ```json
//! {
//!   "D": 1.0,
//!   "S0": 1.0,
//!   "constants": { "k": 0.3 },
//!   "species": [
//!     { "label": "x1", "monod": { "a": 1, "b": 0.1, "Di": 0.6, "yield": "1 + 4*S" } },
//!     { "label": "x2", "growth": "S - k", "uptake": { "polynomial": [0, 1] } }
//!   ],
//!   "initial": [0.5, 0.1, 0.1]
//! }
//! ```
//!
//! A function is an expression string, a number, or one of
//! `{"monod": {"a", "b"}}`, `{"polynomial": [c0, c1, …]}`,
//! `{"quotient": [num, den]}` and `{"difference": [lhs, rhs]}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{monod_species, ChemostatModel, ScalarFn, Species};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FnSpec {
    Number(f64),
    Text(String),
    Structured(StructuredFn),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StructuredFn {
    Monod { a: f64, b: f64 },
    Polynomial(Vec<f64>),
    Quotient(Box<FnSpec>, Box<FnSpec>),
    Difference(Box<FnSpec>, Box<FnSpec>),
}

impl FnSpec {
    pub fn build(&self, consts: &BTreeMap<String, f64>) -> Result<ScalarFn> {
        Ok(match self {
            FnSpec::Number(c) => ScalarFn::constant(*c),
            FnSpec::Text(t) => ScalarFn::parse_with(t, consts)?,
            FnSpec::Structured(StructuredFn::Monod { a, b }) => ScalarFn::monod(*a, *b),
            FnSpec::Structured(StructuredFn::Polynomial(c)) => {
                if c.is_empty() {
                    return Err(Error::ModelFile("empty polynomial".into()));
                }
                ScalarFn::Polynomial(c.clone())
            }
            FnSpec::Structured(StructuredFn::Quotient(n, d)) => {
                ScalarFn::quotient(n.build(consts)?, d.build(consts)?)
            }
            FnSpec::Structured(StructuredFn::Difference(l, r)) => {
                ScalarFn::difference(l.build(consts)?, r.build(consts)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonodSpec {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "Di")]
    pub removal: f64,
    #[serde(rename = "yield", default = "unit_yield")]
    pub yield_fn: FnSpec,
}

fn unit_yield() -> FnSpec {
    FnSpec::Number(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monod: Option<MonodSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uptake: Option<FnSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(rename = "D", default = "one")]
    pub dilution: f64,
    #[serde(rename = "S0", default = "one")]
    pub inflow: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    pub species: Vec<SpeciesSpec>,
    /// Initial state `(S, x_1, …, x_N)` for simulations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

fn context(what: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::ModelFile(m) => Error::ModelFile(format!("{what}: {m}")),
        other => Error::ModelFile(format!("{what}: {other}")),
    }
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    /// The model in the file's units (not normalized).
    pub fn build(&self) -> Result<ChemostatModel> {
        for (k, v) in &self.constants {
            if !v.is_finite() {
                return Err(Error::ModelFile(format!("constant {k} = {v} is not finite")));
            }
        }
        let mut species = Vec::with_capacity(self.species.len());
        for (k, sp) in self.species.iter().enumerate() {
            let name = sp.label.clone().unwrap_or_else(|| format!("x{}", k + 1));
            let built = self.build_species(sp).map_err(context(format!("species {name}")))?;
            species.push(built.with_label(name));
        }
        ChemostatModel::new(self.dilution, self.inflow, species)
    }

    fn build_species(&self, sp: &SpeciesSpec) -> Result<Species> {
        let c = &self.constants;
        match (&sp.monod, &sp.growth, &sp.uptake) {
            (Some(m), None, None) => {
                let y = m.yield_fn.build(c).map_err(context("yield".into()))?;
                monod_species(m.a, m.b, m.removal, y)
            }
            (None, Some(g), Some(u)) => Ok(Species::new(
                "",
                g.build(c).map_err(context("growth".into()))?,
                u.build(c).map_err(context("uptake".into()))?,
            )),
            _ => Err(Error::ModelFile(
                "give either \"monod\" or both \"growth\" and \"uptake\"".into(),
            )),
        }
    }

    /// Applies `key=value` patches (see [`apply_override`]).
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut v = serde_json::to_value(self).expect("model files always serialize");
        for o in overrides {
            let (key, value) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::ModelFile(format!("override {:?} is not key=value", o.as_ref())))?;
            apply_override(&mut v, key.trim(), value.trim())?;
        }
        Self::from_value(v)
    }
}

/// Sets `key` in a model document. Keys are `D`, `S0`, `initial`,
/// `constants.NAME`, or `species.K.FIELD[.SUBFIELD]` where `K` is a 1-based
/// index or a label. Every path component except a new constant name must
/// already exist. `value` is read as JSON when it parses, else as a string.
pub fn apply_override(doc: &mut Value, key: &str, value: &str) -> Result<()> {
    let unknown = || Error::ModelFile(format!("unknown override key {key:?}"));
    let parts: Vec<&str> = key.split('.').collect();
    let new_value = serde_json::from_str::<Value>(value).unwrap_or_else(|_| Value::String(value.into()));
    let mut node = doc;
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        let in_constants = depth == 1 && parts[0] == "constants";
        node = match node {
            Value::Object(map) => {
                if !map.contains_key(*part) {
                    if !(last && (in_constants || is_optional_field(&parts, depth))) {
                        return Err(unknown());
                    }
                    map.insert((*part).to_string(), Value::Null);
                }
                map.get_mut(*part).expect("inserted above")
            }
            Value::Array(items) => {
                let idx = match part.parse::<usize>() {
                    Ok(k) if k >= 1 && k <= items.len() => k - 1,
                    Ok(_) => return Err(unknown()),
                    Err(_) => items
                        .iter()
                        .position(|it| it.get("label").and_then(Value::as_str) == Some(part))
                        .ok_or_else(unknown)?,
                };
                &mut items[idx]
            }
            _ => return Err(unknown()),
        };
    }
    *node = new_value;
    Ok(())
}

/// Top-level and species fields that may be absent from the document
/// because they are optional or defaulted.
fn is_optional_field(parts: &[&str], depth: usize) -> bool {
    match (depth, parts[0]) {
        (0, _) => matches!(parts[0], "D" | "S0" | "initial" | "constants"),
        (2, "species") => matches!(parts[2], "label"),
        (3, "species") => parts[2] == "monod" && parts[3] == "yield",
        _ => false,
    }
}
