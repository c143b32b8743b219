//! Mixed search spaces and their encoding into the unit hypercube.
//!
//! Continuous and integer parameters take one coordinate each (log-scaled
//! parameters are mapped through `ln`); a categorical parameter takes a one-hot
//! block with one coordinate per level.

use std::collections::HashSet;
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ParamKind {
    Continuous { lo: f64, hi: f64, log_scale: bool },
    Integer { lo: i64, hi: i64 },
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn continuous(name: &str, lo: f64, hi: f64, log_scale: bool) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Continuous { lo, hi, log_scale },
        }
    }

    pub fn integer(name: &str, lo: i64, hi: i64) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Integer { lo, hi },
        }
    }

    pub fn categorical<S: ToString>(name: &str, levels: &[S]) -> Self {
        ParamSpec {
            name: name.into(),
            kind: ParamKind::Categorical {
                levels: levels.iter().map(ToString::to_string).collect(),
            },
        }
    }

    /// Coordinates this parameter occupies in the encoded vector.
    pub fn width(&self) -> usize {
        match &self.kind {
            ParamKind::Categorical { levels } => levels.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| {
            Err(Error::InvalidParam {
                name: self.name.clone(),
                message,
            })
        };
        match &self.kind {
            ParamKind::Continuous { lo, hi, log_scale } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return invalid(format!("bounds must satisfy lo < hi, got [{lo}, {hi}]"));
                }
                if *log_scale && *lo <= 0.0 {
                    return invalid(format!("log scale needs lo > 0, got {lo}"));
                }
            }
            ParamKind::Integer { lo, hi } => {
                if lo >= hi {
                    return invalid(format!("bounds must satisfy lo < hi, got [{lo}, {hi}]"));
                }
            }
            ParamKind::Categorical { levels } => {
                if levels.len() < 2 {
                    return invalid("a categorical parameter needs at least 2 levels".into());
                }
                if levels.iter().collect::<HashSet<_>>().len() != levels.len() {
                    return invalid("duplicate categorical level".into());
                }
            }
        }
        Ok(())
    }

    /// Unit-interval position of a continuous or integer value.
    fn to_unit(&self, value: f64) -> f64 {
        match &self.kind {
            ParamKind::Continuous { lo, hi, log_scale: true } => (value.ln() - lo.ln()) / (hi.ln() - lo.ln()),
            ParamKind::Continuous { lo, hi, .. } => (value - lo) / (hi - lo),
            ParamKind::Integer { lo, hi } => (value - *lo as f64) / (*hi - *lo) as f64,
            ParamKind::Categorical { .. } => unreachable!("categoricals are one-hot encoded"),
        }
    }

    /// Value at a unit-interval position; `u` is clamped to `[0, 1]`.
    fn from_unit(&self, u: f64) -> ParamValue {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            ParamKind::Continuous { lo, hi, log_scale: true } => {
                ParamValue::Real((lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(*lo, *hi))
            }
            ParamKind::Continuous { lo, hi, .. } => ParamValue::Real((lo + u * (hi - lo)).clamp(*lo, *hi)),
            ParamKind::Integer { lo, hi } => {
                let v = *lo as f64 + u * (*hi - *lo) as f64;
                ParamValue::Int(((v + 0.5).floor() as i64).clamp(*lo, *hi))
            }
            ParamKind::Categorical { .. } => unreachable!("categoricals are one-hot encoded"),
        }
    }

    /// Uniform draw from `u` in `[0, 1)`: log-uniform on log-scaled
    /// parameters, equal mass per integer and per level.
    fn sample(&self, u: f64) -> ParamValue {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            ParamKind::Continuous { .. } => self.from_unit(u),
            ParamKind::Integer { lo, hi } => {
                let span = (hi - lo + 1) as f64;
                ParamValue::Int((lo + (u * span).floor() as i64).min(*hi))
            }
            ParamKind::Categorical { levels } => {
                let i = ((u * levels.len() as f64).floor() as usize).min(levels.len() - 1);
                ParamValue::Level(levels[i].clone())
            }
        }
    }
}

/// A single parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Level(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            ParamValue::Level(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Level(s) => f.write_str(s),
        }
    }
}

/// Named parameter values in search-space order. Serializes as a JSON object
/// whose keys keep that order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment(pub Vec<(String, ParamValue)>);

impl Assignment {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn set(&mut self, name: &str, value: ParamValue) {
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name.to_string(), value)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v))
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, value) in &self.0 {
            map.serialize_entry(name, value)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct OrderedMap;
        impl<'de> Visitor<'de> for OrderedMap {
            type Value = Assignment;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object of parameter values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Assignment, A::Error> {
                let mut entries = Vec::new();
                while let Some(entry) = access.next_entry::<String, ParamValue>()? {
                    entries.push(entry);
                }
                Ok(Assignment(entries))
            }
        }
        deserializer.deserialize_map(OrderedMap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParamSpec>", into = "Vec<ParamSpec>")]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
}

impl TryFrom<Vec<ParamSpec>> for SearchSpace {
    type Error = Error;

    fn try_from(params: Vec<ParamSpec>) -> Result<Self> {
        SearchSpace::new(params)
    }
}

impl From<SearchSpace> for Vec<ParamSpec> {
    fn from(space: SearchSpace) -> Self {
        space.params
    }
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Config("search space has no parameters".into()));
        }
        let mut seen = HashSet::new();
        for p in &params {
            p.validate()?;
            if !seen.insert(p.name.as_str()) {
                return Err(Error::InvalidParam {
                    name: p.name.clone(),
                    message: "duplicate parameter name".into(),
                });
            }
        }
        Ok(SearchSpace { params })
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Encoded dimension.
    pub fn dim(&self) -> usize {
        self.params.iter().map(ParamSpec::width).sum()
    }

    /// Offset of each parameter's first coordinate.
    pub fn offsets(&self) -> Vec<usize> {
        self.params
            .iter()
            .scan(0, |at, p| {
                let here = *at;
                *at += p.width();
                Some(here)
            })
            .collect()
    }

    /// Replaces the parameter with the same name, or appends a new one.
    pub fn with_param(mut self, spec: ParamSpec) -> Result<Self> {
        spec.validate()?;
        match self.params.iter_mut().find(|p| p.name == spec.name) {
            Some(slot) => *slot = spec,
            None => self.params.push(spec),
        }
        Ok(self)
    }

    /// Assignment drawn from one uniform number per parameter.
    pub fn sample_unit(&self, u: &[f64]) -> Assignment {
        assert_eq!(u.len(), self.params.len(), "one uniform per parameter");
        Assignment(
            self.params
                .iter()
                .zip(u)
                .map(|(p, &ui)| (p.name.clone(), p.sample(ui)))
                .collect(),
        )
    }

    /// Puts the parameters of `a` into space order, checking that every
    /// parameter is present and nothing else is.
    pub fn canonical(&self, a: &Assignment) -> Result<Assignment> {
        if let Some((name, _)) = a.iter().find(|(n, _)| self.param(n).is_none()) {
            return Err(Error::UnknownParam(name.to_string()));
        }
        let mut out = Vec::with_capacity(self.params.len());
        for p in &self.params {
            let value = a.get(&p.name).ok_or_else(|| Error::InvalidParam {
                name: p.name.clone(),
                message: "missing value".into(),
            })?;
            let value = match (&p.kind, value) {
                (ParamKind::Continuous { .. }, ParamValue::Int(v)) => ParamValue::Real(*v as f64),
                (ParamKind::Integer { .. }, ParamValue::Real(v)) if v.fract() == 0.0 => ParamValue::Int(*v as i64),
                _ => value.clone(),
            };
            out.push((p.name.clone(), value));
        }
        Ok(Assignment(out))
    }
}

pub fn encode_point(space: &SearchSpace, assignment: &Assignment) -> Result<Vec<f64>> {
    let mut x = Vec::with_capacity(space.dim());
    for p in space.params() {
        let value = assignment.get(&p.name).ok_or_else(|| Error::InvalidParam {
            name: p.name.clone(),
            message: "missing value".into(),
        })?;
        let bad = |message: String| Error::InvalidParam {
            name: p.name.clone(),
            message,
        };
        match (&p.kind, value) {
            (ParamKind::Continuous { lo, hi, .. }, ParamValue::Real(_) | ParamValue::Int(_)) => {
                let v = value.as_f64().expect("numeric");
                if !(v >= *lo && v <= *hi) {
                    return Err(bad(format!("{v} outside [{lo}, {hi}]")));
                }
                x.push(p.to_unit(v));
            }
            (ParamKind::Integer { lo, hi }, ParamValue::Int(v)) => {
                if v < lo || v > hi {
                    return Err(bad(format!("{v} outside [{lo}, {hi}]")));
                }
                x.push(p.to_unit(*v as f64));
            }
            (ParamKind::Categorical { levels }, ParamValue::Level(level)) => {
                let i = levels
                    .iter()
                    .position(|l| l == level)
                    .ok_or_else(|| bad(format!("unknown level `{level}`")))?;
                x.extend((0..levels.len()).map(|j| if j == i { 1.0 } else { 0.0 }));
            }
            (_, other) => return Err(bad(format!("value `{other}` has the wrong type"))),
        }
    }
    Ok(x)
}

/// Inverse of [`encode_point`] on the whole hypercube: integers round half up
/// and clamp, categorical blocks take the argmax with ties to the lowest level.
pub fn decode_point(space: &SearchSpace, x: &[f64]) -> Assignment {
    assert_eq!(x.len(), space.dim(), "encoded point has the wrong dimension");
    let mut at = 0;
    let mut out = Vec::with_capacity(space.params().len());
    for p in space.params() {
        let value = match &p.kind {
            ParamKind::Categorical { levels } => {
                let block = &x[at..at + levels.len()];
                let mut best = 0;
                for (j, &v) in block.iter().enumerate() {
                    if v > block[best] {
                        best = j;
                    }
                }
                ParamValue::Level(levels[best].clone())
            }
            _ => p.from_unit(x[at]),
        };
        at += p.width();
        out.push((p.name.clone(), value));
    }
    Assignment(out)
}
