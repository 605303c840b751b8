//! Run configuration: strict JSON with unknown-key rejection.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::liegroup::MetricSide;
use crate::minkowski::NormSpec;

pub const DEFAULT_SAMPLES: usize = 1000;

/// The checks a run can request, in their canonical spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Axioms,
    Ideal,
    WellDefined,
    InvarianceLeft,
    InvarianceRight,
    RiemannCompat,
    BiInvariance,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Axioms,
        CheckName::Ideal,
        CheckName::WellDefined,
        CheckName::InvarianceLeft,
        CheckName::InvarianceRight,
        CheckName::RiemannCompat,
        CheckName::BiInvariance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Axioms => "axioms",
            CheckName::Ideal => "ideal",
            CheckName::WellDefined => "well_defined",
            CheckName::InvarianceLeft => "invariance_left",
            CheckName::InvarianceRight => "invariance_right",
            CheckName::RiemannCompat => "riemann_compat",
            CheckName::BiInvariance => "bi_invariance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckName::Axioms => 1e-9,
            CheckName::Ideal => 1e-9,
            CheckName::WellDefined | CheckName::InvarianceLeft | CheckName::InvarianceRight => 1e-9,
            CheckName::RiemannCompat => 1e-9,
            CheckName::BiInvariance => 1e-10,
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupParams {
    pub n: usize,
}

/// `"center"`, `{"basis_indices": [...]}`, or `{"basis": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SubgroupSpec {
    Named(String),
    Indices { basis_indices: Vec<usize> },
    Basis { basis: Vec<Vec<f64>> },
}

impl<'de> Deserialize<'de> for SubgroupSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) => Ok(SubgroupSpec::Named(s)),
            Value::Object(map) => {
                let (key, value) = single_entry(map, &["basis_indices", "basis"])?;
                match key.as_str() {
                    "basis_indices" => serde_json::from_value(value)
                        .map(|basis_indices| SubgroupSpec::Indices { basis_indices })
                        .map_err(de::Error::custom),
                    _ => serde_json::from_value(value)
                        .map(|basis| SubgroupSpec::Basis { basis })
                        .map_err(de::Error::custom),
                }
            }
            other => Err(de::Error::invalid_type(
                unexpected(&other),
                &"a subgroup name or object",
            )),
        }
    }
}

/// `"orthogonal"`, `{"orthogonal": form}`, or `{"basis": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ComplementSpec {
    /// Orthogonal with respect to the given form, or the identity when absent.
    #[default]
    Orthogonal,
    OrthogonalTo(Vec<Vec<f64>>),
    Basis(Vec<Vec<f64>>),
}

impl Serialize for ComplementSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ComplementSpec::Orthogonal => s.serialize_str("orthogonal"),
            ComplementSpec::OrthogonalTo(form) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("orthogonal", form)?;
                m.end()
            }
            ComplementSpec::Basis(basis) => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("basis", basis)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for ComplementSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "orthogonal" => Ok(ComplementSpec::Orthogonal),
            Value::String(s) => Err(de::Error::unknown_variant(&s, &["orthogonal"])),
            Value::Object(map) => {
                let (key, value) = single_entry(map, &["orthogonal", "basis"])?;
                let rows: Vec<Vec<f64>> =
                    serde_json::from_value(value).map_err(de::Error::custom)?;
                Ok(if key == "orthogonal" {
                    ComplementSpec::OrthogonalTo(rows)
                } else {
                    ComplementSpec::Basis(rows)
                })
            }
            other => Err(de::Error::invalid_type(
                unexpected(&other),
                &"\"orthogonal\" or an object",
            )),
        }
    }
}

fn single_entry<E: de::Error>(
    map: serde_json::Map<String, Value>,
    allowed: &'static [&'static str],
) -> Result<(String, Value), E> {
    if let Some(bad) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(E::unknown_field(bad, allowed));
    }
    let mut it = map.into_iter();
    match (it.next(), it.next()) {
        (Some(entry), None) => Ok(entry),
        _ => Err(E::custom(format!("expected exactly one of {allowed:?}"))),
    }
}

fn unexpected(v: &Value) -> de::Unexpected<'_> {
    match v {
        Value::Null => de::Unexpected::Unit,
        Value::Bool(b) => de::Unexpected::Bool(*b),
        Value::Number(_) => de::Unexpected::Other("number"),
        Value::String(s) => de::Unexpected::Str(s),
        Value::Array(_) => de::Unexpected::Seq,
        Value::Object(_) => de::Unexpected::Map,
    }
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_params: Option<GroupParams>,
    pub subgroup: SubgroupSpec,
    #[serde(default)]
    pub complement: ComplementSpec,
    pub norm: NormSpec,
    pub metric_side: MetricSide,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<CheckName, f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            origin: "<config>".into(),
            message: e.to_string(),
        })
    }

    /// The tolerance for `check`: an override from `tolerances` or the default.
    pub fn tolerance(&self, check: CheckName) -> f64 {
        self.tolerances
            .get(&check)
            .copied()
            .unwrap_or_else(|| check.default_tolerance())
    }

    /// Requested checks with duplicates dropped, first occurrence kept.
    pub fn requested_checks(&self) -> Vec<CheckName> {
        let mut out: Vec<CheckName> = Vec::new();
        for &c in &self.checks {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    /// Checks that do not need the geometry built: sample count and tolerances.
    pub fn validate_values(&self) -> Result<(), HarnessError> {
        if self.samples == 0 {
            return Err(HarnessError::invalid("samples", "must be at least 1"));
        }
        for (check, &tol) in &self.tolerances {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(HarnessError::invalid(
                    format!("tolerances.{check}"),
                    format!("must be a positive number, got {tol}"),
                ));
            }
        }
        Ok(())
    }
}

/// Reads and parses a configuration file. Errors cite the path along with
/// the offending key, line, and column.
pub fn load_config(path: &Path) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        origin: path.display().to_string(),
        message: e.to_string(),
    })?;
    cfg.validate_values()?;
    Ok(cfg)
}
