//! Verification reports and their canonical JSON form.
//!
//! Canonical form: keys sorted, no insignificant whitespace, every float
//! written as `d.dddddddddddddddde±x` (17 significant digits), a trailing
//! newline. Non-finite deviations are written as the strings `"inf"`,
//! `"-inf"`, and `"nan"`.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::config::{CheckName, RunConfig};
use super::HarnessError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub name: CheckName,
    pub samples_run: usize,
    #[serde(with = "extended_f64")]
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Check-specific diagnostics.
    #[serde(default)]
    pub details: BTreeMap<String, Value>,
    /// Raw sampled inputs of the worst sample; present iff `pass` is false.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<BTreeMap<String, Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub artifact_version: String,
    pub config_echo: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn new(config_echo: RunConfig, checks: Vec<CheckRecord>) -> Self {
        let overall = checks.iter().all(|c| c.pass);
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            config_echo,
            checks,
            overall,
        }
    }

    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes to a JSON value");
        canonical_json(&value)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            origin: "<report>".into(),
            message: e.to_string(),
        })
    }
}

/// Writes `value` in canonical form. `serde_json::Map` keeps keys sorted.
pub fn canonical_json(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .expect("writing to a Vec cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

/// Formats a float with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Stdout when `path` is `None`.
pub fn emit_report(report: &VerificationReport, path: Option<&Path>) -> Result<(), HarnessError> {
    let text = report.to_canonical_json();
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::Io {
            path: p.display().to_string(),
            source: e,
        }),
        None => {
            use std::io::Write;
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| HarnessError::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

/// Finite values as numbers, the rest as strings.
mod extended_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!(
                    "invalid number `{other}`"
                ))),
            },
        }
    }
}
