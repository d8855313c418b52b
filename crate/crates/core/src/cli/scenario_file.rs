//! JSON scenario files.
//!
//! ```json
//! {
//!   "demand": 2.0,
//!   "holders": [
//!     { "a": 0.1, "h": 0.002, "label": "A" },
//!     { "a": 0.2, "h": 0.005 }
//!   ],
//!   "dynamics": { "step_size": 0.002, "max_iters": 1000 }
//! }
//! ```
//!
//! Unknown keys are rejected; a file parses only if it describes a valid
//! market.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::{MarketScenario, QuadraticCost};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    pub a: f64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub demand: f64,
    pub holders: Vec<HolderSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSpec>,
}

/// Why a scenario file was refused.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioFileError {
    Io {
        path: String,
        message: String,
    },
    /// Malformed JSON or an unknown/missing key.
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed but describing an invalid market; `key` names the field.
    Invalid {
        key: String,
        message: String,
    },
}

impl fmt::Display for ScenarioFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioFileError::Io { path, message } => write!(f, "cannot read {path}: {message}"),
            ScenarioFileError::Syntax {
                line,
                column,
                message,
            } => write!(f, "line {line}, column {column}: {message}"),
            ScenarioFileError::Invalid { key, message } => write!(f, "{key}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioFileError {}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ScenarioFileError {
    ScenarioFileError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

impl ScenarioFile {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| ScenarioFileError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioFileError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioFileError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        ScenarioFile::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioFileError> {
        if !(self.demand > 0.0 && self.demand.is_finite()) {
            return Err(invalid(
                "demand",
                format!("must be finite and > 0, got {}", self.demand),
            ));
        }
        if self.holders.is_empty() {
            return Err(invalid("holders", "at least one holder is required"));
        }
        for (i, holder) in self.holders.iter().enumerate() {
            if !(holder.a >= 0.0 && holder.a.is_finite()) {
                return Err(invalid(
                    format!("holders[{i}].a"),
                    format!("must be finite and >= 0, got {}", holder.a),
                ));
            }
            if !(holder.h > 0.0 && holder.h.is_finite()) {
                return Err(invalid(
                    format!("holders[{i}].h"),
                    format!("must be finite and > 0 (h > 0), got {}", holder.h),
                ));
            }
        }
        if let Some(dynamics) = &self.dynamics {
            let positive = [
                ("dynamics.p0", dynamics.p0),
                ("dynamics.step_size", dynamics.step_size),
            ];
            for (key, value) in positive {
                if let Some(v) = value {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(invalid(key, format!("must be finite and > 0, got {v}")));
                    }
                }
            }
            let nonnegative = [
                ("dynamics.tol_abs", dynamics.tol_abs),
                ("dynamics.tol_rel", dynamics.tol_rel),
            ];
            for (key, value) in nonnegative {
                if let Some(v) = value {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(invalid(key, format!("must be finite and >= 0, got {v}")));
                    }
                }
            }
            if dynamics.max_iters == Some(0) {
                return Err(invalid("dynamics.max_iters", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn to_scenario(&self) -> Result<MarketScenario, ScenarioFileError> {
        self.validate()?;
        let holders = self
            .holders
            .iter()
            .enumerate()
            .map(|(i, h)| {
                QuadraticCost::new(h.a, h.h)
                    .map_err(|e| invalid(format!("holders[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        MarketScenario::new(self.demand, holders).map_err(|e| invalid("scenario", e.to_string()))
    }

    pub fn from_scenario(scenario: &MarketScenario) -> Self {
        ScenarioFile {
            demand: scenario.demand(),
            holders: scenario
                .holders()
                .iter()
                .map(|c| HolderSpec {
                    a: c.a(),
                    h: c.h(),
                    label: None,
                })
                .collect(),
            dynamics: None,
        }
    }

    /// Labels in holder order, with `DH<i>` for unlabelled holders.
    pub fn labels(&self) -> Vec<String> {
        self.holders
            .iter()
            .enumerate()
            .map(|(i, h)| h.label.clone().unwrap_or_else(|| format!("DH{}", i + 1)))
            .collect()
    }

    /// Pretty JSON; numbers keep their shortest round-trip representation.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }
}
