//! Scenario configuration: one JSON object with an explicit schema version.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub system: SystemConfig,
    pub tau_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// Random physical states per trinity check.
    pub n_states: usize,
    /// Cutoffs `Z` for naive probabilities on the line group.
    pub cutoffs: Vec<i64>,
    /// Replaces every default tolerance; `PERICLOCK_TOL` wins over it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
/// Externally tagged so parse errors keep the full key path.
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    CommensurateOscillators { m1: u32, m2: u32, e_tilde: u32, levels: usize },
    IncommensurateOscillators { levels: usize },
    QubitParticle {},
    OscillatorParticle { levels: usize },
    Custom { clock: ClockConfig, system: LevelsConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    pub n_set: Vec<i64>,
    pub omega_t: f64,
    pub varphi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    pub energies: Vec<f64>,
    pub labels: Vec<i32>,
}

#[derive(Debug)]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| ParseError { path: e.path().to_string(), message: e.inner().to_string() })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ParseError {
                path: "schema_version".into(),
                message: format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
            });
        }
        Ok(cfg)
    }

    /// Pretty JSON with a trailing newline; `parse` then `emit` reproduces the input bytes.
    pub fn emit(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
