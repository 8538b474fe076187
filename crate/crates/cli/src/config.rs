//! Run configuration: a TOML document merged with command-line overrides.

use std::path::Path;

use serde::Deserialize;
use shockcrit::audit::GridAxis;
use shockcrit::criteria::TolerancePolicy;
use shockcrit::expr::{build_system, ExprSystemConfig};
use shockcrit::hugoniot::ContinuationConfig;
use shockcrit::systems::{catalog_lookup, Params};
use shockcrit::{SharedModel, State};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: Option<SystemSection>,
    pub left_state: Option<Vec<f64>>,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub tolerances: TolerancePolicy,
    pub check: Option<CheckSection>,
    pub audit: Option<AuditSection>,
    pub output: Option<OutputSection>,
}

/// Either a catalog entry (`name` and `params`) or a `[system.custom]` table.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub name: Option<String>,
    #[serde(default)]
    pub params: Params,
    pub custom: Option<ExprSystemConfig>,
}

/// Where `s_+` sits: an arclength value, a target speed, or a target value
/// of one state coordinate (1-based).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub s_plus: Option<f64>,
    pub speed: Option<f64>,
    pub coordinate: Option<usize>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Arclength(f64),
    Speed(f64),
    Coordinate(usize, f64),
}

impl CheckSection {
    pub fn target(&self) -> Result<Target, CliError> {
        match (self.s_plus, self.speed, self.coordinate, self.value) {
            (Some(s), None, None, None) => Ok(Target::Arclength(s)),
            (None, Some(v), None, None) => Ok(Target::Speed(v)),
            (None, None, Some(c), Some(v)) if c >= 1 => Ok(Target::Coordinate(c - 1, v)),
            (None, None, Some(_), Some(_)) => Err(CliError::Config("check.coordinate is 1-based".into())),
            (None, None, None, None) => Err(CliError::Config(
                "missing key 'check.s_plus' (or 'check.speed', or 'check.coordinate' with 'check.value')".into(),
            )),
            _ => Err(CliError::Config(
                "give exactly one of check.s_plus, check.speed, check.coordinate+check.value".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default)]
    pub grid: Vec<GridAxis>,
    #[serde(default)]
    pub states: Vec<Vec<f64>>,
    pub samples_per_curve: Option<usize>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out: Option<String>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn left_state(&self) -> Result<State, CliError> {
        self.left_state
            .as_ref()
            .map(|v| State::from_vec(v.clone()))
            .ok_or_else(|| CliError::Config("missing key 'left_state'".into()))
    }

    /// Builds the model; custom systems are validated on their samples.
    pub fn model(&self) -> Result<SharedModel, CliError> {
        let section = self
            .system
            .as_ref()
            .ok_or_else(|| CliError::Config("missing key 'system' (use --system NAME or a [system] table)".into()))?;
        match (&section.name, &section.custom) {
            (Some(name), None) => Ok(catalog_lookup(name, &section.params)?),
            (None, Some(custom)) => {
                if !section.params.is_empty() {
                    return Err(CliError::Config(
                        "custom systems take parameters in [system.custom.params]".into(),
                    ));
                }
                Ok(std::sync::Arc::new(build_system(custom)?))
            }
            (Some(_), Some(_)) => Err(CliError::Config(
                "give either system.name or [system.custom], not both".into(),
            )),
            (None, None) => Err(CliError::Config("missing key 'system.name'".into())),
        }
    }
}

/// Parses `k=1,gamma=2`.
pub fn parse_params(text: &str) -> Result<Params, CliError> {
    let mut out = Params::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("parameter '{item}' is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("parameter '{}' has non-numeric value", k.trim())))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Parses `1,0` or `1 0`.
pub fn parse_state(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("state component '{s}' is not a number")))
        })
        .collect()
}
