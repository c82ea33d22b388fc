//! Experiment configuration: the JSON file every command reads.
//!
//! A config names one pipeline, a seed, an optional scenario (inline object
//! or path to a JSON file, relative to the config) and tuning parameters.
//! Missing scenario and parameter fields fall back to the defaults in
//! [`crate::defaults`].

use std::path::{Path, PathBuf};

use fingerloc::geom::{build_uniform_grid, Grid, Position};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bems::BemsScenario;
use crate::classroom::ClassroomScenario;
use crate::defaults::Params;
use crate::error::CliError;
use crate::illegal::IllegalScenario;
use crate::wifi::WifiScenario;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    ClassroomCir,
    WifiRssiRspd,
    BemsBinary,
    IllegalHybrid,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::ClassroomCir => "classroom_cir",
            Pipeline::WifiRssiRspd => "wifi_rssi_rspd",
            Pipeline::BemsBinary => "bems_binary",
            Pipeline::IllegalHybrid => "illegal_hybrid",
        }
    }
}

/// A uniform grid described by its origin, shape and spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Position,
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, CliError> {
        Ok(build_uniform_grid(
            self.origin,
            self.nx,
            self.ny,
            self.spacing,
        )?)
    }
}

/// Scenario of the selected pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Scenario {
    Classroom(ClassroomScenario),
    Wifi(WifiScenario),
    Bems(BemsScenario),
    Illegal(IllegalScenario),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub scenario: Scenario,
    pub params: Params,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    pipeline: Pipeline,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    scenario: Option<Value>,
    #[serde(default)]
    params: Option<Value>,
}

impl ExperimentConfig {
    /// Default configuration of a pipeline.
    pub fn default_for(pipeline: Pipeline, seed: u64) -> Self {
        let scenario = match pipeline {
            Pipeline::ClassroomCir => Scenario::Classroom(ClassroomScenario::default()),
            Pipeline::WifiRssiRspd => Scenario::Wifi(WifiScenario::default()),
            Pipeline::BemsBinary => Scenario::Bems(BemsScenario::default()),
            Pipeline::IllegalHybrid => Scenario::Illegal(IllegalScenario::default()),
        };
        Self {
            version: CONFIG_VERSION,
            pipeline,
            seed,
            scenario,
            params: Params::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::config_json(path, &e))?;
        Self::from_value(value, path.parent())
    }

    /// Parses a config value; scenario paths resolve against `base`.
    pub fn from_value(value: Value, base: Option<&Path>) -> Result<Self, CliError> {
        let raw: RawConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("config: {e}")))?;
        if raw.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "config version {} is not supported, expected {CONFIG_VERSION}",
                raw.version
            )));
        }
        let scenario_value = match raw.scenario {
            Some(Value::String(p)) => {
                let path: PathBuf = base.map_or_else(|| PathBuf::from(&p), |b| b.join(&p));
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                serde_json::from_str(&text).map_err(|e| CliError::config_json(&path, &e))?
            }
            Some(v) => v,
            None => Value::Object(Default::default()),
        };
        let field = |e: serde_json::Error| CliError::Config(format!("scenario: {e}"));
        let scenario = match raw.pipeline {
            Pipeline::ClassroomCir => {
                Scenario::Classroom(serde_json::from_value(scenario_value).map_err(field)?)
            }
            Pipeline::WifiRssiRspd => {
                Scenario::Wifi(serde_json::from_value(scenario_value).map_err(field)?)
            }
            Pipeline::BemsBinary => {
                Scenario::Bems(serde_json::from_value(scenario_value).map_err(field)?)
            }
            Pipeline::IllegalHybrid => {
                Scenario::Illegal(serde_json::from_value(scenario_value).map_err(field)?)
            }
        };
        let params: Params = match raw.params {
            Some(v) => {
                serde_json::from_value(v).map_err(|e| CliError::Config(format!("params: {e}")))?
            }
            None => Params::default(),
        };
        let cfg = Self {
            version: raw.version,
            pipeline: raw.pipeline,
            seed: raw.seed,
            scenario,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        match &self.scenario {
            Scenario::Classroom(s) => s.validate(),
            Scenario::Wifi(s) => s.validate(),
            Scenario::Bems(s) => s.validate(),
            Scenario::Illegal(s) => s.validate(),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Returns a copy with the JSON field at dotted `key` set to `value`
    /// (parsed as JSON, or taken as a string when it is not valid JSON).
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, CliError> {
        let mut root = self.to_value();
        let parsed: Value =
            serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        let mut slot = &mut root;
        for part in key.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| CliError::Config(format!("unknown sweep key {key:?}")))?;
        }
        *slot = parsed;
        Self::from_value(root, None)
    }

    pub fn classroom(&self) -> Result<&ClassroomScenario, CliError> {
        match &self.scenario {
            Scenario::Classroom(s) => Ok(s),
            _ => Err(self.wrong("classroom_cir")),
        }
    }

    pub fn wifi(&self) -> Result<&WifiScenario, CliError> {
        match &self.scenario {
            Scenario::Wifi(s) => Ok(s),
            _ => Err(self.wrong("wifi_rssi_rspd")),
        }
    }

    pub fn bems(&self) -> Result<&BemsScenario, CliError> {
        match &self.scenario {
            Scenario::Bems(s) => Ok(s),
            _ => Err(self.wrong("bems_binary")),
        }
    }

    pub fn illegal(&self) -> Result<&IllegalScenario, CliError> {
        match &self.scenario {
            Scenario::Illegal(s) => Ok(s),
            _ => Err(self.wrong("illegal_hybrid")),
        }
    }

    fn wrong(&self, want: &str) -> CliError {
        CliError::Config(format!("pipeline {} is not {want}", self.pipeline.name()))
    }
}
