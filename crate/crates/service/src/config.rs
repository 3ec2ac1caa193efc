//! TOML configuration shared by `serve` and the other subcommands.
//!
//! ```toml
//! data_dir = "data"
//! listen = "127.0.0.1:8080"
//! calendar_dir = "calendars"
//! countries = ["10YHU-MAVIR----U"]
//! rebuild_at = "00:00:00"
//! run_scheduler = true
//!
//! [engine]
//! deciles = true
//! vertical_cutoff = "2015-01-01T00:00:00Z"
//!
//! [engine.advanced]
//! n_trees = 100
//! learning_rate = 0.1
//! max_depth = 7
//! min_samples_leaf = 20
//! loss = { type = "squared" }
//! ```
//!
//! A model table (`[engine.basic]`, `[engine.advanced]`, `[engine.decile]`)
//! must list all of its fields when present.

use std::path::{Path, PathBuf};

use chrono::NaiveTime;
use loadcast_core::engine::{EngineConfig, SchedulerConfig};
use loadcast_core::ingestion::CountryCode;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub listen: String,
    pub calendar_dir: Option<PathBuf>,
    /// Countries the scheduler serves; all stored countries when absent.
    pub countries: Option<Vec<CountryCode>>,
    /// Local time of the nightly rebuild.
    pub rebuild_at: NaiveTime,
    /// Whether `serve` also runs the rebuild/forecast loop.
    pub run_scheduler: bool,
    pub engine: EngineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("data"),
            listen: "127.0.0.1:8080".to_string(),
            calendar_dir: Some(PathBuf::from("calendars")),
            countries: None,
            rebuild_at: NaiveTime::MIN,
            run_scheduler: true,
            engine: EngineConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self, ApiError> {
        let config: ServiceConfig =
            toml::from_str(text).map_err(|e| ApiError::invalid(format!("invalid configuration: {e}")))?;
        config
            .engine
            .validate()
            .map_err(|e| ApiError::invalid(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ApiError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ApiError::invalid(format!("cannot read {}: {e}", path.display())))?;
        ServiceConfig::parse(&text)
    }

    pub fn scheduler_config(&self) -> SchedulerConfig {
        SchedulerConfig {
            countries: self.countries.clone(),
            rebuild_at: self.rebuild_at,
            calendar_dir: self.calendar_dir.clone(),
            engine: self.engine.clone(),
        }
    }
}
