//! Experiment configuration files.
//!
//! A configuration is a flat TOML document:
//!
//! ```toml
//! snr_db = 6.0
//! rate = 1.5
//! vf_span = 200.0
//! window_span = 3.0           # optional, default 3
//! window_step = 0.1           # optional, default 0.1
//! distribution = [[2, 0.51], [4, 0.49]]
//! load_grid = [0.05, 0.1, 0.2]
//! min_users_per_point = 1000000
//! max_lost_events = 2000      # optional
//! seed = 1
//! outputs = "results/lambda2" # optional
//! catalog = "ucps.toml"       # optional, relative to the config file
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::floor::{builtin_catalog, parse_catalog, UcpDescriptor};
use crate::model::{validate_config, DegreeDistribution, SystemConfig};

/// Smallest accepted `min_users_per_point`.
pub const MIN_USERS_FLOOR: u64 = 10_000;

fn default_window_span() -> f64 {
    SystemConfig::DEFAULT_WINDOW_SPAN
}

fn default_window_step() -> f64 {
    SystemConfig::DEFAULT_WINDOW_STEP
}

fn default_min_users() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub snr_db: f64,
    pub rate: f64,
    pub vf_span: f64,
    #[serde(default = "default_window_span")]
    pub window_span: f64,
    #[serde(default = "default_window_step")]
    pub window_step: f64,
    /// `(degree, probability)` pairs.
    pub distribution: Vec<(usize, f64)>,
    pub load_grid: Vec<f64>,
    #[serde(default = "default_min_users")]
    pub min_users_per_point: u64,
    #[serde(default)]
    pub max_lost_events: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Option<String>,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(catalog), Some(dir)) = (&cfg.catalog, path.parent()) {
            if catalog.is_relative() {
                cfg.catalog = Some(dir.join(catalog));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn system(&self) -> SystemConfig {
        SystemConfig {
            window_span: self.window_span,
            window_step: self.window_step,
            ..SystemConfig::from_db(self.snr_db, self.rate, self.vf_span)
        }
    }

    /// Reference scenario: IRA-2 at 6 dB, R = 1.5, T_f = 200.
    pub fn reference() -> Self {
        Self {
            snr_db: 6.0,
            rate: 1.5,
            vf_span: 200.0,
            window_span: default_window_span(),
            window_step: default_window_step(),
            distribution: vec![(2, 1.0)],
            load_grid: vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.4],
            min_users_per_point: default_min_users(),
            max_lost_events: None,
            seed: 1,
            outputs: None,
            catalog: None,
        }
    }
}

/// A validated experiment: configuration plus the objects built from it.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: SystemConfig,
    pub distribution: DegreeDistribution,
    pub catalog: Vec<UcpDescriptor>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, HarnessError> {
        if config.load_grid.is_empty() {
            return Err(HarnessError::Config("load_grid is empty".into()));
        }
        if config
            .load_grid
            .iter()
            .any(|&g| !(g.is_finite() && g > 0.0))
        {
            return Err(HarnessError::Config(
                "load_grid values must be positive".into(),
            ));
        }
        if config.load_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config(
                "load_grid must be strictly increasing".into(),
            ));
        }
        if config.min_users_per_point < MIN_USERS_FLOOR {
            return Err(HarnessError::Config(format!(
                "min_users_per_point must be at least {MIN_USERS_FLOOR}"
            )));
        }
        let system = config.system();
        let distribution = DegreeDistribution::new(config.distribution.iter().copied())?;
        validate_config(&system, &distribution)?;
        let catalog = match &config.catalog {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                parse_catalog(&text)?
            }
            None => builtin_catalog(),
        };
        Ok(Self {
            config,
            system,
            distribution,
            catalog,
        })
    }
}
