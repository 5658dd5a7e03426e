//! Declarative experiment configuration.
//!
//! A config file is TOML with `[workload]`, `[art1]` and `[experiment]`
//! sections. Any key a file leaves out is taken from the bundled
//! `configs/default.toml`; arrays (including `category_schedule`) are
//! replaced as a whole, never merged element-wise.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::art1::CapacityPolicy;
use crate::ingest::{LogFormat, WindowRule};
use crate::prefetch::{ClusterParams, SlidingConfig};
use crate::workload::WorkloadConfig;

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityMode {
    Error,
    Force,
}

impl From<CapacityMode> for CapacityPolicy {
    fn from(m: CapacityMode) -> Self {
        match m {
            CapacityMode::Error => CapacityPolicy::Error,
            CapacityMode::Force => CapacityPolicy::ForceBest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormatName {
    Whitespace,
    Comma,
}

impl From<LogFormatName> for LogFormat {
    fn from(f: LogFormatName) -> Self {
        match f {
            LogFormatName::Whitespace => LogFormat::Whitespace,
            LogFormatName::Comma => LogFormat::Comma,
        }
    }
}

/// `"idle"` or a fixed window length in seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Seconds(i64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Art1Section {
    pub vigilance: f64,
    /// 0 stands for one slot per client.
    pub max_clusters: usize,
    pub max_epochs: usize,
    pub single_pass: bool,
    pub on_capacity: CapacityMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// `"generated"` or a path to a request log.
    pub source: String,
    pub log_format: LogFormatName,
    pub status_filter: Vec<u16>,
    pub maximum_idle_time: i64,
    pub freq_threshold: u32,
    pub window: WindowSpec,
    pub history_windows: usize,
    pub sweep: Vec<f64>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Generated,
    LogFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub workload: WorkloadConfig,
    pub art1: Art1Section,
    pub experiment: RunSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str(DEFAULT_CONFIG).expect("bundled default config is valid")
    }
}

impl ExperimentConfig {
    /// Parses `text` layered over the bundled defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut base: toml::Table = DEFAULT_CONFIG.parse().expect("bundled default config is valid");
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        merge(&mut base, user);
        let cfg: ExperimentConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn source(&self) -> Source {
        match self.experiment.source.as_str() {
            "generated" => Source::Generated,
            path => Source::LogFile(PathBuf::from(path)),
        }
    }

    pub fn window_rule(&self) -> Result<WindowRule, ConfigError> {
        match &self.experiment.window {
            WindowSpec::Named(n) if n == "idle" => Ok(WindowRule::GlobalIdle(self.experiment.maximum_idle_time)),
            WindowSpec::Seconds(s) if *s > 0 => Ok(WindowRule::Fixed(*s)),
            other => Err(ConfigError::Invalid(format!(
                "window must be \"idle\" or a positive number of seconds, got {other:?}"
            ))),
        }
    }

    pub fn status_filter(&self) -> BTreeSet<u16> {
        self.experiment.status_filter.iter().copied().collect()
    }

    /// Clustering parameters; `clients` resolves `max_clusters = 0`.
    pub fn cluster_params(&self, clients: usize) -> ClusterParams {
        ClusterParams {
            vigilance: self.art1.vigilance,
            max_clusters: if self.art1.max_clusters == 0 {
                clients.max(1)
            } else {
                self.art1.max_clusters
            },
            max_epochs: self.art1.max_epochs,
            on_capacity: self.art1.on_capacity.into(),
            single_pass: self.art1.single_pass,
        }
    }

    pub fn sliding_config(&self, clients: usize) -> SlidingConfig {
        SlidingConfig {
            cluster: self.cluster_params(clients),
            freq_threshold: self.experiment.freq_threshold,
            history: (self.experiment.history_windows > 0).then_some(self.experiment.history_windows),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(0.0..=1.0).contains(&self.art1.vigilance) {
            return bad(format!("vigilance {} outside [0, 1]", self.art1.vigilance));
        }
        if let Some(v) = self.experiment.sweep.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return bad(format!("sweep value {v} outside [0, 1]"));
        }
        if self.art1.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.experiment.maximum_idle_time <= 0 {
            return bad("maximum_idle_time must be positive".into());
        }
        if self.experiment.freq_threshold == 0 {
            return bad("freq_threshold must be at least 1".into());
        }
        if self.experiment.status_filter.is_empty() {
            return bad("status_filter must name at least one status code".into());
        }
        self.window_rule()?;
        if self.source() == Source::Generated {
            self.workload
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.workload.num_clients, 50);
        assert_eq!(cfg.workload.num_videos, 200);
        assert_eq!(cfg.experiment.sweep, [0.30, 0.35, 0.40, 0.45, 0.475, 0.50]);
        assert_eq!(cfg.experiment.maximum_idle_time, 1800);
        assert_eq!(cfg.experiment.freq_threshold, 2);
        assert_eq!(cfg.source(), Source::Generated);
        assert_eq!(cfg.window_rule().unwrap(), WindowRule::GlobalIdle(1800));
        assert_eq!(cfg.cluster_params(50).max_clusters, 50);
    }

    #[test]
    fn partial_file_layers_over_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[art1]\nvigilance = 0.7\n[workload]\nseed = 3\ncategory_schedule = []\n[experiment]\nwindow = 3600\n",
        )
        .unwrap();
        assert_eq!(cfg.art1.vigilance, 0.7);
        assert_eq!(cfg.art1.max_epochs, 10);
        assert_eq!(cfg.workload.seed, 3);
        assert_eq!(cfg.workload.num_videos, 200);
        assert!(cfg.workload.category_schedule.is_empty());
        assert_eq!(cfg.window_rule().unwrap(), WindowRule::Fixed(3600));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(
            ExperimentConfig::from_toml("[art1]\nvigilanse = 0.3\n"),
            Err(ConfigError::Parse(_))
        ));
        let cfg = ExperimentConfig::from_toml("[experiment]\nsweep = [0.2, 1.2]\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("[experiment]\nwindow = \"hourly\"\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("[art1]\non_capacity = \"force\"\n").unwrap();
        assert_eq!(cfg.cluster_params(3).on_capacity, CapacityPolicy::ForceBest);
    }
}
