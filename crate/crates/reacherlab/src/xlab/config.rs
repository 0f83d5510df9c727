//! Experiment configuration: a TOML file whose axes are exactly the
//! studied setup variations. An empty file is the baseline setup
//! (two-joint task, velocity control, 40 ms action cycle, wired medium,
//! no injectors, virtual clock).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::ActionSpace;
use crate::timebase::ClockMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskVariant {
    TwoJoint,
    SixJoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Medium {
    Wired,
    Wireless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Trpo,
    Random,
}

/// Overrides for kinematic parameters and safety bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    /// Two-joint link lengths, meters.
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    /// Half-extents of the fingertip box, meters.
    pub box_half: Option<[f64; 3]>,
    /// Half-range of the angular bounds around the start posture, rad.
    pub angle_half_range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: TaskVariant,
    pub action_space: ActionSpace,
    pub action_cycle_ms: u64,
    pub medium: Medium,
    /// Mean of the exponential action-update delay injector, ms.
    pub action_delay_ms: Option<f64>,
    /// Mean of the exponential robot-actuation delay injector, ms.
    pub actuation_delay_ms: Option<f64>,
    pub clock: ClockMode,
    pub seed: u64,
    pub total_steps: u64,
    pub agent: AgentKind,
    pub batch_episodes: usize,
    /// Policy/critic hidden layer widths.
    pub hidden: [usize; 2],
    /// Reset-controller timeout, seconds.
    pub reset_timeout_s: f64,
    /// When set, the run is a continuous signal probe of this many
    /// actuation ticks: a random agent roams with safety bounds widened,
    /// recording per-tick motor signals.
    pub probe_ticks: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub overrides: Overrides,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: TaskVariant::TwoJoint,
            action_space: ActionSpace::Velocity,
            action_cycle_ms: 40,
            medium: Medium::Wired,
            action_delay_ms: None,
            actuation_delay_ms: None,
            clock: ClockMode::Virtual,
            seed: 0,
            total_steps: 150_000,
            agent: AgentKind::Trpo,
            batch_episodes: 20,
            hidden: [64, 64],
            reset_timeout_s: 8.0,
            probe_ticks: None,
            out_dir: None,
            overrides: Overrides::default(),
        }
    }
}

pub const EPISODE_MS: u64 = 4_000;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.action_cycle_ms == 0 {
            return Err(ConfigError::Invalid {
                key: "action_cycle_ms",
                reason: "must be positive".into(),
            });
        }
        if EPISODE_MS % self.action_cycle_ms != 0 {
            return Err(ConfigError::Invalid {
                key: "action_cycle_ms",
                reason: format!("must divide the {EPISODE_MS} ms episode length"),
            });
        }
        if let Some(d) = self.action_delay_ms {
            if d <= 0.0 || !d.is_finite() {
                return Err(ConfigError::Invalid {
                    key: "action_delay_ms",
                    reason: "must be positive and finite".into(),
                });
            }
        }
        if let Some(d) = self.actuation_delay_ms {
            if d <= 0.0 || !d.is_finite() {
                return Err(ConfigError::Invalid {
                    key: "actuation_delay_ms",
                    reason: "must be positive and finite".into(),
                });
            }
        }
        if self.batch_episodes == 0 {
            return Err(ConfigError::Invalid {
                key: "batch_episodes",
                reason: "must be positive".into(),
            });
        }
        if self.reset_timeout_s <= 0.0 {
            return Err(ConfigError::Invalid {
                key: "reset_timeout_s",
                reason: "must be positive".into(),
            });
        }
        for (key, v) in [("l1", self.overrides.l1), ("l2", self.overrides.l2)] {
            if let Some(v) = v {
                if v <= 0.0 {
                    return Err(ConfigError::Invalid {
                        key: if key == "l1" { "overrides.l1" } else { "overrides.l2" },
                        reason: "link lengths must be positive".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Load and validate a config file; defaults fill every omitted key.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    ExperimentConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_full_baseline() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.action_cycle_ms, 40);
        assert_eq!(cfg.medium, Medium::Wired);
        assert_eq!(cfg.total_steps, 150_000);
    }

    #[test]
    fn negative_cycle_reports_the_key() {
        let err = ExperimentConfig::from_toml("action_cycle_ms = -5").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("action_cycle_ms"), "message: {msg}");
    }

    #[test]
    fn non_dividing_cycle_reports_the_key() {
        let err = ExperimentConfig::from_toml("action_cycle_ms = 33").unwrap_err();
        match err {
            ConfigError::Invalid { key, .. } => assert_eq!(key, "action_cycle_ms"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = ExperimentConfig::from_toml("actoin_cycle_ms = 40").unwrap_err();
        assert!(err.to_string().contains("actoin_cycle_ms"), "{err}");
    }

    #[test]
    fn dump_and_reload_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 3;
        cfg.medium = Medium::Wireless;
        cfg.action_delay_ms = Some(80.0);
        cfg.overrides.box_half = Some([0.2, 0.2, 0.0]);
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn standard_cycle_values_validate() {
        for ms in [8u64, 40, 80, 160, 200] {
            let cfg =
                ExperimentConfig::from_toml(&format!("action_cycle_ms = {ms}")).unwrap();
            assert_eq!(cfg.action_cycle_ms, ms);
        }
    }
}
