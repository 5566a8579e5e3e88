use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::rds::RdsConfig;
use crate::tdcl::TdclConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SamplerMode {
    Dscl,
    RdsOnly,
    TdclOnly,
    None,
}

impl SamplerMode {
    pub fn uses_rds(self) -> bool {
        matches!(self, SamplerMode::Dscl | SamplerMode::RdsOnly)
    }

    pub fn uses_tdcl(self) -> bool {
        matches!(self, SamplerMode::Dscl | SamplerMode::TdclOnly)
    }
}

/// Inclusive `[lo, hi]` range, written as a two-element array.
pub type Range<T> = [T; 2];

/// Generator settings for one difficulty tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierConfig {
    pub count: usize,
    pub num_tools: Range<u32>,
    /// Parameters per tool.
    pub params_per_tool: Range<u32>,
    pub num_turns: Range<u32>,
    /// Learning-speed range per sub-task: (format, name, key, value).
    pub difficulty: [Range<f64>; 4],
    /// Initial mastery range per sub-task: (format, name, key, value).
    pub initial_mastery: [Range<f64>; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub easy: TierConfig,
    pub medium: TierConfig,
    pub hard: TierConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            easy: TierConfig {
                count: 100,
                num_tools: [1, 1],
                params_per_tool: [0, 2],
                num_turns: [1, 1],
                difficulty: [[0.8, 1.0], [0.7, 1.0], [0.7, 1.0], [0.2, 0.4]],
                initial_mastery: [[0.85, 0.98], [0.8, 0.95], [0.8, 0.95], [0.3, 0.6]],
            },
            medium: TierConfig {
                count: 100,
                num_tools: [1, 2],
                params_per_tool: [1, 3],
                num_turns: [1, 2],
                difficulty: [[0.8, 1.0], [0.5, 0.8], [0.5, 0.8], [0.1, 0.3]],
                initial_mastery: [[0.85, 0.98], [0.7, 0.9], [0.7, 0.9], [0.2, 0.4]],
            },
            hard: TierConfig {
                count: 100,
                num_tools: [2, 4],
                params_per_tool: [2, 5],
                num_turns: [2, 4],
                difficulty: [[0.8, 1.0], [0.3, 0.6], [0.3, 0.6], [0.05, 0.15]],
                initial_mastery: [[0.85, 0.98], [0.6, 0.85], [0.6, 0.85], [0.1, 0.3]],
            },
        }
    }
}

/// A scheduled change of the sampling thresholds at the start of `epoch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdScheduleEntry {
    pub epoch: u32,
    pub t_mean: f64,
    pub t_var: f64,
}

/// Simulation settings, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Rollouts per datum per epoch.
    #[serde(rename = "G", alias = "group_size", default = "default_g")]
    pub group_size: usize,
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub sampler_mode: SamplerMode,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub rds: RdsConfig,
    #[serde(default)]
    pub tdcl: TdclConfig,
    #[serde(default)]
    pub threshold_schedule: Vec<ThresholdScheduleEntry>,
    /// Mean normalized total reward that counts as converged.
    #[serde(default = "default_target")]
    pub target_reward: f64,
}

fn default_g() -> usize {
    8
}

fn default_target() -> f64 {
    0.9
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            group_size: default_g(),
            epochs: 60,
            batch_size: 30,
            learning_rate: 0.5,
            seed: 42,
            sampler_mode: SamplerMode::Dscl,
            dataset: DatasetConfig::default(),
            rds: RdsConfig::default(),
            tdcl: TdclConfig::default(),
            threshold_schedule: Vec::new(),
            target_reward: default_target(),
        }
    }
}

fn check_range<T: PartialOrd + std::fmt::Debug>(key: &str, r: &Range<T>, lo: T, hi: T) -> Result<()> {
    if r[0] > r[1] || r[0] < lo || r[1] > hi {
        return Err(Error::Config(format!("{key}: invalid range {r:?} (allowed {lo:?}..={hi:?})")));
    }
    Ok(())
}

impl TierConfig {
    fn validate(&self, tier: &str) -> Result<()> {
        check_range(&format!("dataset.{tier}.num_tools"), &self.num_tools, 0, u32::MAX)?;
        check_range(&format!("dataset.{tier}.params_per_tool"), &self.params_per_tool, 0, u32::MAX)?;
        check_range(&format!("dataset.{tier}.num_turns"), &self.num_turns, 1, u32::MAX)?;
        for r in &self.difficulty {
            check_range(&format!("dataset.{tier}.difficulty"), r, f64::MIN_POSITIVE, 1.0)?;
        }
        for r in &self.initial_mastery {
            check_range(&format!("dataset.{tier}.initial_mastery"), r, 0.0, 1.0)?;
        }
        Ok(())
    }
}

impl SimConfig {
    /// Parses TOML; errors name the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let cfg: SimConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::Config("G: must be at least 2".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs: must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size: must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config("learning_rate: must be in [0, 1]".into()));
        }
        let d = &self.dataset;
        d.easy.validate("easy")?;
        d.medium.validate("medium")?;
        d.hard.validate("hard")?;
        if d.easy.count + d.medium.count + d.hard.count == 0 {
            return Err(Error::Config("dataset: no data to generate".into()));
        }
        self.rds.validate()?;
        self.tdcl.validate()?;
        for s in &self.threshold_schedule {
            RdsConfig {
                t_mean: s.t_mean,
                t_var: s.t_var,
                ..self.rds
            }
            .validate()
            .map_err(|e| Error::Config(format!("threshold_schedule (epoch {}): {e}", s.epoch)))?;
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            group_size: self.group_size,
            use_rds: self.sampler_mode.uses_rds(),
            use_tdcl: self.sampler_mode.uses_tdcl(),
            rds: self.rds,
            tdcl: self.tdcl,
            ..PipelineConfig::default()
        }
    }
}
