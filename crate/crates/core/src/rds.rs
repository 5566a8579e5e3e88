//! Reward-based dynamic sampling.
//!
//! Once the warmup gate opens, each datum is placed in one of five
//! categories from its `(M, V_sample, V_epoch)` indicators, and the
//! category fixes the factor its advantages are scaled by:
//!
//! | category | condition                                   | ratio |
//! |----------|---------------------------------------------|-------|
//! | A_EASY   | `M == easy_value`                           | 0.0   |
//! | B1       | `M < t_mean`, `V_sample > t_var OR V_epoch > t_var`  | 1.0 |
//! | B2       | `M < t_mean`, otherwise                     | 0.0   |
//! | C1       | `t_mean <= M`, `V_sample > t_var AND V_epoch > t_var` | 1.0 |
//! | C2       | `t_mean <= M`, otherwise                    | 0.5   |

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::GroupIndicators;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdsConfig {
    pub t_mean: f64,
    pub t_var: f64,
    /// Number of consecutive batches that must clear `warmup_threshold`.
    pub warmup_window: usize,
    pub warmup_threshold: f64,
    pub easy_value: f64,
    pub easy_tolerance: f64,
}

impl Default for RdsConfig {
    fn default() -> Self {
        Self {
            t_mean: 0.5,
            t_var: 0.1,
            warmup_window: 7,
            warmup_threshold: 1.0,
            easy_value: 4.0,
            easy_tolerance: 1e-9,
        }
    }
}

impl RdsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_mean < self.easy_value) {
            return Err(Error::Config(format!(
                "t_mean ({}) must be below easy_value ({})",
                self.t_mean, self.easy_value
            )));
        }
        if self.warmup_window == 0 {
            return Err(Error::Config("warmup_window must be at least 1".into()));
        }
        if !(self.t_var >= 0.0) || !(self.easy_tolerance >= 0.0) {
            return Err(Error::Config("t_var and easy_tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "A_EASY")]
    AEasy,
    #[serde(rename = "B1_HARD_DIVERSE")]
    B1HardDiverse,
    #[serde(rename = "B2_HARD_STUCK")]
    B2HardStuck,
    #[serde(rename = "C1_MID_DIVERSE")]
    C1MidDiverse,
    #[serde(rename = "C2_MID_NARROW")]
    C2MidNarrow,
}

impl Category {
    pub fn ratio(self) -> f64 {
        match self {
            Category::AEasy | Category::B2HardStuck => 0.0,
            Category::C2MidNarrow => 0.5,
            Category::B1HardDiverse | Category::C1MidDiverse => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingDecision {
    pub category: Category,
    pub ratio: f64,
}

impl From<Category> for SamplingDecision {
    fn from(category: Category) -> Self {
        Self {
            category,
            ratio: category.ratio(),
        }
    }
}

pub fn categorize(mean: f64, v_sample: f64, v_epoch: f64, cfg: &RdsConfig) -> SamplingDecision {
    let category = if (mean - cfg.easy_value).abs() <= cfg.easy_tolerance {
        Category::AEasy
    } else if mean < cfg.t_mean {
        if v_sample > cfg.t_var || v_epoch > cfg.t_var {
            Category::B1HardDiverse
        } else {
            Category::B2HardStuck
        }
    } else if v_sample > cfg.t_var && v_epoch > cfg.t_var {
        Category::C1MidDiverse
    } else {
        Category::C2MidNarrow
    };
    category.into()
}

pub fn decide_batch(stats: &[GroupIndicators], cfg: &RdsConfig) -> Vec<SamplingDecision> {
    stats
        .iter()
        .map(|s| categorize(s.mean, s.v_sample, s.v_epoch, cfg))
        .collect()
}

/// Holds dynamic sampling off until `warmup_window` consecutive batches
/// each have a mean reward above `warmup_threshold`. Latches once open.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmupGate {
    window: usize,
    threshold: f64,
    recent: VecDeque<f64>,
    active: bool,
}

impl WarmupGate {
    pub fn new(window: usize, threshold: f64) -> Self {
        Self {
            window: window.max(1),
            threshold,
            recent: VecDeque::with_capacity(window),
            active: false,
        }
    }

    pub fn from_config(cfg: &RdsConfig) -> Self {
        Self::new(cfg.warmup_window, cfg.warmup_threshold)
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Feeds one batch mean; returns whether dynamic sampling is active.
    pub fn update(&mut self, batch_mean: f64) -> bool {
        if self.active {
            return true;
        }
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(batch_mean);
        self.active = self.recent.len() == self.window && self.recent.iter().all(|&m| m > self.threshold);
        self.active
    }
}

/// A mid-run change of the category thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChange {
    pub batch_index: u64,
    pub t_mean: f64,
    pub t_var: f64,
}

/// Warmup gate plus a mutable, change-logged configuration.
#[derive(Debug, Clone)]
pub struct RdsSampler {
    config: RdsConfig,
    gate: WarmupGate,
    changes: Vec<ThresholdChange>,
}

impl RdsSampler {
    pub fn new(config: RdsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            gate: WarmupGate::from_config(&config),
            config,
            changes: Vec::new(),
        })
    }

    pub fn config(&self) -> &RdsConfig {
        &self.config
    }

    pub fn is_active(&self) -> bool {
        self.gate.is_active()
    }

    pub fn update_warmup(&mut self, batch_mean: f64) -> bool {
        self.gate.update(batch_mean)
    }

    /// Replaces `t_mean` and `t_var`, effective from `batch_index` on.
    /// Every change is kept in [`Self::threshold_changes`].
    pub fn set_thresholds(&mut self, batch_index: u64, t_mean: f64, t_var: f64) -> Result<()> {
        let next = RdsConfig {
            t_mean,
            t_var,
            ..self.config
        };
        next.validate()?;
        self.config = next;
        self.changes.push(ThresholdChange {
            batch_index,
            t_mean,
            t_var,
        });
        Ok(())
    }

    pub fn threshold_changes(&self) -> &[ThresholdChange] {
        &self.changes
    }

    pub fn decide(&self, stats: &[GroupIndicators]) -> Vec<SamplingDecision> {
        decide_batch(stats, &self.config)
    }
}
