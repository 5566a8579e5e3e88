//! One training step of dynamic sampling with curriculum learning.
//!
//! ```text
//! for each batch of rollout groups (already scored under BASE):
//!     record groups                      -> (M, V_sample, V_epoch) per datum
//!     warmup gate on batch mean BASE reward
//!     ratio = categorize(...) if RDS active else 1
//!     stage = curriculum(batch mean normalized sub-rewards)
//!     staged = compose(sub_rewards, stage scheme)
//!     advantages = group_normalize(staged) * ratio
//! ```
//!
//! Sampling decisions always come from the BASE rewards, never from the
//! staged ones.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rds::{RdsConfig, RdsSampler, SamplingDecision};
use crate::reward::{compose_reward, RewardScheme, SchemeId};
use crate::stats::{mean, GroupIndicators, RolloutGroup, StatsTracker};
use crate::tdcl::{Stage, TdclConfig, TdclController};

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Group-normalized advantages `(r - mean) / (std + epsilon)` with the
/// population standard deviation. A constant group yields all zeros.
pub fn compute_advantages(rewards: &[f64], epsilon: f64) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    if rewards.iter().all(|&r| r == rewards[0]) {
        return vec![0.0; rewards.len()];
    }
    let m = mean(rewards);
    let std = (rewards.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / rewards.len() as f64).sqrt();
    rewards.iter().map(|r| (r - m) / (std + epsilon)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub group_size: usize,
    pub use_rds: bool,
    pub use_tdcl: bool,
    pub rds: RdsConfig,
    pub tdcl: TdclConfig,
    pub epsilon: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            use_rds: true,
            use_tdcl: true,
            rds: RdsConfig::default(),
            tdcl: TdclConfig::default(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Per-datum result of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatumStep {
    pub datum_id: String,
    pub epoch: u32,
    #[serde(flatten)]
    pub indicators: GroupIndicators,
    /// `None` while the warmup gate is closed or sampling is disabled.
    pub decision: Option<SamplingDecision>,
    pub ratio: f64,
    pub base_rewards: Vec<f64>,
    pub staged_rewards: Vec<f64>,
    /// Ratio-scaled advantages.
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub batch_index: u64,
    pub rds_active: bool,
    /// `None` when the curriculum is disabled (BASE scheme throughout).
    pub stage: Option<Stage>,
    pub scheme: SchemeId,
    pub mean_base_reward: f64,
    /// Batch mean of normalized (format, name, key, value).
    pub mean_normalized: [f64; 4],
    pub data: Vec<DatumStep>,
}

/// One line of the step log: a datum's step result with its batch context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLogRecord {
    pub batch_index: u64,
    pub rds_active: bool,
    pub stage: Option<Stage>,
    pub scheme: SchemeId,
    pub mean_base_reward: f64,
    pub mean_normalized: [f64; 4],
    #[serde(flatten)]
    pub datum: DatumStep,
}

impl StepOutput {
    pub fn log_records(&self) -> impl Iterator<Item = StepLogRecord> + '_ {
        self.data.iter().map(|d| StepLogRecord {
            batch_index: self.batch_index,
            rds_active: self.rds_active,
            stage: self.stage,
            scheme: self.scheme,
            mean_base_reward: self.mean_base_reward,
            mean_normalized: self.mean_normalized,
            datum: d.clone(),
        })
    }

    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        for rec in self.log_records() {
            serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Io(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Stateful step runner: stats tracker, warmup gate and curriculum.
#[derive(Debug, Clone)]
pub struct DsclPipeline {
    config: PipelineConfig,
    tracker: StatsTracker,
    rds: RdsSampler,
    tdcl: Option<TdclController>,
    batches: u64,
}

impl DsclPipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        if config.group_size < 1 {
            return Err(Error::Config("group_size must be at least 1".into()));
        }
        if !(config.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        let tdcl = if config.use_tdcl {
            Some(TdclController::new(config.tdcl)?)
        } else {
            config.tdcl.validate()?;
            None
        };
        Ok(Self {
            rds: RdsSampler::new(config.rds)?,
            tdcl,
            config,
            tracker: StatsTracker::new(),
            batches: 0,
        })
    }

    /// Resumes from a previously recorded tracker; gates start fresh.
    pub fn with_tracker(config: PipelineConfig, tracker: StatsTracker) -> Result<Self> {
        let mut p = Self::new(config)?;
        p.tracker = tracker;
        Ok(p)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn tracker(&self) -> &StatsTracker {
        &self.tracker
    }

    pub fn sampler(&self) -> &RdsSampler {
        &self.rds
    }

    /// Mutable access for mid-run threshold changes.
    pub fn sampler_mut(&mut self) -> &mut RdsSampler {
        &mut self.rds
    }

    pub fn curriculum(&self) -> Option<&TdclController> {
        self.tdcl.as_ref()
    }

    pub fn stage(&self) -> Option<Stage> {
        self.tdcl.as_ref().map(TdclController::stage)
    }

    pub fn batches_seen(&self) -> u64 {
        self.batches
    }

    fn check_batch(&self, batch: &[RolloutGroup]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Config("batch has no rollout groups".into()));
        }
        let g = self.config.group_size;
        for group in batch {
            if group.rewards.len() != g || group.sub_rewards.len() != g {
                return Err(Error::Config(format!(
                    "datum `{}` has {} rewards and {} sub-rewards, expected G = {g}",
                    group.datum_id,
                    group.rewards.len(),
                    group.sub_rewards.len()
                )));
            }
            if let Some(s) = group.sub_rewards.iter().find(|s| !s.is_consistent()) {
                return Err(Error::Schema(format!(
                    "datum `{}`: sub-rewards inconsistent with bounds: {s:?}",
                    group.datum_id
                )));
            }
        }
        Ok(())
    }

    /// Runs one step. On error nothing is recorded and no gate moves.
    pub fn step(&mut self, batch: Vec<RolloutGroup>) -> Result<StepOutput> {
        self.check_batch(&batch)?;

        let n_rollouts = (batch.len() * self.config.group_size) as f64;
        let mean_base_reward = batch.iter().flat_map(|g| &g.rewards).sum::<f64>() / n_rollouts;
        let mut mean_normalized = [0.0; 4];
        for s in batch.iter().flat_map(|g| &g.sub_rewards) {
            for (acc, x) in mean_normalized.iter_mut().zip(s.normalized()) {
                *acc += x;
            }
        }
        let mean_normalized = mean_normalized.map(|s| s / n_rollouts);

        let indicators = self.tracker.record_batch(batch.clone())?;

        let batch_index = self.batches;
        self.batches += 1;

        let rds_active = self.config.use_rds && self.rds.update_warmup(mean_base_reward);
        let decisions: Vec<Option<SamplingDecision>> = if rds_active {
            self.rds.decide(&indicators).into_iter().map(Some).collect()
        } else {
            vec![None; batch.len()]
        };

        let stage = self.tdcl.as_mut().map(|c| c.observe_batch(mean_normalized));
        let scheme = stage.map_or(RewardScheme::BASE, Stage::scheme);

        let data = batch
            .into_iter()
            .zip(indicators)
            .zip(decisions)
            .map(|((group, ind), decision)| {
                let ratio = decision.map_or(1.0, |d| d.ratio);
                let staged_rewards = group
                    .sub_rewards
                    .iter()
                    .map(|s| compose_reward(s, &scheme))
                    .collect::<Result<Vec<_>>>()?;
                let advantages = compute_advantages(&staged_rewards, self.config.epsilon)
                    .into_iter()
                    .map(|a| a * ratio)
                    .collect();
                Ok(DatumStep {
                    datum_id: group.datum_id,
                    epoch: group.epoch,
                    indicators: ind,
                    decision,
                    ratio,
                    base_rewards: group.rewards,
                    staged_rewards,
                    advantages,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(StepOutput {
            batch_index,
            rds_active,
            stage,
            scheme: scheme.scheme_id,
            mean_base_reward,
            mean_normalized,
            data,
        })
    }
}

/// Free-function form of [`DsclPipeline::step`].
pub fn dscl_step(pipeline: &mut DsclPipeline, batch: Vec<RolloutGroup>) -> Result<StepOutput> {
    pipeline.step(batch)
}
