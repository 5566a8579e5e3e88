//! Three-stage sub-task curriculum.
//!
//! Stage 1 rewards format heavily. Once the trailing window of batch-mean
//! normalized format rewards clears `stage1_exit_format`, stage 2 shifts
//! weight to tool names and keys; when both of those clear their
//! thresholds, stage 3 shifts weight to parameter values. Stages never go
//! backwards, and the trailing buffers are cleared at each transition.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::RewardScheme;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdclConfig {
    pub window: usize,
    pub stage1_exit_format: f64,
    pub stage2_exit_name: f64,
    pub stage2_exit_key: f64,
}

impl Default for TdclConfig {
    fn default() -> Self {
        Self {
            window: 7,
            stage1_exit_format: 0.95,
            stage2_exit_name: 0.9,
            stage2_exit_key: 0.9,
        }
    }
}

impl TdclConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("tdcl.window must be at least 1".into()));
        }
        for (key, v) in [
            ("tdcl.stage1_exit_format", self.stage1_exit_format),
            ("tdcl.stage2_exit_name", self.stage2_exit_name),
            ("tdcl.stage2_exit_key", self.stage2_exit_key),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{key} must be in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Stage1,
    Stage2,
    Stage3,
}

impl Stage {
    pub fn scheme(self) -> RewardScheme {
        match self {
            Stage::Stage1 => RewardScheme::STAGE1,
            Stage::Stage2 => RewardScheme::STAGE2,
            Stage::Stage3 => RewardScheme::STAGE3,
        }
    }
}

pub fn active_scheme(stage: Stage) -> RewardScheme {
    stage.scheme()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTransition {
    pub batch_index: u64,
    pub from_stage: Stage,
    pub to_stage: Stage,
    /// Window means of normalized (format, name, key, value) at the switch.
    pub window_means: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct TdclController {
    config: TdclConfig,
    stage: Stage,
    buffer: VecDeque<[f64; 4]>,
    batches_seen: u64,
    transitions: Vec<StageTransition>,
}

impl TdclController {
    pub fn new(config: TdclConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            buffer: VecDeque::with_capacity(config.window),
            config,
            stage: Stage::Stage1,
            batches_seen: 0,
            transitions: Vec::new(),
        })
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn transitions(&self) -> &[StageTransition] {
        &self.transitions
    }

    fn window_means(&self) -> [f64; 4] {
        let n = self.buffer.len() as f64;
        let mut sums = [0.0; 4];
        for row in &self.buffer {
            for (s, x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
        sums.map(|s| s / n)
    }

    /// Feeds one batch's mean normalized `(format, name, key, value)` and
    /// returns the stage whose scheme applies to that same batch.
    pub fn observe_batch(&mut self, means: [f64; 4]) -> Stage {
        let batch_index = self.batches_seen;
        self.batches_seen += 1;
        if self.buffer.len() == self.config.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(means);
        if self.buffer.len() < self.config.window {
            return self.stage;
        }

        let wm = self.window_means();
        let next = match self.stage {
            Stage::Stage1 if wm[0] > self.config.stage1_exit_format => Some(Stage::Stage2),
            Stage::Stage2 if wm[1] > self.config.stage2_exit_name && wm[2] > self.config.stage2_exit_key => {
                Some(Stage::Stage3)
            }
            _ => None,
        };
        if let Some(to) = next {
            self.transitions.push(StageTransition {
                batch_index,
                from_stage: self.stage,
                to_stage: to,
                window_means: wm,
            });
            self.stage = to;
            self.buffer.clear();
        }
        self.stage
    }
}
