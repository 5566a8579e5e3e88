//! Synthetic-policy training harness.
//!
//! Each datum carries a latent mastery per sub-task (format, name, key,
//! value). Rollouts draw Bernoulli successes from those masteries, the
//! pipeline scores and samples them, and retained data nudge their own
//! mastery toward 1 in proportion to the active scheme's emphasis.

mod config;
mod output;

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{DatasetConfig, Range, SamplerMode, SimConfig, ThresholdScheduleEntry, TierConfig};
pub use output::{read_manifest, RunManifest, RUN_FILES};

use crate::error::Result;
use crate::pipeline::{DsclPipeline, StepOutput};
use crate::reward::{compose_reward, normalize_total, RewardBounds, RewardScheme, SchemeId, SubRewards};
use crate::stats::{mean, DatumMetadata, RolloutGroup, StatsTracker};
use crate::tdcl::StageTransition;
use crate::rds::ThresholdChange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDatum {
    pub datum_id: String,
    pub tier: Tier,
    pub metadata: DatumMetadata,
    /// (format, name, key, value), each in `[0, 1]`.
    pub mastery: [f64; 4],
    /// (format, name, key, value), each in `(0, 1]`.
    pub difficulty: [f64; 4],
}

impl SimDatum {
    pub fn bounds(&self) -> RewardBounds {
        let m = &self.metadata;
        let value_max = if m.num_params > 0 { m.num_tools } else { 0 };
        RewardBounds::new(m.num_tools, value_max)
    }

    pub fn is_mastered(&self, level: f64) -> bool {
        self.mastery.iter().all(|&m| m >= level)
    }
}

const STREAM_DATASET: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_ROLLOUT: u64 = 3;

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn stream_rng(seed: u64, stream: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    for (chunk, word) in bytes.chunks_exact_mut(8).zip([seed, stream, a, b]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// The rollout stream for one datum in one epoch.
pub fn rollout_rng(seed: u64, datum_id: &str, epoch: u32) -> ChaCha8Rng {
    stream_rng(seed, STREAM_ROLLOUT, fnv1a(datum_id), epoch as u64)
}

fn draw_u32<R: Rng>(rng: &mut R, r: Range<u32>) -> u32 {
    rng.random_range(r[0]..=r[1])
}

fn draw_f64<R: Rng>(rng: &mut R, r: Range<f64>) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

/// Builds the easy, medium and hard data in that order.
pub fn generate_dataset(cfg: &DatasetConfig, seed: u64) -> Vec<SimDatum> {
    let mut rng = stream_rng(seed, STREAM_DATASET, 0, 0);
    let mut out = Vec::new();
    for (tier, t) in [(Tier::Easy, &cfg.easy), (Tier::Medium, &cfg.medium), (Tier::Hard, &cfg.hard)] {
        for _ in 0..t.count {
            let num_tools = draw_u32(&mut rng, t.num_tools);
            let num_params = (0..num_tools).map(|_| draw_u32(&mut rng, t.params_per_tool)).sum();
            let num_turns = draw_u32(&mut rng, t.num_turns);
            let difficulty = t.difficulty.map(|r| draw_f64(&mut rng, r));
            let mastery = t.initial_mastery.map(|r| draw_f64(&mut rng, r));
            out.push(SimDatum {
                datum_id: format!("d{:04}", out.len()),
                tier,
                metadata: DatumMetadata {
                    num_tools,
                    num_params,
                    num_turns,
                },
                mastery,
                difficulty,
            });
        }
    }
    out
}

/// Draws `g` rollouts for `d` and scores them under BASE.
pub fn sample_rollouts<R: Rng>(d: &SimDatum, g: usize, epoch: u32, rng: &mut R) -> RolloutGroup {
    let bounds = d.bounds();
    let [mf, mn, mk, mv] = d.mastery;
    let mut rewards = Vec::with_capacity(g);
    let mut sub_rewards = Vec::with_capacity(g);
    for _ in 0..g {
        let mut hit = |p: f64| if rng.random_bool(p) { 1.0 } else { 0.0 };
        let r_format = hit(mf);
        let r_name = hit(mn);
        let r_key = (0..bounds.key_max).map(|_| hit(mk)).sum();
        let r_value = (0..bounds.value_max).map(|_| hit(mv)).sum();
        let s = SubRewards {
            r_format,
            r_name,
            r_key,
            r_value,
            bounds,
        };
        rewards.push(compose_reward(&s, &RewardScheme::BASE).expect("simulated rewards lie within bounds"));
        sub_rewards.push(s);
    }
    RolloutGroup {
        datum_id: d.datum_id.clone(),
        epoch,
        rewards,
        sub_rewards,
        metadata: d.metadata,
    }
}

/// Moves each mastery toward 1 by `eta * ratio * w_k * difficulty_k` of the
/// remaining gap, where `w` is normalized to sum 1.
pub fn update_mastery(d: &mut SimDatum, ratio: f64, stage_weights: [f64; 4], eta: f64) {
    let total: f64 = stage_weights.iter().sum();
    if total <= 0.0 {
        return;
    }
    for ((m, w), diff) in d.mastery.iter_mut().zip(stage_weights).zip(d.difficulty) {
        *m = (*m + eta * ratio * (w / total) * diff * (1.0 - *m)).clamp(0.0, 1.0);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub retained: u64,
    pub discarded: u64,
}

impl SelectionCounts {
    fn add(&mut self, ratio: f64) {
        if ratio > 0.0 {
            self.retained += 1;
        } else {
            self.discarded += 1;
        }
    }
}

/// Post-warmup selection counts under one reward scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSelection {
    pub scheme: SchemeId,
    #[serde(flatten)]
    pub counts: SelectionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: u32,
    pub scheme_at_end: SchemeId,
    pub rds_active_at_end: bool,
    /// Mean normalized (format, name, key, value) over all rollouts.
    pub mean_normalized: [f64; 4],
    pub mean_normalized_total: f64,
    /// Counts over post-warmup decisions only.
    pub selection: SelectionCounts,
    pub selection_by_tier: [SelectionCounts; 3],
    pub mastery_updates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps_per_epoch: u64,
    pub total_steps: u64,
    /// First step at which the trailing one-epoch window of batch-mean
    /// normalized totals reaches the target.
    pub steps_to_target: Option<u64>,
    pub mastery_updates_total: u64,
    pub mastery_updates_to_target: Option<u64>,
    pub selection_by_scheme: Vec<SchemeSelection>,
    pub final_mean_normalized_total: f64,
}

#[derive(Debug, Clone)]
pub struct RunHistory {
    pub config: SimConfig,
    pub steps: Vec<StepOutput>,
    pub tracker: StatsTracker,
    pub transitions: Vec<StageTransition>,
    pub threshold_changes: Vec<ThresholdChange>,
    pub epochs: Vec<EpochSummary>,
    pub summary: RunSummary,
    /// Data as they stand after the last epoch.
    pub data: Vec<SimDatum>,
    /// Mastery vectors at the end of every epoch, indexed `[epoch - 1][datum]`.
    pub mastery_trace: Vec<Vec<[f64; 4]>>,
}

pub fn run_experiment(cfg: &SimConfig) -> Result<RunHistory> {
    cfg.validate()?;
    let mut data = generate_dataset(&cfg.dataset, cfg.seed);
    let mut pipeline = DsclPipeline::new(cfg.pipeline_config())?;
    let g = cfg.group_size;
    let steps_per_epoch = data.len().div_ceil(cfg.batch_size);

    let mut steps = Vec::new();
    let mut epochs = Vec::new();
    let mut mastery_trace = Vec::new();
    let mut by_scheme: Vec<SchemeSelection> = Vec::new();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(steps_per_epoch);
    let mut updates_total = 0u64;
    let mut steps_to_target = None;
    let mut updates_to_target = None;
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=cfg.epochs {
        for s in cfg.threshold_schedule.iter().filter(|s| s.epoch == epoch) {
            let at = pipeline.batches_seen();
            pipeline.sampler_mut().set_thresholds(at, s.t_mean, s.t_var)?;
        }
        order.shuffle(&mut stream_rng(cfg.seed, STREAM_SHUFFLE, epoch as u64, 0));

        let mut norm_sum = [0.0; 4];
        let mut total_sum = 0.0;
        let mut selection = SelectionCounts::default();
        let mut selection_by_tier = [SelectionCounts::default(); 3];
        let mut epoch_updates = 0u64;

        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<RolloutGroup> = chunk
                .par_iter()
                .map(|&i| {
                    let d = &data[i];
                    sample_rollouts(d, g, epoch, &mut rollout_rng(cfg.seed, &d.datum_id, epoch))
                })
                .collect();
            let batch_total = mean(&batch.iter().flat_map(|b| &b.rewards).map(|&r| normalize_total(r)).collect::<Vec<_>>());

            let out = pipeline.step(batch)?;
            let weights = RewardScheme::builtin(out.scheme).focus_weights();
            for (step, &i) in out.data.iter().zip(chunk) {
                if step.ratio > 0.0 {
                    update_mastery(&mut data[i], step.ratio, weights, cfg.learning_rate);
                    epoch_updates += 1;
                    updates_total += 1;
                }
                if step.decision.is_some() {
                    selection.add(step.ratio);
                    selection_by_tier[data[i].tier as usize].add(step.ratio);
                    let entry = match by_scheme.iter_mut().find(|s| s.scheme == out.scheme) {
                        Some(e) => e,
                        None => {
                            by_scheme.push(SchemeSelection {
                                scheme: out.scheme,
                                counts: SelectionCounts::default(),
                            });
                            by_scheme.last_mut().expect("just pushed")
                        }
                    };
                    entry.counts.add(step.ratio);
                }
            }
            let n = out.data.len() as f64;
            for (acc, x) in norm_sum.iter_mut().zip(out.mean_normalized) {
                *acc += x * n;
            }
            total_sum += batch_total * n;

            if window.len() == steps_per_epoch {
                window.pop_front();
            }
            window.push_back(batch_total);
            let step_no = out.batch_index + 1;
            if steps_to_target.is_none() && window.len() == steps_per_epoch && mean(window.make_contiguous()) >= cfg.target_reward {
                steps_to_target = Some(step_no);
                updates_to_target = Some(updates_total);
            }
            steps.push(out);
        }

        let n = data.len() as f64;
        epochs.push(EpochSummary {
            epoch,
            scheme_at_end: steps.last().map_or(SchemeId::Base, |s: &StepOutput| s.scheme),
            rds_active_at_end: pipeline.sampler().is_active() && cfg.sampler_mode.uses_rds(),
            mean_normalized: norm_sum.map(|s| s / n),
            mean_normalized_total: total_sum / n,
            selection,
            selection_by_tier,
            mastery_updates: epoch_updates,
        });
        mastery_trace.push(data.iter().map(|d| d.mastery).collect());
    }

    let summary = RunSummary {
        steps_per_epoch: steps_per_epoch as u64,
        total_steps: pipeline.batches_seen(),
        steps_to_target,
        mastery_updates_total: updates_total,
        mastery_updates_to_target: updates_to_target,
        selection_by_scheme: by_scheme,
        final_mean_normalized_total: epochs.last().map_or(0.0, |e| e.mean_normalized_total),
    };
    Ok(RunHistory {
        config: cfg.clone(),
        transitions: pipeline.curriculum().map(|c| c.transitions().to_vec()).unwrap_or_default(),
        threshold_changes: pipeline.sampler().threshold_changes().to_vec(),
        tracker: pipeline.tracker().clone(),
        steps,
        epochs,
        summary,
        data,
        mastery_trace,
    })
}
