//! Per-datum reward history and the three sampling indicators.
//!
//! For every rollout group the tracker records the group mean `M`, the
//! group variance `V_sample`, and the variance `V_epoch` of all group means
//! seen so far for that datum. All variances are population (divide-by-n)
//! variances.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::{normalize_total, SubRewards};

/// Complexity metadata attached to a datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatumMetadata {
    pub num_tools: u32,
    pub num_params: u32,
    pub num_turns: u32,
}

impl Default for DatumMetadata {
    fn default() -> Self {
        Self {
            num_tools: 0,
            num_params: 0,
            num_turns: 1,
        }
    }
}

/// The G scored rollouts of one datum in one epoch. `rewards` are BASE totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub datum_id: String,
    pub epoch: u32,
    pub rewards: Vec<f64>,
    pub sub_rewards: Vec<SubRewards>,
    #[serde(default)]
    pub metadata: DatumMetadata,
}

impl RolloutGroup {
    fn check_shape(&self) -> Result<()> {
        if self.rewards.is_empty() {
            return Err(Error::Config(format!("datum `{}`: empty rollout group", self.datum_id)));
        }
        if self.rewards.len() != self.sub_rewards.len() {
            return Err(Error::Config(format!(
                "datum `{}`: {} rewards but {} sub-reward records",
                self.datum_id,
                self.rewards.len(),
                self.sub_rewards.len()
            )));
        }
        if self.epoch == 0 {
            return Err(Error::Config(format!("datum `{}`: epochs start at 1", self.datum_id)));
        }
        Ok(())
    }
}

/// `(M, V_sample, V_epoch)` for one datum at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupIndicators {
    #[serde(rename = "M")]
    pub mean: f64,
    pub v_sample: f64,
    pub v_epoch: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (two-pass).
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    #[serde(rename = "M")]
    pub mean: f64,
    pub v_sample: f64,
}

/// Running statistics for one datum.
#[derive(Debug, Clone, PartialEq)]
pub struct DatumStats {
    pub datum_id: String,
    pub metadata: DatumMetadata,
    records: Vec<EpochRecord>,
    // Welford accumulator over the per-epoch means.
    mean_of_means: f64,
    m2: f64,
}

impl DatumStats {
    fn new(datum_id: String, metadata: DatumMetadata) -> Self {
        Self {
            datum_id,
            metadata,
            records: Vec::new(),
            mean_of_means: 0.0,
            m2: 0.0,
        }
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn last_epoch(&self) -> Option<u32> {
        self.records.last().map(|r| r.epoch)
    }

    /// Variance of all recorded group means.
    pub fn v_epoch(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            (self.m2 / self.records.len() as f64).max(0.0)
        }
    }

    fn push(&mut self, epoch: u32, mean: f64, v_sample: f64) -> GroupIndicators {
        self.records.push(EpochRecord { epoch, mean, v_sample });
        let n = self.records.len() as f64;
        let delta = mean - self.mean_of_means;
        self.mean_of_means += delta / n;
        self.m2 += delta * (mean - self.mean_of_means);
        GroupIndicators {
            mean,
            v_sample,
            v_epoch: self.v_epoch(),
        }
    }

    fn check_epoch(&self, epoch: u32) -> Result<()> {
        match self.last_epoch() {
            Some(last) if last == epoch => Err(Error::DuplicateEpoch {
                datum_id: self.datum_id.clone(),
                epoch,
            }),
            Some(last) if last > epoch => Err(Error::EpochOutOfOrder {
                datum_id: self.datum_id.clone(),
                epoch,
                last,
            }),
            _ => Ok(()),
        }
    }
}

/// Append-only store of rollout groups with per-datum indicators.
#[derive(Debug, Clone, Default)]
pub struct StatsTracker {
    data: BTreeMap<String, DatumStats>,
    history: Vec<RolloutGroup>,
}

impl StatsTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self, datum_id: &str) -> Option<&DatumStats> {
        self.data.get(datum_id)
    }

    pub fn history(&self) -> &[RolloutGroup] {
        &self.history
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Records one group and returns its indicators.
    pub fn record_group(&mut self, group: RolloutGroup) -> Result<GroupIndicators> {
        Ok(self.record_batch(vec![group])?.remove(0))
    }

    /// Records a batch atomically: either every group is committed or, on
    /// error, the tracker is left untouched.
    pub fn record_batch(&mut self, groups: Vec<RolloutGroup>) -> Result<Vec<GroupIndicators>> {
        let mut pending: BTreeMap<&str, u32> = BTreeMap::new();
        for g in &groups {
            g.check_shape()?;
            let prior = pending.get(g.datum_id.as_str()).copied();
            match prior {
                Some(e) if e == g.epoch => {
                    return Err(Error::DuplicateEpoch {
                        datum_id: g.datum_id.clone(),
                        epoch: g.epoch,
                    })
                }
                Some(e) if e > g.epoch => {
                    return Err(Error::EpochOutOfOrder {
                        datum_id: g.datum_id.clone(),
                        epoch: g.epoch,
                        last: e,
                    })
                }
                Some(_) => {}
                None => {
                    if let Some(s) = self.data.get(&g.datum_id) {
                        s.check_epoch(g.epoch)?;
                    }
                }
            }
            pending.insert(&g.datum_id, g.epoch);
        }

        let mut out = Vec::with_capacity(groups.len());
        for g in groups {
            let m = mean(&g.rewards);
            let v = population_variance(&g.rewards);
            let stats = self
                .data
                .entry(g.datum_id.clone())
                .or_insert_with(|| DatumStats::new(g.datum_id.clone(), g.metadata));
            stats.metadata = g.metadata;
            out.push(stats.push(g.epoch, m, v));
            self.history.push(g);
        }
        Ok(out)
    }

    /// Writes the history as newline-delimited JSON, one group per line.
    pub fn write_history<W: Write>(&self, mut w: W) -> Result<()> {
        for g in &self.history {
            serde_json::to_writer(&mut w, g).map_err(|e| Error::Io(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rebuilds a tracker by replaying a history file.
    pub fn read_history<R: BufRead>(r: R) -> Result<Self> {
        let mut tracker = Self::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let g: RolloutGroup = serde_json::from_str(&line)
                .map_err(|e| Error::Schema(format!("history line {}: {e}", i + 1)))?;
            if let Some(s) = g.sub_rewards.iter().find(|s| !s.is_consistent()) {
                return Err(Error::Schema(format!(
                    "history line {}: sub-rewards inconsistent with bounds: {s:?}",
                    i + 1
                )));
            }
            tracker.record_group(g)?;
        }
        Ok(tracker)
    }

    /// Mean/variance rows for the scatter analysis: one row per
    /// (datum, epoch, sub-task), computed over each group's normalized
    /// sub-rewards. Rows follow recording order.
    pub fn export_scatter(
        &self,
        epochs: Option<RangeInclusive<u32>>,
        group_key: Option<GroupKey>,
    ) -> Result<Vec<ScatterRecord>> {
        if self.history.is_empty() {
            return Err(Error::EmptyHistory);
        }
        let mut rows = Vec::new();
        for g in &self.history {
            if epochs.as_ref().is_some_and(|r| !r.contains(&g.epoch)) {
                continue;
            }
            let label = group_key.map(|k| k.label(&g.metadata)).unwrap_or_default();
            let norm: Vec<[f64; 4]> = g.sub_rewards.iter().map(SubRewards::normalized).collect();
            for subtask in Subtask::ALL {
                let xs: Vec<f64> = match subtask {
                    Subtask::Total => g.rewards.iter().map(|&r| normalize_total(r)).collect(),
                    Subtask::Name => norm.iter().map(|n| n[1]).collect(),
                    Subtask::Key => norm.iter().map(|n| n[2]).collect(),
                    Subtask::Value => norm.iter().map(|n| n[3]).collect(),
                };
                rows.push(ScatterRecord {
                    datum_id: g.datum_id.clone(),
                    epoch: g.epoch,
                    subtask,
                    mean: mean(&xs),
                    variance: population_variance(&xs),
                    group_label: label.clone(),
                });
            }
        }
        Ok(rows)
    }
}

/// `(r_format, r_name, r_key/key_max, r_value/value_max)`.
pub fn normalize_subrewards(s: &SubRewards) -> [f64; 4] {
    s.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subtask {
    Total,
    Name,
    Key,
    Value,
}

impl Subtask {
    pub const ALL: [Subtask; 4] = [Subtask::Total, Subtask::Name, Subtask::Key, Subtask::Value];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GroupKey {
    NumTools,
    NumParams,
    NumTurns,
}

impl GroupKey {
    pub fn label(self, m: &DatumMetadata) -> String {
        match self {
            GroupKey::NumTools => m.num_tools,
            GroupKey::NumParams => m.num_params,
            GroupKey::NumTurns => m.num_turns,
        }
        .to_string()
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "num-tools" => Ok(GroupKey::NumTools),
            "num-params" => Ok(GroupKey::NumParams),
            "num-turns" => Ok(GroupKey::NumTurns),
            other => Err(Error::Config(format!(
                "unknown group key `{other}` (expected num-tools, num-params or num-turns)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRecord {
    pub datum_id: String,
    pub epoch: u32,
    pub subtask: Subtask,
    pub mean: f64,
    pub variance: f64,
    pub group_label: String,
}

/// Writes scatter rows as CSV with the header
/// `datum_id,epoch,subtask,mean,variance,group_label`.
pub fn write_scatter_csv<W: Write>(rows: &[ScatterRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    out.write_record(["datum_id", "epoch", "subtask", "mean", "variance", "group_label"])
        .map_err(io)?;
    for r in rows {
        out.serialize(r).map_err(io)?;
    }
    out.flush()?;
    Ok(())
}
