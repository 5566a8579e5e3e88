use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{create, io_err, open, CliError};
use crate::reward::{compose_reward, score_calls, score_response, RewardScheme, SchemeId, SubRewards};
use crate::toolcall::ToolCallList;

/// One prediction line: either the raw model text or already-parsed calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreInput {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_calls: Option<ToolCallList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub id: String,
    #[serde(alias = "ground_truth")]
    pub tool_calls: ToolCallList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreOutput {
    pub id: String,
    pub r_format: f64,
    pub r_name: f64,
    pub r_key: f64,
    pub r_value: f64,
    pub normalized: [f64; 4],
    pub total: f64,
}

impl ScoreInput {
    /// Pre-parsed calls are taken as well-formed.
    pub fn score(&self, truth: &ToolCallList) -> Result<SubRewards, CliError> {
        match (&self.raw_response, &self.tool_calls) {
            (Some(raw), None) => Ok(score_response(raw, truth).sub_rewards),
            (None, Some(calls)) => Ok(score_calls(calls, truth, 1.0)),
            _ => Err(CliError::Schema(format!(
                "record `{}`: exactly one of raw_response and tool_calls is required",
                self.id
            ))),
        }
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| CliError::Schema(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn check_unique<'a>(path: &Path, ids: impl Iterator<Item = &'a str>) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CliError::Schema(format!("{}: duplicate id `{id}`", path.display())));
        }
    }
    Ok(())
}

pub fn cmd_score(predictions: &Path, truth: &Path, scheme: SchemeId, out: &Path) -> Result<(), CliError> {
    let preds: Vec<ScoreInput> = read_jsonl(predictions)?;
    let truths: Vec<TruthRecord> = read_jsonl(truth)?;
    check_unique(predictions, preds.iter().map(|p| p.id.as_str()))?;
    check_unique(truth, truths.iter().map(|t| t.id.as_str()))?;

    let by_id: HashMap<&str, &TruthRecord> = truths.iter().map(|t| (t.id.as_str(), t)).collect();
    let unmatched: Vec<String> = preds
        .iter()
        .filter(|p| !by_id.contains_key(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect();
    if !unmatched.is_empty() {
        return Err(CliError::UnmatchedIds(unmatched));
    }
    let pred_ids: HashSet<&str> = preds.iter().map(|p| p.id.as_str()).collect();
    let missing: Vec<&str> = truths
        .iter()
        .map(|t| t.id.as_str())
        .filter(|id| !pred_ids.contains(id))
        .collect();
    if !missing.is_empty() {
        eprintln!("warning: truth ids without a prediction: {}", missing.join(", "));
    }

    let scheme = RewardScheme::builtin(scheme);
    let mut w = create(out)?;
    for p in &preds {
        let s = p.score(&by_id[p.id.as_str()].tool_calls)?;
        let rec = ScoreOutput {
            id: p.id.clone(),
            r_format: s.r_format,
            r_name: s.r_name,
            r_key: s.r_key,
            r_value: s.r_value,
            normalized: s.normalized(),
            total: compose_reward(&s, &scheme)?,
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| io_err(out, e))?;
        w.write_all(b"\n").map_err(|e| io_err(out, e))?;
    }
    w.flush().map_err(|e| io_err(out, e))?;
    Ok(())
}
