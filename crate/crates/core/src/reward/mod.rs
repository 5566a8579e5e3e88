//! Fine-grained tool-call rewards.
//!
//! Four sub-rewards score a prediction against the ground truth:
//!
//! * `r_format` ∈ {0, 1}: the response passes every format rule.
//! * `r_name` ∈ [0, 1]: Jaccard overlap of distinct tool names.
//! * `r_key` ∈ [0, |Y|]: per truth tool, key overlap with its matched
//!   prediction, penalized by extra predicted keys.
//! * `r_value` ∈ [0, #tools with keys]: per truth tool, fraction of truth
//!   keys whose value was reproduced, penalized by extra or wrong values.
//!
//! [`compose_reward`] folds them into one scalar under a [`RewardScheme`].

mod matching;
mod scheme;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::toolcall::{parse_response, validate_format, FormatVerdict, ParsedResponse, ToolCall, ToolCallList};

pub use matching::{key_overlap, match_tools, value_matches, values_equal, Matching};
pub use scheme::{compose_reward, map_interval, Interval, RewardScheme, SchemeId};

/// Lowest total under [`RewardScheme::BASE`].
pub const BASE_MIN: f64 = -3.0;
/// Highest total under [`RewardScheme::BASE`]; a perfect prediction.
pub const BASE_MAX: f64 = 4.0;

/// Analytic bounds of the correctness sub-rewards for one truth list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBounds {
    pub name_max: f64,
    /// Number of truth tools.
    pub key_max: u32,
    /// Number of truth tools with at least one parameter.
    pub value_max: u32,
    pub sum_min: f64,
    pub sum_max: f64,
}

impl RewardBounds {
    pub fn new(key_max: u32, value_max: u32) -> Self {
        Self {
            name_max: 1.0,
            key_max,
            value_max,
            sum_min: 0.0,
            sum_max: 1.0 + key_max as f64 + value_max as f64,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.name_max == 1.0
            && self.sum_min == 0.0
            && self.value_max <= self.key_max
            && self.sum_max == 1.0 + self.key_max as f64 + self.value_max as f64
    }
}

/// Bounds implied by a ground-truth list.
pub fn reward_bounds(truth: &ToolCallList) -> RewardBounds {
    let with_keys = truth.iter().filter(|t| t.num_params() > 0).count();
    RewardBounds::new(truth.len() as u32, with_keys as u32)
}

/// Raw sub-rewards for one rollout, with the bounds they were scored against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubRewards {
    pub r_format: f64,
    pub r_name: f64,
    pub r_key: f64,
    pub r_value: f64,
    pub bounds: RewardBounds,
}

impl SubRewards {
    /// Sub-rewards of a perfect prediction against `bounds`.
    pub fn perfect(bounds: RewardBounds) -> Self {
        Self {
            r_format: 1.0,
            r_name: 1.0,
            r_key: bounds.key_max as f64,
            r_value: bounds.value_max as f64,
            bounds,
        }
    }

    /// `(format, name, key, value)` each scaled into `[0, 1]`.
    /// A zero bound counts as fully achieved.
    pub fn normalized(&self) -> [f64; 4] {
        let ratio = |x: f64, max: u32| if max == 0 { 1.0 } else { x / max as f64 };
        [
            self.r_format,
            self.r_name,
            ratio(self.r_key, self.bounds.key_max),
            ratio(self.r_value, self.bounds.value_max),
        ]
    }

    pub fn is_consistent(&self) -> bool {
        let in_range = |x: f64, max: f64| (0.0..=max + 1e-9).contains(&x);
        (self.r_format == 0.0 || self.r_format == 1.0)
            && in_range(self.r_name, 1.0)
            && in_range(self.r_key, self.bounds.key_max as f64)
            && in_range(self.r_value, self.bounds.value_max as f64)
            && self.bounds.is_consistent()
    }
}

/// Maps a normalized-to-[0,1] view of a BASE total.
pub fn normalize_total(base_total: f64) -> f64 {
    (base_total - BASE_MIN) / (BASE_MAX - BASE_MIN)
}

pub fn reward_format(v: &FormatVerdict) -> f64 {
    if v.ok {
        1.0
    } else {
        0.0
    }
}

/// Jaccard similarity of the distinct predicted and truth tool names.
pub fn reward_name(pred: &ToolCallList, truth: &ToolCallList) -> f64 {
    let p: HashSet<&str> = pred.iter().map(ToolCall::name).collect();
    let t: HashSet<&str> = truth.iter().map(ToolCall::name).collect();
    let union = p.union(&t).count();
    if union == 0 {
        return 1.0;
    }
    p.intersection(&t).count() as f64 / union as f64
}

fn key_term(pred: &ToolCall, truth: &ToolCall) -> f64 {
    if pred.num_params() == 0 && truth.num_params() == 0 {
        return 1.0;
    }
    let overlap = key_overlap(pred, truth);
    let extra = pred.keys().filter(|k| truth.value(k).is_none()).count();
    overlap as f64 / (truth.num_params() + extra) as f64
}

pub fn reward_key(m: &Matching, pred: &ToolCallList, truth: &ToolCallList) -> f64 {
    truth
        .iter()
        .enumerate()
        .filter_map(|(ti, t)| m.pred_for(ti).map(|pi| key_term(&pred.as_slice()[pi], t)))
        .sum()
}

/// Size of the multiset difference `pred_values − truth_values` under
/// [`values_equal`].
fn extra_values(pred: &ToolCall, truth: &ToolCall) -> usize {
    let mut remaining: Vec<&Value> = truth.values().collect();
    pred.values()
        .filter(|pv| match remaining.iter().position(|tv| values_equal(pv, tv)) {
            Some(i) => {
                remaining.swap_remove(i);
                false
            }
            None => true,
        })
        .count()
}

fn value_term(pred: &ToolCall, truth: &ToolCall) -> f64 {
    if truth.num_params() == 0 {
        return 0.0;
    }
    let hits = value_matches(pred, truth);
    hits as f64 / (truth.num_params() + extra_values(pred, truth)) as f64
}

pub fn reward_value(m: &Matching, pred: &ToolCallList, truth: &ToolCallList) -> f64 {
    truth
        .iter()
        .enumerate()
        .filter_map(|(ti, t)| m.pred_for(ti).map(|pi| value_term(&pred.as_slice()[pi], t)))
        .sum()
}

/// Correctness sub-rewards for already-parsed predictions.
pub fn score_calls(pred: &ToolCallList, truth: &ToolCallList, r_format: f64) -> SubRewards {
    let m = match_tools(pred, truth);
    SubRewards {
        r_format,
        r_name: reward_name(pred, truth),
        r_key: reward_key(&m, pred, truth),
        r_value: reward_value(&m, pred, truth),
        bounds: reward_bounds(truth),
    }
}

/// Everything derived from scoring one raw response.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredResponse {
    pub parsed: ParsedResponse,
    pub verdict: FormatVerdict,
    pub sub_rewards: SubRewards,
}

/// Parses, validates and scores a raw response. Correctness rewards use
/// whatever tool calls parsed, even when the format check fails.
pub fn score_response(raw: &str, truth: &ToolCallList) -> ScoredResponse {
    let parsed = parse_response(raw);
    let verdict = validate_format(&parsed);
    let sub_rewards = score_calls(&parsed.predicted_calls(), truth, reward_format(&verdict));
    ScoredResponse {
        parsed,
        verdict,
        sub_rewards,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolcall::call;
    use serde_json::json;

    fn list(calls: Vec<ToolCall>) -> ToolCallList {
        ToolCallList::new(calls)
    }

    #[test]
    fn format_reward() {
        assert_eq!(reward_format(&FormatVerdict { ok: true, violations: vec![] }), 1.0);
        let v = validate_format(&parse_response("<response>x</response>"));
        assert_eq!(reward_format(&v), 0.0);
    }

    #[test]
    fn name_reward() {
        let p = list(vec![call("A", json!({})), call("B", json!({}))]);
        let t = list(vec![call("A", json!({})), call("C", json!({}))]);
        assert!((reward_name(&p, &t) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(reward_name(&t, &t), 1.0);
        assert_eq!(reward_name(&list(vec![]), &list(vec![])), 1.0);
        assert_eq!(reward_name(&list(vec![]), &t), 0.0);
        // duplicates collapse
        let dup = list(vec![call("A", json!({})), call("A", json!({}))]);
        assert_eq!(reward_name(&dup, &list(vec![call("A", json!({}))])), 1.0);
    }

    #[test]
    fn key_reward() {
        let t = list(vec![call("f", json!({"a": 1, "b": 2}))]);
        let p = list(vec![call("f", json!({"a": 1, "c": 2}))]);
        let m = match_tools(&p, &t);
        assert!((reward_key(&m, &p, &t) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(reward_key(&match_tools(&t, &t), &t, &t), 1.0);

        let two = list(vec![call("f", json!({"a": 1})), call("g", json!({"b": 2}))]);
        assert_eq!(reward_key(&match_tools(&two, &two), &two, &two), 2.0);

        let empty = list(vec![call("f", json!({}))]);
        assert_eq!(reward_key(&match_tools(&empty, &empty), &empty, &empty), 1.0);
    }

    #[test]
    fn value_reward() {
        let t = list(vec![call("f", json!({"a": 1, "b": "x"}))]);
        assert_eq!(reward_value(&match_tools(&t, &t), &t, &t), 1.0);

        let wrong_b = list(vec![call("f", json!({"a": 1, "b": "y"}))]);
        let v = reward_value(&match_tools(&wrong_b, &t), &wrong_b, &t);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);

        let other = list(vec![call("g", json!({"a": 1, "b": "x"}))]);
        assert_eq!(reward_value(&match_tools(&other, &t), &other, &t), 0.0);

        // extra key with a fresh value counts once in the denominator
        let extra = list(vec![call("f", json!({"a": 1, "b": "x", "c": 5}))]);
        let v = reward_value(&match_tools(&extra, &t), &extra, &t);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bounds() {
        let t = list(vec![call("f", json!({"a": 1})), call("g", json!({"b": 1}))]);
        assert_eq!(reward_bounds(&t).sum_max, 5.0);
        assert_eq!(reward_bounds(&list(vec![])).sum_max, 1.0);
        assert_eq!(reward_bounds(&list(vec![call("f", json!({}))])).sum_max, 2.0);
    }

    #[test]
    fn normalized_subrewards() {
        let t = list(vec![call("f", json!({"a": 1})), call("g", json!({"b": 1}))]);
        let perfect = score_calls(&t, &t, 1.0);
        assert_eq!(perfect.normalized(), [1.0; 4]);

        let mut half = perfect;
        half.r_key = 1.0;
        assert_eq!(half.normalized()[2], 0.5);

        let empty = score_calls(&list(vec![]), &list(vec![]), 0.0);
        assert_eq!(empty.normalized(), [0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn score_perfect_response() {
        let t = list(vec![call("f", json!({"a": 1}))]);
        let s = score_response(
            "<think>x</think><tool_call>\n{\"name\":\"f\",\"parameters\":{\"a\":1}}\n</tool_call>",
            &t,
        );
        assert!(s.verdict.ok);
        assert_eq!(compose_reward(&s.sub_rewards, &RewardScheme::BASE).unwrap(), 4.0);
    }
}
