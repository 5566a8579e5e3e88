//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dscl_core::reward::{RewardBounds, SubRewards};
use dscl_core::stats::{DatumMetadata, RolloutGroup};
use dscl_core::toolcall::{ToolCall, ToolCallList};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

/// Canonical form of a parameter value: equal canon means equal values.
#[derive(Debug, Clone, PartialEq)]
enum Canon {
    Null,
    Bool(bool),
    Num(f64),
    Str(String),
    Arr(Vec<Canon>),
    Obj(BTreeMap<String, Canon>),
}

fn canon(v: &Value) -> Canon {
    match v {
        Value::Null => Canon::Null,
        Value::Bool(b) => Canon::Bool(*b),
        Value::Number(n) => Canon::Num(n.as_f64().unwrap()),
        Value::String(s) => Canon::Str(s.trim().to_string()),
        Value::Array(xs) => Canon::Arr(xs.iter().map(canon).collect()),
        Value::Object(m) => Canon::Obj(m.iter().map(|(k, v)| (k.clone(), canon(v))).collect()),
    }
}

struct Tool {
    name: String,
    params: Vec<(String, Canon)>,
}

impl Tool {
    fn from(c: &ToolCall) -> Self {
        Tool {
            name: c.name().to_string(),
            params: c.parameters().iter().map(|(k, v)| (k.clone(), canon(v))).collect(),
        }
    }

    fn get(&self, k: &str) -> Option<&Canon> {
        self.params.iter().find(|(key, _)| key == k).map(|(_, v)| v)
    }

    fn has(&self, k: &str) -> bool {
        self.get(k).is_some()
    }
}

fn overlap(f: &Tool, y: &Tool) -> usize {
    y.params.iter().filter(|(k, _)| f.has(k)).count()
}

fn value_hits(f: &Tool, y: &Tool) -> usize {
    y.params.iter().filter(|(k, v)| f.get(k) == Some(v)).count()
}

/// Largest number of disjoint equal pairs between two value lists.
fn max_pairs(a: &[&Canon], b: &[&Canon]) -> usize {
    let Some((first, rest)) = a.split_first() else {
        return 0;
    };
    let mut best = max_pairs(rest, b);
    for j in 0..b.len() {
        if *first == b[j] {
            let mut others = b.to_vec();
            others.remove(j);
            best = best.max(1 + max_pairs(rest, &others));
        }
    }
    best
}

type Choice = (u8, usize, usize, i64);

/// Exhaustive search over injective truth-to-prediction assignments,
/// returning the one whose per-truth tuple sequence is lexicographically
/// largest. A tuple is (matched, key overlap, value hits, -index).
fn best_assignment(pred: &[Tool], truth: &[Tool]) -> Vec<Option<usize>> {
    fn search(
        i: usize,
        pred: &[Tool],
        truth: &[Tool],
        used: &mut Vec<bool>,
        seq: &mut Vec<(Choice, Option<usize>)>,
        best: &mut Option<Vec<(Choice, Option<usize>)>>,
    ) {
        if i == truth.len() {
            let better = match best {
                None => true,
                Some(b) => seq.iter().map(|s| s.0).collect::<Vec<_>>() > b.iter().map(|s| s.0).collect::<Vec<_>>(),
            };
            if better {
                *best = Some(seq.clone());
            }
            return;
        }
        seq.push(((0, 0, 0, 0), None));
        search(i + 1, pred, truth, used, seq, best);
        seq.pop();
        for j in 0..pred.len() {
            if used[j] || pred[j].name != truth[i].name {
                continue;
            }
            used[j] = true;
            let t = (1, overlap(&pred[j], &truth[i]), value_hits(&pred[j], &truth[i]), -(j as i64));
            seq.push((t, Some(j)));
            search(i + 1, pred, truth, used, seq, best);
            seq.pop();
            used[j] = false;
        }
    }
    let mut best = None;
    search(0, pred, truth, &mut vec![false; pred.len()], &mut Vec::new(), &mut best);
    best.unwrap().into_iter().map(|s| s.1).collect()
}

/// `(r_name, r_key, r_value)` evaluated literally from the definitions.
pub fn oracle_rewards(pred: &ToolCallList, truth: &ToolCallList) -> (f64, f64, f64) {
    let p: Vec<Tool> = pred.iter().map(Tool::from).collect();
    let t: Vec<Tool> = truth.iter().map(Tool::from).collect();

    let mut pn: Vec<&str> = p.iter().map(|x| x.name.as_str()).collect();
    let mut tn: Vec<&str> = t.iter().map(|x| x.name.as_str()).collect();
    pn.sort();
    pn.dedup();
    tn.sort();
    tn.dedup();
    let inter = pn.iter().filter(|n| tn.contains(n)).count();
    let union = pn.len() + tn.len() - inter;
    let r_name = if union == 0 { 1.0 } else { inter as f64 / union as f64 };

    let assignment = best_assignment(&p, &t);
    let mut r_key = 0.0;
    let mut r_value = 0.0;
    for (y, f) in t.iter().zip(&assignment) {
        let Some(f) = f.map(|j| &p[j]) else { continue };
        let extra_keys = f.params.iter().filter(|(k, _)| !y.has(k)).count();
        r_key += if f.params.is_empty() && y.params.is_empty() {
            1.0
        } else {
            overlap(f, y) as f64 / (y.params.len() + extra_keys) as f64
        };
        if !y.params.is_empty() {
            let fv: Vec<&Canon> = f.params.iter().map(|(_, v)| v).collect();
            let yv: Vec<&Canon> = y.params.iter().map(|(_, v)| v).collect();
            let diff = fv.len() - max_pairs(&fv, &yv);
            r_value += value_hits(f, y) as f64 / (y.params.len() + diff) as f64;
        }
    }
    (r_name, r_key, r_value)
}

const NAMES: [&str; 3] = ["search", "weather", "book"];
const KEYS: [&str; 4] = ["city", "date", "count", "tags"];

fn value_pool() -> Vec<Value> {
    vec![
        json!(1),
        json!(1.0),
        json!(2),
        json!("Paris"),
        json!(" Paris "),
        json!("paris"),
        json!([1, 2]),
        json!([2, 1]),
        json!({"a": 1}),
        json!(true),
        Value::Null,
    ]
}

fn random_call(rng: &mut ChaCha8Rng, max_keys: usize, key_pool: &[&str], like: Option<&ToolCall>) -> ToolCall {
    let pool = value_pool();
    let name = match like {
        Some(t) if rng.random_bool(0.8) => t.name().to_string(),
        _ => NAMES.choose(rng).unwrap().to_string(),
    };
    let n_keys = rng.random_range(0..=max_keys.min(key_pool.len()));
    let mut keys: Vec<&str> = key_pool.to_vec();
    keys.sort_by_key(|_| rng.random::<u32>());
    let mut params = Map::new();
    for k in keys.into_iter().take(n_keys) {
        let copied = like.and_then(|t| t.value(k)).filter(|_| rng.random_bool(0.6));
        let v = copied.cloned().unwrap_or_else(|| pool.choose(rng).unwrap().clone());
        params.insert(k.to_string(), v);
    }
    ToolCall::new(name, params).unwrap()
}

/// A random (prediction, truth) pair with at most 3 truth tools of at most
/// 3 keys each. Predictions often copy truth names, keys and values so that
/// partial matches and name ties are common.
pub fn random_instance(seed: u64) -> (ToolCallList, ToolCallList) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_truth = rng.random_range(0..=3);
    let truth: Vec<ToolCall> = (0..n_truth).map(|_| random_call(&mut rng, 3, &KEYS[..3], None)).collect();
    let n_pred = rng.random_range(0..=4);
    let pred: Vec<ToolCall> = (0..n_pred)
        .map(|_| {
            let like = if truth.is_empty() { None } else { truth.choose(&mut rng) };
            random_call(&mut rng, 4, &KEYS, like)
        })
        .collect();
    (ToolCallList::new(pred), ToolCallList::new(truth))
}

/// Random sub-rewards that respect their bounds.
pub fn random_subrewards(rng: &mut ChaCha8Rng) -> SubRewards {
    let key_max = rng.random_range(0..=4u32);
    let value_max = rng.random_range(0..=key_max);
    let frac = |rng: &mut ChaCha8Rng, max: u32| if rng.random_bool(0.2) { max as f64 } else { rng.random_range(0.0..=max as f64) };
    SubRewards {
        r_format: if rng.random_bool(0.5) { 1.0 } else { 0.0 },
        r_name: frac(rng, 1),
        r_key: frac(rng, key_max),
        r_value: frac(rng, value_max),
        bounds: RewardBounds::new(key_max, value_max),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A group whose sub-rewards are all perfect but whose BASE rewards are
/// given explicitly.
pub fn group(id: &str, epoch: u32, rewards: &[f64]) -> RolloutGroup {
    RolloutGroup {
        datum_id: id.into(),
        epoch,
        rewards: rewards.to_vec(),
        sub_rewards: vec![SubRewards::perfect(RewardBounds::new(1, 1)); rewards.len()],
        metadata: DatumMetadata::default(),
    }
}

/// A group built from explicit sub-rewards, scored under BASE.
pub fn scored_group(id: &str, epoch: u32, subs: Vec<SubRewards>) -> RolloutGroup {
    let rewards = subs
        .iter()
        .map(|s| dscl_core::compose_reward(s, &dscl_core::RewardScheme::BASE).unwrap())
        .collect();
    RolloutGroup {
        datum_id: id.into(),
        epoch,
        rewards,
        sub_rewards: subs,
        metadata: DatumMetadata::default(),
    }
}
