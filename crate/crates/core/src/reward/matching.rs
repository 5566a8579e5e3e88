use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::toolcall::{ToolCall, ToolCallList};

/// Parameter value equality used by the key and value rewards.
///
/// Strings compare after trimming surrounding whitespace (case-sensitive),
/// numbers compare numerically (`1 == 1.0`), lists element-wise in order,
/// and maps by key set and per-key value. Values of different JSON kinds
/// are never equal.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::String(x), Value::String(y)) => x.trim() == y.trim(),
        (Value::Number(x), Value::Number(y)) => {
            if let (Some(x), Some(y)) = (x.as_i64(), y.as_i64()) {
                x == y
            } else if let (Some(x), Some(y)) = (x.as_u64(), y.as_u64()) {
                x == y
            } else {
                x.as_f64() == y.as_f64()
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(x, y)| values_equal(x, y))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter()
                    .all(|(k, xv)| y.get(k).is_some_and(|yv| values_equal(xv, yv)))
        }
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Null, Value::Null) => true,
        _ => false,
    }
}

/// Number of truth keys also present in the prediction.
pub fn key_overlap(pred: &ToolCall, truth: &ToolCall) -> usize {
    truth.keys().filter(|k| pred.value(k).is_some()).count()
}

/// Number of truth keys whose predicted value equals the truth value.
pub fn value_matches(pred: &ToolCall, truth: &ToolCall) -> usize {
    truth
        .parameters()
        .iter()
        .filter(|(k, tv)| pred.value(k).is_some_and(|pv| values_equal(pv, tv)))
        .count()
}

/// Assignment of predicted calls to truth calls.
///
/// `pairs[i] = (i, Some(j))` pairs truth call `i` with prediction `j`;
/// `None` means no prediction with that name was available.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, Option<usize>)>,
}

impl Matching {
    pub fn pred_for(&self, truth_index: usize) -> Option<usize> {
        self.pairs.get(truth_index).and_then(|&(_, p)| p)
    }
}

/// Pairs each truth call, in order, with the unused same-name prediction
/// that has the most overlapping keys, then the most matching values,
/// then the lowest index.
pub fn match_tools(pred: &ToolCallList, truth: &ToolCallList) -> Matching {
    let mut used = vec![false; pred.len()];
    let pairs = truth
        .iter()
        .enumerate()
        .map(|(ti, t)| {
            let best = pred
                .iter()
                .enumerate()
                .filter(|(pi, p)| !used[*pi] && p.name() == t.name())
                // max_by_key keeps the last maximum; reversing the index
                // makes the lowest index win ties.
                .max_by_key(|(pi, p)| (key_overlap(p, t), value_matches(p, t), std::cmp::Reverse(*pi)))
                .map(|(pi, _)| pi);
            if let Some(pi) = best {
                used[pi] = true;
            }
            (ti, best)
        })
        .collect();
    Matching { pairs }
}
