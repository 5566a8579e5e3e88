//! Tool-call domain types and the structured response grammar.
//!
//! A model response is expected to look like
//!
//! ```text
//! <think> reasoning </think>
//! <tool_call>
//! {"name": "get_weather", "parameters": {"city": "Paris"}}
//! {"name": "get_time", "parameters": {}}
//! </tool_call>
//! <response> final answer </response>
//! ```
//!
//! [`parse_response`] splits raw text into sections and never fails;
//! [`validate_format`] judges the parsed result against the format rules
//! that drive the binary format reward.

mod format;
mod parse;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub use format::{validate_format, FormatVerdict, Violation};
pub use parse::{parse_response, Diagnostic, DiagnosticCode, ParsedResponse, Section};

/// One predicted or ground-truth tool invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawToolCall")]
pub struct ToolCall {
    name: String,
    parameters: Map<String, Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToolCall {
    name: String,
    parameters: Map<String, Value>,
}

impl TryFrom<RawToolCall> for ToolCall {
    type Error = Error;

    fn try_from(raw: RawToolCall) -> Result<Self> {
        ToolCall::new(raw.name, raw.parameters)
    }
}

impl ToolCall {
    /// Builds a call, rejecting an empty tool name.
    pub fn new(name: impl Into<String>, parameters: Map<String, Value>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Schema("tool name must be non-empty".into()));
        }
        Ok(Self { name, parameters })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Parameter key → value map, in insertion order.
    pub fn parameters(&self) -> &Map<String, Value> {
        &self.parameters
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.parameters.keys().map(String::as_str)
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.parameters.values()
    }

    pub fn value(&self, key: &str) -> Option<&Value> {
        self.parameters.get(key)
    }

    pub fn num_params(&self) -> usize {
        self.parameters.len()
    }

    /// Single-line JSON form used inside a `<tool_call>` section.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("tool call serializes")
    }
}

/// Ordered list of tool calls. Empty means "no tool needed".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ToolCallList(pub Vec<ToolCall>);

impl ToolCallList {
    pub fn new(calls: Vec<ToolCall>) -> Self {
        Self(calls)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[ToolCall] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ToolCall> {
        self.0.iter()
    }
}

impl From<Vec<ToolCall>> for ToolCallList {
    fn from(calls: Vec<ToolCall>) -> Self {
        Self(calls)
    }
}

impl<'a> IntoIterator for &'a ToolCallList {
    type Item = &'a ToolCall;
    type IntoIter = std::slice::Iter<'a, ToolCall>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Shorthand for building calls in tests and examples:
/// `call("f", json!({"a": 1}))`.
///
/// Panics if `params` is not a JSON object or `name` is empty.
pub fn call(name: &str, params: Value) -> ToolCall {
    match params {
        Value::Object(map) => ToolCall::new(name, map).expect("non-empty tool name"),
        other => panic!("tool parameters must be an object, got {other}"),
    }
}
