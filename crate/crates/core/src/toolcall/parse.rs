use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ToolCall, ToolCallList};

/// Response sections, in their required order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Think,
    ToolCall,
    Response,
}

impl Section {
    pub const ALL: [Section; 3] = [Section::Think, Section::ToolCall, Section::Response];

    pub fn open_tag(self) -> &'static str {
        match self {
            Section::Think => "<think>",
            Section::ToolCall => "<tool_call>",
            Section::Response => "<response>",
        }
    }

    pub fn close_tag(self) -> &'static str {
        match self {
            Section::Think => "</think>",
            Section::ToolCall => "</tool_call>",
            Section::Response => "</response>",
        }
    }

    fn opening_at(text: &str) -> Option<Section> {
        Self::ALL.into_iter().find(|s| text.starts_with(s.open_tag()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticCode {
    /// A tool-call line is not a JSON object.
    MalformedToolJson,
    /// A tool-call line is a JSON object but not `{"name": str, "parameters": {..}}`.
    InvalidToolCall,
    /// Non-whitespace text outside any recognized section.
    StrayText,
    /// A section tag appeared a second time; its content is ignored.
    DuplicateSection,
    /// An opening tag without its closing tag.
    UnclosedSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
    /// Byte offset into the raw response.
    pub offset: usize,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, offset: usize, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            offset,
        }
    }
}

/// Sectioned view of a raw model response.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub think: Option<String>,
    pub tool_calls: Option<ToolCallList>,
    pub response: Option<String>,
    pub section_order: Vec<Section>,
    pub parse_diagnostics: Vec<Diagnostic>,
}

impl ParsedResponse {
    /// True when some line inside the `<tool_call>` section failed to parse.
    pub fn has_tool_call_errors(&self) -> bool {
        self.parse_diagnostics.iter().any(|d| {
            matches!(
                d.code,
                DiagnosticCode::MalformedToolJson | DiagnosticCode::InvalidToolCall
            )
        })
    }

    /// Predicted calls, or the empty list when none parsed.
    pub fn predicted_calls(&self) -> ToolCallList {
        self.tool_calls.clone().unwrap_or_default()
    }

    /// Renders the sections back to text in `section_order`.
    ///
    /// For a response that passes [`super::validate_format`], parsing the
    /// output reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut parts = Vec::with_capacity(self.section_order.len());
        for &section in &self.section_order {
            let body = match section {
                Section::Think => self.think.clone().unwrap_or_default(),
                Section::Response => self.response.clone().unwrap_or_default(),
                Section::ToolCall => {
                    let mut body = String::from("\n");
                    for c in self.tool_calls.iter().flatten() {
                        body.push_str(&c.to_json_line());
                        body.push('\n');
                    }
                    body
                }
            };
            parts.push(format!("{}{}{}", section.open_tag(), body, section.close_tag()));
        }
        parts.join("\n")
    }
}

/// Splits a raw response into `<think>`, `<tool_call>` and `<response>`
/// sections. Total: anything unrecognized becomes a diagnostic.
pub fn parse_response(raw: &str) -> ParsedResponse {
    let mut out = ParsedResponse::default();
    let mut pos = 0;

    while pos < raw.len() {
        let rest = &raw[pos..];
        let trimmed = rest.trim_start();
        pos += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            break;
        }

        let Some(section) = Section::opening_at(trimmed) else {
            let next = next_open_tag(raw, pos + 1).unwrap_or(raw.len());
            let text = raw[pos..next].trim_end();
            out.parse_diagnostics.push(Diagnostic::new(
                DiagnosticCode::StrayText,
                pos,
                format!("text outside sections: {:?}", snippet(text)),
            ));
            pos = next;
            continue;
        };

        let body_start = pos + section.open_tag().len();
        let Some(rel_end) = raw[body_start..].find(section.close_tag()) else {
            out.parse_diagnostics.push(Diagnostic::new(
                DiagnosticCode::UnclosedSection,
                pos,
                format!("{} has no matching {}", section.open_tag(), section.close_tag()),
            ));
            break;
        };
        let body = &raw[body_start..body_start + rel_end];

        if out.section_order.contains(&section) {
            out.parse_diagnostics.push(Diagnostic::new(
                DiagnosticCode::DuplicateSection,
                pos,
                format!("repeated {} section ignored", section.open_tag()),
            ));
        } else {
            out.section_order.push(section);
            match section {
                Section::Think => out.think = Some(body.to_string()),
                Section::Response => out.response = Some(body.to_string()),
                Section::ToolCall => {
                    out.tool_calls = parse_tool_lines(body, body_start, &mut out.parse_diagnostics)
                }
            }
        }
        pos = body_start + rel_end + section.close_tag().len();
    }

    out
}

fn next_open_tag(raw: &str, from: usize) -> Option<usize> {
    if from >= raw.len() {
        return None;
    }
    // `from` may sit inside a multi-byte char; back up to a boundary.
    let mut start = from;
    while !raw.is_char_boundary(start) {
        start += 1;
    }
    Section::ALL
        .iter()
        .filter_map(|s| raw[start..].find(s.open_tag()).map(|i| i + start))
        .min()
}

fn parse_tool_lines(body: &str, base: usize, diags: &mut Vec<Diagnostic>) -> Option<ToolCallList> {
    let mut calls = Vec::new();
    let mut failed = false;
    let mut offset = base;

    for line in body.split('\n') {
        let line_offset = offset;
        offset += line.len() + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(obj)) => match tool_call_from_object(obj) {
                Ok(call) => calls.push(call),
                Err(msg) => {
                    failed = true;
                    diags.push(Diagnostic::new(DiagnosticCode::InvalidToolCall, line_offset, msg));
                }
            },
            Ok(other) => {
                failed = true;
                diags.push(Diagnostic::new(
                    DiagnosticCode::MalformedToolJson,
                    line_offset,
                    format!("expected a JSON object, found {}", json_kind(&other)),
                ));
            }
            Err(err) => {
                failed = true;
                diags.push(Diagnostic::new(
                    DiagnosticCode::MalformedToolJson,
                    line_offset,
                    format!("invalid JSON: {err}"),
                ));
            }
        }
    }

    if failed || calls.is_empty() {
        None
    } else {
        Some(ToolCallList::new(calls))
    }
}

fn tool_call_from_object(mut obj: serde_json::Map<String, Value>) -> Result<ToolCall, String> {
    if let Some(extra) = obj.keys().find(|k| *k != "name" && *k != "parameters") {
        return Err(format!("unexpected member {extra:?}"));
    }
    let name = match obj.remove("name") {
        Some(Value::String(s)) if !s.is_empty() => s,
        Some(Value::String(_)) => return Err("\"name\" is empty".into()),
        Some(other) => return Err(format!("\"name\" must be a string, found {}", json_kind(&other))),
        None => return Err("missing member \"name\"".into()),
    };
    let params = match obj.remove("parameters") {
        Some(Value::Object(map)) => map,
        Some(other) => {
            return Err(format!(
                "\"parameters\" must be an object, found {}",
                json_kind(&other)
            ))
        }
        None => return Err("missing member \"parameters\"".into()),
    };
    ToolCall::new(name, params).map_err(|e| e.to_string())
}

fn json_kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn snippet(text: &str) -> String {
    const MAX: usize = 40;
    match text.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &text[..i]),
        None => text.to_string(),
    }
}
