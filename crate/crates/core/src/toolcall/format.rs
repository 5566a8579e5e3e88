use serde::{Deserialize, Serialize};

use super::parse::{DiagnosticCode, ParsedResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Violation {
    /// No `<think>` section.
    MissingThink,
    /// Neither a `<tool_call>` payload nor a `<response>`.
    MissingAnswer,
    /// Sections not in think → tool_call → response order.
    BadOrder,
    /// A tool-call line is not `{"name": .., "parameters": {..}}` JSON.
    BadToolCall,
    /// Non-whitespace text outside the recognized sections.
    StrayText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatVerdict {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl FormatVerdict {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }
}

/// Checks the five format rules. Violations are reported in rule order.
///
/// A `<tool_call>` section whose lines failed to parse still counts as an
/// answer, so a single corrupted line is reported only as
/// [`Violation::BadToolCall`].
pub fn validate_format(p: &ParsedResponse) -> FormatVerdict {
    let mut violations = Vec::new();
    let tool_errors = p.has_tool_call_errors();

    if p.think.is_none() {
        violations.push(Violation::MissingThink);
    }
    if p.tool_calls.is_none() && p.response.is_none() && !tool_errors {
        violations.push(Violation::MissingAnswer);
    }
    if p.section_order.windows(2).any(|w| w[0] >= w[1]) {
        violations.push(Violation::BadOrder);
    }
    if tool_errors {
        violations.push(Violation::BadToolCall);
    }
    let outside = p.parse_diagnostics.iter().any(|d| {
        matches!(
            d.code,
            DiagnosticCode::StrayText | DiagnosticCode::DuplicateSection | DiagnosticCode::UnclosedSection
        )
    });
    if outside {
        violations.push(Violation::StrayText);
    }

    FormatVerdict::from_violations(violations)
}
