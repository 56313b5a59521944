//! Template-based natural-language feedback for grade reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{CheckId, GradeReport, SubScore};

/// Shipped English templates.
pub const DEFAULT_TEMPLATES: &str = include_str!("../templates/en.json");

/// Key of the template used for checks that could not be assessed.
pub const NOT_ASSESSABLE: &str = "not_assessable";

pub const PLACEHOLDERS: [&str; 5] = ["object", "measured", "expected", "ratio", "check"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Major,
    Minor,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackItem {
    pub check_id: CheckId,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_name: Option<String>,
    pub message: String,
    pub suggestion: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("template file must be a JSON object")]
    NotAnObject,
    #[error("missing template for {0}")]
    Missing(String),
    #[error("template {key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown template key {0}")]
    UnknownKey(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct Template {
    message: String,
    suggestion: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTemplateSet {
    pub locale: String,
    by_check: BTreeMap<CheckId, Template>,
    not_assessable: Template,
}

impl Default for FeedbackTemplateSet {
    fn default() -> Self {
        Self::from_json(DEFAULT_TEMPLATES).expect("shipped templates are valid")
    }
}

impl FeedbackTemplateSet {
    /// Parses a template file: a JSON object mapping each check id (and
    /// `not_assessable`) to `{message, suggestion}`, plus an optional
    /// `locale` string.
    pub fn from_json(text: &str) -> Result<Self, TemplateError> {
        let value: Value = serde_json::from_str(text)?;
        let Value::Object(map) = value else {
            return Err(TemplateError::NotAnObject);
        };
        let mut locale = String::from("und");
        let mut by_check = BTreeMap::new();
        let mut not_assessable = None;
        for (key, v) in map {
            if key == "locale" {
                locale = v
                    .as_str()
                    .ok_or_else(|| TemplateError::Invalid {
                        key: key.clone(),
                        reason: "must be a string".into(),
                    })?
                    .to_owned();
                continue;
            }
            let t: Template = serde_json::from_value(v).map_err(|e| TemplateError::Invalid {
                key: key.clone(),
                reason: e.to_string(),
            })?;
            check_placeholders(&key, &t.message)?;
            check_placeholders(&key, &t.suggestion)?;
            if key == NOT_ASSESSABLE {
                not_assessable = Some(t);
            } else if let Some(id) = CheckId::parse(&key) {
                by_check.insert(id, t);
            } else {
                return Err(TemplateError::UnknownKey(key));
            }
        }
        for id in CheckId::ALL {
            if !by_check.contains_key(&id) {
                return Err(TemplateError::Missing(id.to_string()));
            }
        }
        let not_assessable = not_assessable.ok_or_else(|| TemplateError::Missing(NOT_ASSESSABLE.into()))?;
        Ok(Self {
            locale,
            by_check,
            not_assessable,
        })
    }
}

fn check_placeholders(key: &str, text: &str) -> Result<(), TemplateError> {
    let invalid = |reason: String| TemplateError::Invalid {
        key: key.to_owned(),
        reason,
    };
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| invalid("unclosed '{'".into()))?;
        let name = &after[..close];
        if !PLACEHOLDERS.contains(&name) {
            return Err(invalid(format!("unknown placeholder {{{name}}}")));
        }
        rest = &after[close + 1..];
    }
    if rest.contains('}') {
        return Err(invalid("unmatched '}'".into()));
    }
    Ok(())
}

fn fill(text: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').expect("validated at load");
        let name = &after[..close];
        let value = values.iter().find(|(k, _)| *k == name).map_or("", |(_, v)| *v);
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    out
}

pub fn severity(sub: &SubScore) -> Severity {
    if !sub.assessable || sub.deduction <= 0.0 {
        Severity::Info
    } else if sub.deduction >= 0.5 * sub.weight {
        Severity::Major
    } else {
        Severity::Minor
    }
}

/// One item per sub-score with a positive deduction and one per
/// non-assessable sub-score. Numbers are printed with two decimals.
pub fn render_feedback(report: &GradeReport, templates: &FeedbackTemplateSet) -> Vec<FeedbackItem> {
    let mut items: Vec<FeedbackItem> = report
        .subscores
        .iter()
        .filter(|s| !s.assessable || s.deduction > 0.0)
        .map(|s| render_one(s, templates))
        .collect();
    // stable: equal keys keep sub-score order
    items.sort_by_key(|i| (i.severity, i.check_id));
    items
}

fn render_one(s: &SubScore, templates: &FeedbackTemplateSet) -> FeedbackItem {
    let object = s.object_name.clone().unwrap_or_else(|| "the scene".into());
    let ratio = format!("{:.2}", s.measured);
    let check = s.check_id.to_string();
    let (template, measured, expected) = if s.assessable {
        let measured = s.observed.clone().unwrap_or_else(|| ratio.clone());
        let expected = s.expected.clone().unwrap_or_else(|| format!("{:.2}", s.threshold));
        (&templates.by_check[&s.check_id], measured, expected)
    } else {
        let reason = s.evidence.clone().unwrap_or_default();
        (&templates.not_assessable, ratio.clone(), reason)
    };
    let values = [
        ("object", object.as_str()),
        ("measured", measured.as_str()),
        ("expected", expected.as_str()),
        ("ratio", ratio.as_str()),
        ("check", check.as_str()),
    ];
    FeedbackItem {
        check_id: s.check_id,
        severity: severity(s),
        object_name: s.object_name.clone(),
        message: fill(&template.message, &values),
        suggestion: fill(&template.suggestion, &values),
    }
}
