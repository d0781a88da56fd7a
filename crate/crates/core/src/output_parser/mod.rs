//! Turns free-form model responses into structured predictions.

mod consolidate;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::corpus::{normalize_label, Label};
use crate::llm_client::{BatchEntry, RawOutput};

pub use consolidate::consolidate_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum ParseFailure {
    #[error("no JSON found")]
    NoJsonFound,
    #[error("unrecoverable JSON syntax")]
    UnrecoverableSyntax,
    #[error("no usable object after repair")]
    EmptyAfterRepair,
}

impl ParseFailure {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseFailure::NoJsonFound => "no_json_found",
            ParseFailure::UnrecoverableSyntax => "unrecoverable_syntax",
            ParseFailure::EmptyAfterRepair => "empty_after_repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub url: String,
    pub raw_label: Option<String>,
    pub label: Label,
}

impl Prediction {
    pub fn new(url: impl Into<String>, raw_label: Option<String>) -> Self {
        let label = raw_label.as_deref().map_or(Label::Unknown, normalize_label);
        Self {
            url: url.into(),
            raw_label,
            label,
        }
    }

    /// Label as written to predictions files: canonical class name, or the
    /// raw string when it did not normalize.
    pub fn label_text(&self) -> Option<String> {
        match self.label {
            Label::Known(c) => Some(c.canonical_name().to_string()),
            Label::Unknown => self.raw_label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome {
    Parsed(Vec<Prediction>),
    Failed(ParseFailure),
}

impl ParseOutcome {
    pub fn is_parsed(&self) -> bool {
        matches!(self, ParseOutcome::Parsed(_))
    }

    pub fn predictions(&self) -> &[Prediction] {
        match self {
            ParseOutcome::Parsed(p) => p,
            ParseOutcome::Failed(_) => &[],
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            ParseOutcome::Parsed(_) => "parsed",
            ParseOutcome::Failed(f) => f.as_str(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("preamble rules: {0}")]
    Format(String),
    #[error("preamble rule {index}: {source}")]
    Pattern { index: usize, source: regex::Error },
}

#[derive(Debug, Deserialize)]
struct RuleSpec {
    pattern: String,
    replacement: String,
}

/// Ordered regex replacements that remove conversational text around the
/// JSON payload.
#[derive(Debug, Clone)]
pub struct PreambleRules {
    rules: Vec<(Regex, String)>,
}

const BUILTIN_RULES: &str = include_str!("../../data/preamble_rules.json");

impl PreambleRules {
    pub fn from_json(text: &str) -> Result<Self, RulesError> {
        let specs: Vec<RuleSpec> = serde_json::from_str(text).map_err(|e| RulesError::Format(e.to_string()))?;
        let rules = specs
            .into_iter()
            .enumerate()
            .map(|(index, s)| {
                Regex::new(&s.pattern)
                    .map(|re| (re, s.replacement))
                    .map_err(|source| RulesError::Pattern { index, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { rules })
    }

    pub fn load(path: &Path) -> Result<Self, RulesError> {
        let text = fs::read_to_string(path).map_err(|e| RulesError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn builtin() -> &'static Self {
        static RULES: OnceLock<PreambleRules> = OnceLock::new();
        RULES.get_or_init(|| Self::from_json(BUILTIN_RULES).expect("builtin preamble rules are valid"))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn apply(&self, raw: &str) -> String {
        let mut s = raw.to_string();
        for (re, rep) in &self.rules {
            s = re.replace_all(&s, rep.as_str()).into_owned();
        }
        s.trim().to_string()
    }
}

/// Removes openers, sign-offs and fences using the builtin rules.
pub fn strip_preamble(raw: &str) -> String {
    PreambleRules::builtin().apply(raw)
}

const URL_KEYS: [&str; 2] = ["url", "link"];
const LABEL_KEYS: [&str; 3] = ["label", "class", "type"];

fn field<'a>(obj: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| {
        obj.iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(k))
            .map(|(_, v)| v)
    })
}

fn extract(array: Vec<Value>) -> ParseOutcome {
    if array.is_empty() {
        return ParseOutcome::Parsed(vec![]);
    }
    let mut seen = HashSet::new();
    let mut preds = Vec::new();
    for item in array {
        let Value::Object(obj) = item else { continue };
        let Some(url) = field(&obj, &URL_KEYS).and_then(Value::as_str) else {
            continue;
        };
        if url.trim().is_empty() {
            continue;
        }
        let raw_label = field(&obj, &LABEL_KEYS).and_then(Value::as_str).map(String::from);
        let p = Prediction::new(url, raw_label);
        if seen.insert((p.url.clone(), p.label_text())) {
            preds.push(p);
        }
    }
    if preds.is_empty() {
        ParseOutcome::Failed(ParseFailure::EmptyAfterRepair)
    } else {
        ParseOutcome::Parsed(preds)
    }
}

/// Full pipeline with explicit rules. Text that is already a JSON array
/// bypasses every repair.
pub fn parse_with_rules(raw: &str, rules: &PreambleRules) -> ParseOutcome {
    if let Ok(Value::Array(a)) = serde_json::from_str::<Value>(raw.trim()) {
        return extract(a);
    }
    let stripped = rules.apply(raw);
    let consolidated = match consolidate_json(&stripped) {
        Ok(c) => c,
        Err(f) => return ParseOutcome::Failed(f),
    };
    match serde_json::from_str::<Value>(&consolidated) {
        Ok(Value::Array(a)) => extract(a),
        _ => ParseOutcome::Failed(ParseFailure::UnrecoverableSyntax),
    }
}

pub fn parse_text(raw: &str) -> ParseOutcome {
    parse_with_rules(raw, PreambleRules::builtin())
}

pub fn parse_predictions(raw: &RawOutput) -> ParseOutcome {
    parse_text(&raw.raw)
}

/// Fraction of outcomes that parsed. `None` for an empty list.
pub fn parse_ratio(outcomes: &[ParseOutcome]) -> Option<f64> {
    if outcomes.is_empty() {
        return None;
    }
    let parsed = outcomes.iter().filter(|o| o.is_parsed()).count();
    Some(parsed as f64 / outcomes.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub url: String,
    pub label: Option<String>,
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub predictions: Vec<PredictionLine>,
    pub parse_status: String,
}

impl PredictionRecord {
    pub fn from_outcome(id: &str, outcome: &ParseOutcome) -> Self {
        Self {
            id: id.to_string(),
            predictions: outcome
                .predictions()
                .iter()
                .map(|p| PredictionLine {
                    url: p.url.clone(),
                    label: p.label_text(),
                })
                .collect(),
            parse_status: outcome.status().to_string(),
        }
    }

    pub fn outcome(&self) -> Result<ParseOutcome, String> {
        let failure = match self.parse_status.as_str() {
            "parsed" => {
                return Ok(ParseOutcome::Parsed(
                    self.predictions
                        .iter()
                        .map(|p| Prediction::new(p.url.clone(), p.label.clone()))
                        .collect(),
                ))
            }
            "no_json_found" => ParseFailure::NoJsonFound,
            "unrecoverable_syntax" => ParseFailure::UnrecoverableSyntax,
            "empty_after_repair" => ParseFailure::EmptyAfterRepair,
            other => return Err(format!("unknown parse_status `{other}`")),
        };
        Ok(ParseOutcome::Failed(failure))
    }
}

/// Parses one batch entry; a failed call has no text and so no JSON.
pub fn parse_entry(entry: &BatchEntry, rules: &PreambleRules) -> ParseOutcome {
    match &entry.raw {
        Some(raw) => parse_with_rules(raw, rules),
        None => ParseOutcome::Failed(ParseFailure::NoJsonFound),
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1)))
        .collect()
}

pub fn predictions_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}
