//! Prompt construction for the two tasks (extract+classify, classify-only)
//! under static, dynamic, or zero-shot example selection.

mod similarity;
mod template;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ContextRecord, Corpus, Mention};

pub use similarity::{similarity, Similarity, TermFrequencyCosine};
pub use template::{Templates, TEMPLATE_FILES};

/// Number of examples in every few-shot prompt.
pub const FEW_SHOT_K: usize = 4;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("example pool has {available} eligible candidates, {needed} needed")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("static example `{0}` is not in the example pool")]
    StaticIdMissing(String),
    #[error("static examples must be {FEW_SHOT_K} distinct ids, got {0:?}")]
    BadStaticList(Vec<String>),
    #[error("record `{0}` would be its own example")]
    Leakage(String),
    #[error("classify-only prompt for `{0}` needs a target URL present in its context")]
    MissingTargetUrl(String),
    #[error("example `{0}` has no gold mentions")]
    UnlabeledExample(String),
    #[error("template: {0}")]
    Template(String),
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptTask {
    /// Find the URLs in the context and label each.
    #[serde(rename = "e+cl")]
    ExtractClassify,
    /// Label one given URL in its context.
    #[serde(rename = "cl")]
    ClassifyOnly,
}

impl PromptTask {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptTask::ExtractClassify => "e+cl",
            PromptTask::ClassifyOnly => "cl",
        }
    }

    /// Label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            PromptTask::ExtractClassify => "E+CL",
            PromptTask::ClassifyOnly => "CL",
        }
    }

    /// Evaluation units: one per record for extract+classify, one per
    /// mention for classify-only.
    pub fn units(self, corpus: &Corpus) -> Vec<Unit<'_>> {
        match self {
            PromptTask::ExtractClassify => corpus
                .records
                .iter()
                .map(|r| Unit {
                    id: r.id.clone(),
                    record: r,
                    mention: None,
                })
                .collect(),
            PromptTask::ClassifyOnly => corpus
                .records
                .iter()
                .flat_map(|r| {
                    (0..r.mentions.len()).map(move |i| Unit {
                        id: format!("{}#{i}", r.id),
                        record: r,
                        mention: Some(i),
                    })
                })
                .collect(),
        }
    }
}

impl fmt::Display for PromptTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptTask {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e+cl" | "ecl" | "extract-classify" => Ok(PromptTask::ExtractClassify),
            "cl" | "classify" => Ok(PromptTask::ClassifyOnly),
            _ => Err(PromptError::Unknown {
                what: "task",
                value: s.into(),
            }),
        }
    }
}

/// A unit of evaluation: the prompt target and the gold mentions it is
/// scored against.
#[derive(Debug, Clone)]
pub struct Unit<'a> {
    pub id: String,
    pub record: &'a ContextRecord,
    pub mention: Option<usize>,
}

impl<'a> Unit<'a> {
    pub fn golds(&self) -> &'a [Mention] {
        match self.mention {
            Some(i) => std::slice::from_ref(&self.record.mentions[i]),
            None => &self.record.mentions,
        }
    }

    pub fn target_url(&self) -> Option<&'a str> {
        self.mention.map(|i| self.record.mentions[i].url.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "ids")]
pub enum ExampleMode {
    Static(Vec<String>),
    Dynamic,
    /// No examples at all.
    Zero,
}

impl ExampleMode {
    pub fn fixed(ids: Vec<String>) -> Result<Self, PromptError> {
        let distinct: HashSet<&String> = ids.iter().collect();
        if ids.len() != FEW_SHOT_K || distinct.len() != ids.len() {
            return Err(PromptError::BadStaticList(ids));
        }
        Ok(ExampleMode::Static(ids))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExampleMode::Static(_) => "static",
            ExampleMode::Dynamic => "dynamic",
            ExampleMode::Zero => "zero",
        }
    }
}

/// Picks the few-shot examples for `target` from `pool`.
///
/// Dynamic selection ranks every pool record that is neither the target nor
/// from the target's repository by descending similarity, ties broken by
/// ascending id, and keeps the top `k`.
pub fn select_examples<'p>(
    target: &ContextRecord,
    pool: &'p Corpus,
    k: usize,
    mode: &ExampleMode,
    sim: &dyn Similarity,
) -> Result<Vec<&'p ContextRecord>, PromptError> {
    match mode {
        ExampleMode::Zero => Ok(Vec::new()),
        ExampleMode::Static(ids) => {
            let mut out = Vec::with_capacity(ids.len());
            for id in ids {
                if *id == target.id {
                    return Err(PromptError::Leakage(id.clone()));
                }
                out.push(pool.get(id).ok_or_else(|| PromptError::StaticIdMissing(id.clone()))?);
            }
            Ok(out)
        }
        ExampleMode::Dynamic => {
            let mut scored: Vec<(f64, &ContextRecord)> = pool
                .records
                .iter()
                .filter(|c| c.id != target.id && c.repo != target.repo)
                .map(|c| (sim.score(&target.context, &c.context), c))
                .collect();
            if scored.len() < k {
                return Err(PromptError::PoolTooSmall {
                    needed: k,
                    available: scored.len(),
                });
            }
            scored.sort_by(|(sa, a), (sb, b)| sb.total_cmp(sa).then_with(|| a.id.cmp(&b.id)));
            Ok(scored.into_iter().take(k).map(|(_, c)| c).collect())
        }
    }
}

/// Serializes mentions in the few-shot output format:
/// `[{"URL": "...", "label": "dataset_landing_page"},{...}]`.
pub fn gold_output_json<'a>(mentions: impl IntoIterator<Item = &'a Mention>) -> String {
    let items: Vec<String> = mentions
        .into_iter()
        .map(|m| {
            format!(
                "{{\"URL\": {}, \"label\": \"{}\"}}",
                serde_json::to_string(&m.url).expect("string serializes"),
                m.label.snake_name()
            )
        })
        .collect();
    format!("[{}]", items.join(","))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    /// Unit id (`record` or `record#mention`).
    pub id: String,
    pub target_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_url: Option<String>,
    pub example_ids: Vec<String>,
    pub text: String,
}

/// Fills the task template with the examples and the target input.
pub fn render_prompt(
    task: PromptTask,
    templates: &Templates,
    examples: &[&ContextRecord],
    target: &ContextRecord,
    target_url: Option<&str>,
) -> Result<RenderedPrompt, PromptError> {
    render_unit(task, templates, examples, target, target_url, target.id.clone())
}

fn render_unit(
    task: PromptTask,
    templates: &Templates,
    examples: &[&ContextRecord],
    target: &ContextRecord,
    target_url: Option<&str>,
    unit_id: String,
) -> Result<RenderedPrompt, PromptError> {
    if examples.iter().any(|e| e.id == target.id) {
        return Err(PromptError::Leakage(target.id.clone()));
    }
    let target_url = match task {
        PromptTask::ClassifyOnly => match target_url {
            Some(u) if !u.is_empty() && target.context.contains(u) => Some(u),
            _ => return Err(PromptError::MissingTargetUrl(target.id.clone())),
        },
        PromptTask::ExtractClassify => None,
    };

    let mut blocks = Vec::with_capacity(examples.len());
    for (n, ex) in examples.iter().enumerate() {
        let first = ex
            .mentions
            .first()
            .ok_or_else(|| PromptError::UnlabeledExample(ex.id.clone()))?;
        let output = match task {
            PromptTask::ExtractClassify => gold_output_json(&ex.mentions),
            PromptTask::ClassifyOnly => gold_output_json([first]),
        };
        let number = (n + 1).to_string();
        let block = templates.fill_example(
            task,
            &[
                ("N", number.as_str()),
                ("EXAMPLE TEXT", ex.context.as_str()),
                ("EXAMPLE URL", first.url.as_str()),
                ("EXAMPLE OUTPUT JSON", output.as_str()),
            ],
        )?;
        blocks.push(block);
    }
    let examples_text = blocks.join("\n");
    let text = templates.fill_prompt(
        task,
        &[
            ("EXAMPLES", examples_text.as_str()),
            ("INSERT INPUT HERE", target.context.as_str()),
            ("INSERT URL HERE", target_url.unwrap_or("")),
        ],
    )?;
    Ok(RenderedPrompt {
        id: unit_id,
        target_id: target.id.clone(),
        target_url: target_url.map(str::to_string),
        example_ids: examples.iter().map(|e| e.id.clone()).collect(),
        text,
    })
}

/// Renders one prompt per evaluation unit of `corpus`.
pub fn build_prompts(
    task: PromptTask,
    mode: &ExampleMode,
    corpus: &Corpus,
    pool: &Corpus,
    templates: &Templates,
    sim: &dyn Similarity,
) -> Result<Vec<RenderedPrompt>, PromptError> {
    let k = match mode {
        ExampleMode::Zero => 0,
        _ => FEW_SHOT_K,
    };
    let mut out = Vec::new();
    let mut cache: Option<(String, Vec<&ContextRecord>)> = None;
    for unit in task.units(corpus) {
        let examples = match &cache {
            Some((id, ex)) if *id == unit.record.id => ex.clone(),
            _ => {
                let ex = select_examples(unit.record, pool, k, mode, sim)?;
                cache = Some((unit.record.id.clone(), ex.clone()));
                ex
            }
        };
        out.push(render_unit(
            task,
            templates,
            &examples,
            unit.record,
            unit.target_url(),
            unit.id.clone(),
        )?);
    }
    Ok(out)
}
