//! Scoring of matched predictions under four MUC-style schemes, in
//! multiclass and binary (dataset vs. not) label modes.

mod report;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, Mention, UrlClass};
use crate::matcher::{match_record, ratio_histogram, MatchError, MatchResult, Threshold};
use crate::output_parser::{parse_ratio, ParseOutcome, Prediction};
use crate::prompting::Unit;

pub use report::{render_csv, render_parse_ratio_table, render_text, CSV_HEADER};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    EmptyRun,
    #[error("no prediction record for unit `{0}`")]
    MissingPrediction(String),
    #[error("prediction record `{0}` matches no evaluation unit")]
    UnknownUnit(String),
    #[error("duplicate prediction record `{0}`")]
    DuplicatePrediction(String),
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    Strict,
    Exact,
    Partial,
    Type,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Strict, Scheme::Exact, Scheme::Partial, Scheme::Type];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Strict => "Strict",
            Scheme::Exact => "Exact",
            Scheme::Partial => "Partial",
            Scheme::Type => "Type",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    Multiclass,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Correct,
    Incorrect,
    Partial,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub correct: u64,
    pub incorrect: u64,
    pub partial: u64,
    pub missing: u64,
    pub spurious: u64,
}

/// A ratio that may have had a zero denominator, in which case the value is
/// 0 and `undefined` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub undefined: bool,
}

impl Metric {
    fn ratio(num: f64, den: u64) -> Self {
        if den == 0 {
            Metric {
                value: 0.0,
                undefined: true,
            }
        } else {
            Metric {
                value: num / den as f64,
                undefined: false,
            }
        }
    }
}

impl EvalCounts {
    pub fn record(&mut self, v: Verdict) {
        match v {
            Verdict::Correct => self.correct += 1,
            Verdict::Incorrect => self.incorrect += 1,
            Verdict::Partial => self.partial += 1,
        }
    }

    pub fn merge(&mut self, o: &EvalCounts) {
        self.correct += o.correct;
        self.incorrect += o.incorrect;
        self.partial += o.partial;
        self.missing += o.missing;
        self.spurious += o.spurious;
    }

    fn credit(&self) -> f64 {
        self.correct as f64 + 0.5 * self.partial as f64
    }

    pub fn precision(&self) -> Metric {
        Metric::ratio(
            self.credit(),
            self.correct + self.incorrect + self.partial + self.spurious,
        )
    }

    pub fn recall(&self) -> Metric {
        Metric::ratio(
            self.credit(),
            self.correct + self.incorrect + self.partial + self.missing,
        )
    }
}

fn labels_agree(pred: Label, gold: UrlClass, mode: LabelMode) -> bool {
    match mode {
        LabelMode::Multiclass => pred == Label::Known(gold),
        LabelMode::Binary => pred.class().is_some_and(UrlClass::is_dataset) == gold.is_dataset(),
    }
}

/// Verdict for one matched pair.
pub fn score_pair(pred: &Prediction, gold: &Mention, ratio: f64, scheme: Scheme, mode: LabelMode) -> Verdict {
    let same_url = pred.url == gold.url;
    let same_label = labels_agree(pred.label, gold.label, mode);
    let ok = |b: bool| if b { Verdict::Correct } else { Verdict::Incorrect };
    match scheme {
        Scheme::Strict => ok(same_url && same_label),
        Scheme::Exact => ok(same_url),
        Scheme::Partial if same_url => Verdict::Correct,
        Scheme::Partial if ratio > 0.0 => Verdict::Partial,
        Scheme::Partial => Verdict::Incorrect,
        Scheme::Type => ok(same_label),
    }
}

/// Golds, parse outcome and alignment for one evaluation unit.
#[derive(Debug, Clone)]
pub struct ScoredUnit {
    pub id: String,
    pub golds: Vec<Mention>,
    pub outcome: ParseOutcome,
    pub matches: MatchResult,
}

impl ScoredUnit {
    pub fn new(id: String, golds: Vec<Mention>, outcome: ParseOutcome, tau: Threshold) -> Result<Self, EvalError> {
        let matches = match &outcome {
            ParseOutcome::Parsed(p) => match_record(p, &golds, tau)?,
            ParseOutcome::Failed(_) => MatchResult {
                missing: (0..golds.len()).collect(),
                ..Default::default()
            },
        };
        Ok(Self {
            id,
            golds,
            outcome,
            matches,
        })
    }

    pub fn counts(&self, scheme: Scheme, mode: LabelMode) -> EvalCounts {
        let preds = self.outcome.predictions();
        let mut c = EvalCounts {
            missing: self.matches.missing.len() as u64,
            spurious: self.matches.spurious.len() as u64,
            ..Default::default()
        };
        for p in &self.matches.pairs {
            c.record(score_pair(&preds[p.pred], &self.golds[p.gold], p.ratio, scheme, mode));
        }
        c
    }
}

/// Pairs every unit with its parse outcome (keyed by unit id) and matches.
pub fn align(
    units: &[Unit<'_>],
    outcomes: Vec<(String, ParseOutcome)>,
    tau: Threshold,
) -> Result<Vec<ScoredUnit>, EvalError> {
    let known: HashSet<&str> = units.iter().map(|u| u.id.as_str()).collect();
    let mut by_id: HashMap<String, ParseOutcome> = HashMap::new();
    for (id, o) in outcomes {
        if !known.contains(id.as_str()) {
            return Err(EvalError::UnknownUnit(id));
        }
        if by_id.contains_key(&id) {
            return Err(EvalError::DuplicatePrediction(id));
        }
        by_id.insert(id, o);
    }
    units
        .iter()
        .map(|u| {
            let o = by_id
                .remove(&u.id)
                .ok_or_else(|| EvalError::MissingPrediction(u.id.clone()))?;
            ScoredUnit::new(u.id.clone(), u.golds().to_vec(), o, tau)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub counts: EvalCounts,
    pub precision: Metric,
    pub recall: Metric,
}

/// Micro-averaged score over all units.
pub fn score_run(units: &[ScoredUnit], scheme: Scheme, mode: LabelMode) -> Result<Score, EvalError> {
    if units.is_empty() {
        return Err(EvalError::EmptyRun);
    }
    let mut counts = EvalCounts::default();
    for u in units {
        counts.merge(&u.counts(scheme, mode));
    }
    Ok(Score {
        counts,
        precision: counts.precision(),
        recall: counts.recall(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRow {
    pub scheme: Scheme,
    pub multiclass: Score,
    pub binary: Score,
}

/// All schemes in both label modes for one (model, task, mode) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub task: String,
    pub mode: String,
    pub units: usize,
    pub gold_mentions: usize,
    pub parse_ratio: f64,
    /// Parsed means the output yielded a schema-valid prediction array.
    pub parse_definition: String,
    pub schemes: Vec<SchemeRow>,
    /// Matched-pair ratios in ten bins over (0, 1].
    pub match_ratio_histogram: [usize; 10],
}

pub const PARSE_DEFINITION: &str = "schema-valid prediction array";

impl EvalReport {
    pub fn row(&self, scheme: Scheme) -> Option<&SchemeRow> {
        self.schemes.iter().find(|r| r.scheme == scheme)
    }
}

pub fn evaluate(model: &str, task: &str, mode: &str, units: &[ScoredUnit]) -> Result<EvalReport, EvalError> {
    let outcomes: Vec<ParseOutcome> = units.iter().map(|u| u.outcome.clone()).collect();
    let ratio = parse_ratio(&outcomes).ok_or(EvalError::EmptyRun)?;
    let schemes = Scheme::ALL
        .into_iter()
        .map(|s| {
            Ok(SchemeRow {
                scheme: s,
                multiclass: score_run(units, s, LabelMode::Multiclass)?,
                binary: score_run(units, s, LabelMode::Binary)?,
            })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(EvalReport {
        model: model.into(),
        task: task.into(),
        mode: mode.into(),
        units: units.len(),
        gold_mentions: units.iter().map(|u| u.golds.len()).sum(),
        parse_ratio: ratio,
        parse_definition: PARSE_DEFINITION.into(),
        schemes,
        match_ratio_histogram: ratio_histogram(units.iter().map(|u| &u.matches)),
    })
}
