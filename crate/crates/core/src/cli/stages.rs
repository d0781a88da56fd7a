use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::CliError;
use crate::corpus::{load_corpus, Corpus};
use crate::evaluator::{align, evaluate, EvalReport, ScoredUnit};
use crate::http::ReqwestTransport;
use crate::llm_client::BackendKind;
use crate::llm_client::{run_batch, BatchEntry, CompletionBackend, LiveBackend, ReplayStore};
use crate::output_parser::{parse_entry, PreambleRules, PredictionRecord};
use crate::prompting::{build_prompts, RenderedPrompt, Templates, TermFrequencyCosine};

fn stage(name: &'static str) -> impl Fn(String) -> CliError {
    move |message| CliError::Stage { stage: name, message }
}

pub fn templates(cfg: &RunConfig) -> Result<Templates, CliError> {
    match &cfg.templates {
        Some(dir) => Templates::load_dir(dir).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(Templates::builtin()),
    }
}

pub fn rules(path: Option<&Path>) -> Result<PreambleRules, CliError> {
    match path {
        Some(p) => PreambleRules::load(p).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(PreambleRules::builtin().clone()),
    }
}

pub fn corpus(path: &Path, name: &'static str) -> Result<Corpus, CliError> {
    load_corpus(path).map_err(|e| stage(name)(e.to_string()))
}

pub fn prompts(cfg: &RunConfig) -> Result<Vec<RenderedPrompt>, CliError> {
    let mode = cfg.example_mode()?;
    let templates = templates(cfg)?;
    let corpus_path = cfg.corpus_path()?;
    let pool_path = cfg.pool_path()?;
    let corpus = corpus(corpus_path, "prompt")?;
    let pool = self::corpus(pool_path, "prompt")?;
    build_prompts(cfg.task, &mode, &corpus, &pool, &templates, &TermFrequencyCosine)
        .map_err(|e| stage("prompt")(e.to_string()))
}

pub fn backend(cfg: &RunConfig) -> Result<Box<dyn CompletionBackend>, CliError> {
    match cfg.backend {
        BackendKind::Replay => {
            let store = ReplayStore::load(cfg.replay_path()?).map_err(|e| stage("run")(e.to_string()))?;
            Ok(Box::new(store))
        }
        BackendKind::Live => {
            let transport = ReqwestTransport::new().map_err(|e| stage("run")(e.to_string()))?;
            let live = LiveBackend::new(cfg.client.clone(), Arc::new(transport))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(Box::new(live))
        }
    }
}

pub fn run(cfg: &RunConfig, prompts: &[RenderedPrompt], run_log: Option<&Path>) -> Result<Vec<BatchEntry>, CliError> {
    cfg.client.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let backend = backend(cfg)?;
    if let Some(log) = run_log {
        if let Some(dir) = log.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| stage("run")(format!("{}: {e}", dir.display())))?;
        }
    }
    let entries =
        run_batch(prompts, backend.as_ref(), &cfg.client, run_log).map_err(|e| stage("run")(e.to_string()))?;
    let failed = entries.iter().filter(|e| !e.is_ok()).count();
    if failed > 0 {
        eprintln!(
            "hent: run: {failed} of {} prompts failed; see the run log",
            entries.len()
        );
    }
    Ok(entries)
}

pub fn parse(entries: &[BatchEntry], rules: &PreambleRules) -> Vec<PredictionRecord> {
    entries
        .iter()
        .map(|e| PredictionRecord::from_outcome(&e.id, &parse_entry(e, rules)))
        .collect()
}

pub fn scored_units(
    cfg: &RunConfig,
    records: &[PredictionRecord],
    stage_name: &'static str,
) -> Result<Vec<ScoredUnit>, CliError> {
    let tau = cfg.threshold()?;
    let corpus = corpus(cfg.corpus_path()?, stage_name)?;
    let units = cfg.task.units(&corpus);
    let outcomes = records
        .iter()
        .map(|r| r.outcome().map(|o| (r.id.clone(), o)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(stage(stage_name))?;
    align(&units, outcomes, tau).map_err(|e| stage(stage_name)(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPairLine {
    pub gold: usize,
    pub pred: usize,
    pub ratio: f64,
    pub gold_url: String,
    pub pred_url: String,
}

/// Audit line for one unit's alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchLine {
    pub id: String,
    pub parse_status: String,
    pub pairs: Vec<MatchedPairLine>,
    pub missing: Vec<usize>,
    pub spurious: Vec<usize>,
}

pub fn match_lines(units: &[ScoredUnit]) -> Vec<MatchLine> {
    units
        .iter()
        .map(|u| {
            let preds = u.outcome.predictions();
            MatchLine {
                id: u.id.clone(),
                parse_status: u.outcome.status().to_string(),
                pairs: u
                    .matches
                    .pairs
                    .iter()
                    .map(|p| MatchedPairLine {
                        gold: p.gold,
                        pred: p.pred,
                        ratio: p.ratio,
                        gold_url: u.golds[p.gold].url.clone(),
                        pred_url: preds[p.pred].url.clone(),
                    })
                    .collect(),
                missing: u.matches.missing.clone(),
                spurious: u.matches.spurious.clone(),
            }
        })
        .collect()
}

pub fn eval(cfg: &RunConfig, units: &[ScoredUnit]) -> Result<EvalReport, CliError> {
    evaluate(&cfg.client.model, cfg.task.as_str(), cfg.mode_name(), units).map_err(|e| stage("eval")(e.to_string()))
}
