//! Command-line front end. Each stage reads and writes JSONL files so any
//! stage can be rerun on its own; `pipeline` chains them.

mod config;
mod io;
mod stages;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::evaluator::{render_csv, render_parse_ratio_table, render_text, EvalReport};
use crate::harvester::{self, ContextConfig, ExtractConfig, FetchConfig, RepoRef};
use crate::http::ReqwestTransport;
use crate::llm_client::{BackendKind, BatchEntry};
use crate::output_parser::PredictionRecord;
use crate::prompting::{PromptTask, RenderedPrompt};

pub use config::{ModeName, RunConfig};
pub use io::write_atomic;
pub use stages::{MatchLine, MatchedPairLine};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Stage { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hent",
    version,
    about = "Find and classify dataset and software URLs in README text with LLM prompting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum BackendArg {
    Live,
    Replay,
}

/// Settings shared by the stages; each flag overrides the config file.
#[derive(Debug, Args, Default)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Labeled records that few-shot examples are drawn from.
    #[arg(long)]
    example_pool: Option<PathBuf>,
    /// Directory holding ecl.prompt, ecl.example, cl.prompt, cl.example.
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    preamble_rules: Option<PathBuf>,
    /// e+cl or cl.
    #[arg(long)]
    task: Option<PromptTask>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    /// Comma-separated ids of the four static examples.
    #[arg(long, value_delimiter = ',')]
    static_ids: Option<Vec<String>>,
    /// Minimum match ratio in (0, 1].
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// JSONL replay store of recorded outputs.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:ident => $($target:tt)+) => {
                if let Some(v) = &self.$field {
                    $($target)+ = v.clone().into();
                }
            };
        }
        set!(corpus => cfg.corpus);
        set!(example_pool => cfg.example_pool);
        set!(templates => cfg.templates);
        set!(preamble_rules => cfg.preamble_rules);
        set!(task => cfg.task);
        set!(mode => cfg.mode);
        set!(static_ids => cfg.static_ids);
        set!(tau => cfg.tau);
        set!(replay => cfg.replay);
        set!(out_dir => cfg.out_dir);
        set!(model => cfg.client.model);
        set!(endpoint => cfg.client.endpoint);
        set!(max_in_flight => cfg.client.max_in_flight);
        set!(max_retries => cfg.client.retry.max_retries);
        set!(temperature => cfg.client.temperature);
        set!(max_tokens => cfg.client.max_tokens);
        if let Some(ms) = self.timeout_ms {
            cfg.client.timeout = std::time::Duration::from_millis(ms);
        }
        if let Some(b) = self.backend {
            cfg.backend = match b {
                BackendArg::Live => BackendKind::Live,
                BackendArg::Replay => BackendKind::Replay,
            };
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch READMEs and write unlabeled context records.
    Harvest {
        /// File with one repository per line (owner/name, host/owner/name or URL).
        #[arg(long)]
        repos: PathBuf,
        /// Read `<owner>__<name>.md` files from this directory instead of the network.
        #[arg(long)]
        readme_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 80)]
        min_chars: usize,
    },
    /// Render one prompt per evaluation unit.
    Prompt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Send prompts to the backend and record raw outputs.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        prompts: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        run_log: Option<PathBuf>,
    },
    /// Turn raw outputs into predictions.
    Parse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        raw: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Align predictions with gold mentions and dump the matches.
    Match {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions and write an evaluation report.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// prompt, run, parse, match and eval in one go.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
    /// Combine evaluation reports into CSV and text tables.
    Report {
        #[arg(long, required = true, num_args = 1..)]
        evals: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        text: Option<PathBuf>,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hent: {e}");
            e.exit_code()
        }
    }
}

fn stage_err(stage: &'static str) -> impl Fn(String) -> CliError {
    move |message| CliError::Stage { stage, message }
}

fn write(stage: &'static str, path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents.as_bytes()).map_err(|e| stage_err(stage)(format!("{}: {e}", path.display())))
}

fn read<T: serde::de::DeserializeOwned>(stage: &'static str, path: &Path) -> Result<Vec<T>, CliError> {
    io::read_jsonl(path).map_err(stage_err(stage))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    template_version: String,
    preamble_rules_sha256: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

/// Records the config snapshot, template version and input/output hashes
/// next to a stage's outputs.
fn write_manifest(
    command: &'static str,
    cfg: &RunConfig,
    dir: &Path,
    inputs: &[(&str, &Path)],
    outputs: &[&Path],
) -> Result<(), CliError> {
    let err = stage_err("manifest");
    let rules_sha = match &cfg.preamble_rules {
        Some(p) => io::file_sha256(p).map_err(&err)?,
        None => io::sha256_hex(include_str!("../../data/preamble_rules.json").as_bytes()),
    };
    let mut ins = BTreeMap::new();
    for (name, p) in inputs {
        ins.insert(name.to_string(), io::file_sha256(p).map_err(&err)?);
    }
    let mut outs = BTreeMap::new();
    for p in outputs {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        outs.insert(name, io::file_sha256(p).map_err(&err)?);
    }
    let m = Manifest {
        tool: "hent",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        template_version: stages::templates(cfg)?.version(),
        preamble_rules_sha256: rules_sha,
        inputs: ins,
        outputs: outs,
    };
    write("manifest", &dir.join(format!("manifest-{command}.json")), &pretty(&m))
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Harvest {
            repos,
            readme_dir,
            out,
            min_chars,
        } => harvest(&repos, readme_dir.as_deref(), &out, min_chars),
        Command::Prompt { common, out } => {
            let cfg = common.resolve()?;
            let out = out.unwrap_or_else(|| cfg.out_dir.join("prompts.jsonl"));
            let prompts = stages::prompts(&cfg)?;
            write("prompt", &out, &io::to_jsonl(&prompts))?;
            write_manifest(
                "prompt",
                &cfg,
                &parent_dir(&out),
                &[("corpus", cfg.corpus_path()?), ("example_pool", cfg.pool_path()?)],
                &[&out],
            )
        }
        Command::Run {
            common,
            prompts,
            out,
            run_log,
        } => {
            let cfg = common.resolve()?;
            let prompts_path = prompts.unwrap_or_else(|| cfg.out_dir.join("prompts.jsonl"));
            let out = out.unwrap_or_else(|| cfg.out_dir.join("raw_outputs.jsonl"));
            let log = run_log.unwrap_or_else(|| parent_dir(&out).join("run_log.jsonl"));
            let prompts: Vec<RenderedPrompt> = read("run", &prompts_path)?;
            let entries = stages::run(&cfg, &prompts, Some(&log))?;
            write("run", &out, &io::to_jsonl(&entries))?;
            let mut inputs = vec![("prompts", prompts_path.as_path())];
            if cfg.backend == BackendKind::Replay {
                inputs.push(("replay", cfg.replay_path()?));
            }
            write_manifest("run", &cfg, &parent_dir(&out), &inputs, &[&out])
        }
        Command::Parse { common, raw, out } => {
            let cfg = common.resolve()?;
            let raw = raw.unwrap_or_else(|| cfg.out_dir.join("raw_outputs.jsonl"));
            let out = out.unwrap_or_else(|| cfg.out_dir.join("predictions.jsonl"));
            let entries: Vec<BatchEntry> = read("parse", &raw)?;
            let rules = stages::rules(cfg.preamble_rules.as_deref())?;
            write("parse", &out, &io::to_jsonl(&stages::parse(&entries, &rules)))?;
            write_manifest(
                "parse",
                &cfg,
                &parent_dir(&out),
                &[("raw_outputs", raw.as_path())],
                &[&out],
            )
        }
        Command::Match {
            common,
            predictions,
            out,
        } => {
            let cfg = common.resolve()?;
            let preds = predictions.unwrap_or_else(|| cfg.out_dir.join("predictions.jsonl"));
            let out = out.unwrap_or_else(|| cfg.out_dir.join("matches.jsonl"));
            let records: Vec<PredictionRecord> = read("match", &preds)?;
            let units = stages::scored_units(&cfg, &records, "match")?;
            write("match", &out, &io::to_jsonl(&stages::match_lines(&units)))?;
            write_manifest(
                "match",
                &cfg,
                &parent_dir(&out),
                &[("corpus", cfg.corpus_path()?), ("predictions", preds.as_path())],
                &[&out],
            )
        }
        Command::Eval {
            common,
            predictions,
            out,
        } => {
            let cfg = common.resolve()?;
            let preds = predictions.unwrap_or_else(|| cfg.out_dir.join("predictions.jsonl"));
            let out = out.unwrap_or_else(|| cfg.out_dir.join("eval.json"));
            let records: Vec<PredictionRecord> = read("eval", &preds)?;
            let units = stages::scored_units(&cfg, &records, "eval")?;
            let report = stages::eval(&cfg, &units)?;
            write("eval", &out, &pretty(&report))?;
            write_manifest(
                "eval",
                &cfg,
                &parent_dir(&out),
                &[("corpus", cfg.corpus_path()?), ("predictions", preds.as_path())],
                &[&out],
            )?;
            print!("{}", render_text(std::slice::from_ref(&report)));
            Ok(())
        }
        Command::Pipeline { common } => pipeline(&common.resolve()?),
        Command::Report { evals, csv, text } => {
            let mut reports = Vec::new();
            for p in &evals {
                let body = fs::read_to_string(p).map_err(|e| stage_err("report")(format!("{}: {e}", p.display())))?;
                let r: EvalReport =
                    serde_json::from_str(&body).map_err(|e| stage_err("report")(format!("{}: {e}", p.display())))?;
                reports.push(r);
            }
            let table = report_text(&reports);
            if let Some(p) = csv {
                write("report", &p, &render_csv(&reports))?;
            }
            if let Some(p) = text {
                write("report", &p, &table)?;
            }
            print!("{table}");
            Ok(())
        }
    }
}

fn report_text(reports: &[EvalReport]) -> String {
    format!("{}{}", render_text(reports), render_parse_ratio_table(reports))
}

fn pipeline(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = &cfg.out_dir;
    let rules = stages::rules(cfg.preamble_rules.as_deref())?;
    let prompts = stages::prompts(cfg)?;
    let paths = |name: &str| dir.join(name);

    write("prompt", &paths("prompts.jsonl"), &io::to_jsonl(&prompts))?;
    let entries = stages::run(cfg, &prompts, Some(&paths("run_log.jsonl")))?;
    write("run", &paths("raw_outputs.jsonl"), &io::to_jsonl(&entries))?;
    let records = stages::parse(&entries, &rules);
    write("parse", &paths("predictions.jsonl"), &io::to_jsonl(&records))?;
    let units = stages::scored_units(cfg, &records, "match")?;
    write(
        "match",
        &paths("matches.jsonl"),
        &io::to_jsonl(&stages::match_lines(&units)),
    )?;
    let report = stages::eval(cfg, &units)?;
    write("eval", &paths("eval.json"), &pretty(&report))?;
    let reports = [report];
    write("report", &paths("report.csv"), &render_csv(&reports))?;
    let table = report_text(&reports);
    write("report", &paths("report.txt"), &table)?;

    let mut inputs = vec![("corpus", cfg.corpus_path()?), ("example_pool", cfg.pool_path()?)];
    if cfg.backend == BackendKind::Replay {
        inputs.push(("replay", cfg.replay_path()?));
    }
    let outs: Vec<PathBuf> = [
        "prompts.jsonl",
        "raw_outputs.jsonl",
        "predictions.jsonl",
        "matches.jsonl",
        "eval.json",
        "report.csv",
        "report.txt",
    ]
    .iter()
    .map(|n| paths(n))
    .collect();
    let out_refs: Vec<&Path> = outs.iter().map(PathBuf::as_path).collect();
    write_manifest("pipeline", cfg, dir, &inputs, &out_refs)?;
    print!("{table}");
    Ok(())
}

fn harvest(repos: &Path, readme_dir: Option<&Path>, out: &Path, min_chars: usize) -> Result<(), CliError> {
    let err = stage_err("harvest");
    let list = fs::read_to_string(repos).map_err(|e| err(format!("{}: {e}", repos.display())))?;
    let refs = list
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<RepoRef>().map_err(|e| CliError::Usage(format!("{l}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let readmes: Vec<Result<String, String>> = match readme_dir {
        Some(dir) => refs
            .iter()
            .map(|r| {
                let p = dir.join(format!("{}__{}.md", r.owner, r.name));
                fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))
            })
            .collect(),
        None => {
            let transport = ReqwestTransport::new().map_err(|e| err(e.to_string()))?;
            harvester::fetch_all(&refs, &FetchConfig::default(), &transport)
                .into_iter()
                .map(|r| r.map_err(|e| e.to_string()))
                .collect()
        }
    };
    let ctx = ContextConfig { min_chars };
    let mut records = Vec::new();
    let mut failures = 0;
    for (r, md) in refs.iter().zip(readmes) {
        let harvested = md.and_then(|md| {
            harvester::harvest_markdown(&r.canonical(), &md, &ExtractConfig::default(), &ctx).map_err(|e| e.to_string())
        });
        match harvested {
            Ok(recs) => records.extend(recs),
            Err(e) => {
                failures += 1;
                eprintln!("hent: harvest: {}: {e}", r.canonical());
            }
        }
    }
    write("harvest", out, &io::to_jsonl(&records))?;
    if failures > 0 && failures == refs.len() {
        return Err(err(format!("all {failures} repositories failed")));
    }
    Ok(())
}
