use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::llm_client::{BackendKind, ClientConfig};
use crate::matcher::Threshold;
use crate::prompting::{ExampleMode, PromptTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Static,
    Dynamic,
    Zero,
}

/// Everything needed to reproduce one run. Relative paths in a config file
/// are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub example_pool: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub preamble_rules: Option<PathBuf>,
    pub task: PromptTask,
    pub mode: ModeName,
    pub static_ids: Vec<String>,
    pub tau: Option<f64>,
    pub backend: BackendKind,
    pub replay: Option<PathBuf>,
    pub client: ClientConfig,
    pub out_dir: PathBuf,
    /// Seed for randomized fixture generation; recorded in manifests.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            example_pool: None,
            templates: None,
            preamble_rules: None,
            task: PromptTask::ExtractClassify,
            mode: ModeName::Static,
            static_ids: Vec::new(),
            tau: None,
            backend: BackendKind::Live,
            replay: None,
            client: ClientConfig::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.corpus,
            &mut cfg.example_pool,
            &mut cfg.templates,
            &mut cfg.preamble_rules,
            &mut cfg.replay,
        ] {
            resolve(base, p);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn corpus_path(&self) -> Result<&Path, CliError> {
        existing(self.corpus.as_deref(), "corpus")
    }

    /// The example pool, which must be a different file from the corpus.
    pub fn pool_path(&self) -> Result<&Path, CliError> {
        let pool = existing(self.example_pool.as_deref(), "example pool")?;
        let corpus = self.corpus_path()?;
        let same = match (fs::canonicalize(pool), fs::canonicalize(corpus)) {
            (Ok(a), Ok(b)) => a == b,
            _ => pool == corpus,
        };
        if same {
            return Err(CliError::Usage(
                "the example pool must be a different file from the evaluated corpus".into(),
            ));
        }
        Ok(pool)
    }

    pub fn replay_path(&self) -> Result<&Path, CliError> {
        existing(self.replay.as_deref(), "replay store")
    }

    pub fn example_mode(&self) -> Result<ExampleMode, CliError> {
        match self.mode {
            ModeName::Static => ExampleMode::fixed(self.static_ids.clone()).map_err(|e| CliError::Usage(e.to_string())),
            ModeName::Dynamic => Ok(ExampleMode::Dynamic),
            ModeName::Zero => Ok(ExampleMode::Zero),
        }
    }

    pub fn threshold(&self) -> Result<Threshold, CliError> {
        match self.tau {
            None => Ok(Threshold::default()),
            Some(t) => Threshold::new(t).map_err(|e| CliError::Usage(e.to_string())),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            ModeName::Static => "static",
            ModeName::Dynamic => "dynamic",
            ModeName::Zero => "zero",
        }
    }
}

fn existing<'a>(p: Option<&'a Path>, what: &str) -> Result<&'a Path, CliError> {
    let p = p.ok_or_else(|| CliError::Usage(format!("no {what} given")))?;
    if !p.exists() {
        return Err(CliError::Usage(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.json");
        fs::write(
            &cfg_path,
            r#"{"corpus": "data/c.jsonl", "mode": "dynamic", "task": "cl", "tau": 0.5}"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&cfg_path).unwrap();
        assert_eq!(cfg.corpus.unwrap(), dir.path().join("data/c.jsonl"));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
        assert_eq!(cfg.task, PromptTask::ClassifyOnly);
        assert_eq!(cfg.mode, ModeName::Dynamic);
    }

    #[test]
    fn rejects_unknown_fields_and_same_pool() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.json");
        fs::write(&cfg_path, r#"{"corpuz": "x"}"#).unwrap();
        assert!(matches!(RunConfig::load(&cfg_path), Err(CliError::Usage(_))));

        let c = dir.path().join("c.jsonl");
        fs::write(&c, "").unwrap();
        let cfg = RunConfig {
            corpus: Some(c.clone()),
            example_pool: Some(dir.path().join(".").join("c.jsonl")),
            ..Default::default()
        };
        assert!(matches!(cfg.pool_path(), Err(CliError::Usage(_))));
    }

    #[test]
    fn static_mode_needs_four_ids() {
        let cfg = RunConfig {
            static_ids: vec!["a".into()],
            ..Default::default()
        };
        assert!(cfg.example_mode().is_err());
        let cfg = RunConfig {
            tau: Some(0.0),
            ..Default::default()
        };
        assert!(cfg.threshold().is_err());
    }
}
