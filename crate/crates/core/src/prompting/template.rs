use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{PromptError, PromptTask};

/// File names expected in a template directory.
pub const TEMPLATE_FILES: [&str; 4] = ["ecl.prompt", "ecl.example", "cl.prompt", "cl.example"];

/// Prompt and per-example templates for both tasks. Placeholders are
/// written `{{{NAME}}}`; inner whitespace is ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    ecl_prompt: String,
    ecl_example: String,
    cl_prompt: String,
    cl_example: String,
}

impl Templates {
    pub fn builtin() -> Self {
        Self {
            ecl_prompt: include_str!("../../data/templates/ecl.prompt").into(),
            ecl_example: include_str!("../../data/templates/ecl.example").into(),
            cl_prompt: include_str!("../../data/templates/cl.prompt").into(),
            cl_example: include_str!("../../data/templates/cl.example").into(),
        }
    }

    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name))
                .map_err(|e| PromptError::Template(format!("{}: {e}", dir.join(name).display())))
        };
        Ok(Self {
            ecl_prompt: read(TEMPLATE_FILES[0])?,
            ecl_example: read(TEMPLATE_FILES[1])?,
            cl_prompt: read(TEMPLATE_FILES[2])?,
            cl_example: read(TEMPLATE_FILES[3])?,
        })
    }

    /// Short content hash identifying this template set.
    pub fn version(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.ecl_prompt, &self.ecl_example, &self.cl_prompt, &self.cl_example] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        let digest = h.finalize();
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub(crate) fn fill_prompt(&self, task: PromptTask, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let t = match task {
            PromptTask::ExtractClassify => &self.ecl_prompt,
            PromptTask::ClassifyOnly => &self.cl_prompt,
        };
        fill(t, values)
    }

    pub(crate) fn fill_example(&self, task: PromptTask, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let t = match task {
            PromptTask::ExtractClassify => &self.ecl_example,
            PromptTask::ClassifyOnly => &self.cl_example,
        };
        fill(t, values)
    }
}

/// Single-pass substitution; inserted values are never rescanned.
fn fill(template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(open) = rest.find("{{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 3..];
        let close = after
            .find("}}}")
            .ok_or_else(|| PromptError::Template("unterminated placeholder".into()))?;
        let name = after[..close].trim();
        let value = values
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::Template(format!("unknown placeholder `{name}`")))?;
        out.push_str(value);
        rest = &after[close + 3..];
    }
    out.push_str(rest);
    Ok(out)
}
