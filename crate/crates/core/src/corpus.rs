//! Gold-standard data model: the URL label taxonomy, annotated context
//! records, and the JSONL corpus format.
//!
//! One corpus line holds one context text with the URLs annotated in it:
//!
//! ```json
//! {"id": "r1", "repo": "github.com/o/n", "context": "...", "mentions": [{"url": "...", "start": 8, "end": 52, "label": "DatasetLandingPage"}]}
//! ```
//!
//! Offsets count Unicode scalar values, not bytes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four-way URL taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UrlClass {
    DatasetDirectLink,
    DatasetLandingPage,
    Software,
    Other,
}

impl UrlClass {
    pub const ALL: [UrlClass; 4] = [
        UrlClass::DatasetDirectLink,
        UrlClass::DatasetLandingPage,
        UrlClass::Software,
        UrlClass::Other,
    ];

    /// Name written to corpus files.
    pub fn canonical_name(self) -> &'static str {
        match self {
            UrlClass::DatasetDirectLink => "DatasetDirectLink",
            UrlClass::DatasetLandingPage => "DatasetLandingPage",
            UrlClass::Software => "Software",
            UrlClass::Other => "Other",
        }
    }

    /// Underscore spelling used in few-shot example outputs.
    pub fn snake_name(self) -> &'static str {
        match self {
            UrlClass::DatasetDirectLink => "dataset_direct_link",
            UrlClass::DatasetLandingPage => "dataset_landing_page",
            UrlClass::Software => "software",
            UrlClass::Other => "other",
        }
    }

    /// Dataset-related classes collapse to `true` in the binary setting.
    pub fn is_dataset(self) -> bool {
        matches!(self, UrlClass::DatasetDirectLink | UrlClass::DatasetLandingPage)
    }

    fn aliases(self) -> &'static [&'static str] {
        // Keys are already stripped of separators and casefolded.
        match self {
            UrlClass::DatasetDirectLink => &[
                "datasetdirectlink",
                "directlink",
                "datasetdownload",
                "datasetdownloadlink",
                "datasetfile",
            ],
            UrlClass::DatasetLandingPage => &["datasetlandingpage", "landingpage", "datasetpage", "datasetindex"],
            UrlClass::Software => &["software", "softwarelink", "code", "sourcecode"],
            UrlClass::Other => &["other", "others"],
        }
    }
}

impl fmt::Display for UrlClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

impl FromStr for UrlClass {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_label(s)
            .class()
            .ok_or_else(|| CorpusError::UnknownLabel(s.to_string()))
    }
}

/// Result of normalizing a free-form label string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Known(UrlClass),
    Unknown,
}

impl Label {
    pub fn class(self) -> Option<UrlClass> {
        match self {
            Label::Known(c) => Some(c),
            Label::Unknown => None,
        }
    }
}

impl From<UrlClass> for Label {
    fn from(c: UrlClass) -> Self {
        Label::Known(c)
    }
}

fn label_key(raw: &str) -> String {
    raw.chars()
        .filter(|c| !matches!(c, '_' | '-' | ' ') && !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Maps a raw label to a class, ignoring case and `_`/`-`/space separators.
/// Strings that match no alias map to [`Label::Unknown`].
pub fn normalize_label(raw: &str) -> Label {
    let key = label_key(raw);
    if key.is_empty() {
        return Label::Unknown;
    }
    UrlClass::ALL
        .into_iter()
        .find(|c| c.aliases().contains(&key.as_str()))
        .map_or(Label::Unknown, Label::Known)
}

/// Binary collapse: is the label dataset-related? `Unknown` is rejected.
pub fn binary_label(label: Label) -> Result<bool, CorpusError> {
    match label {
        Label::Known(c) => Ok(c.is_dataset()),
        Label::Unknown => Err(CorpusError::UnknownLabel("<unknown>".into())),
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("record `{id}`: {violation}")]
    Invariant { id: String, violation: String },
    #[error("unrecognized label `{0}`")]
    UnknownLabel(String),
}

/// One annotated URL occurrence. `start..end` are char offsets into the
/// owning record's context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub url: String,
    pub start: usize,
    pub end: usize,
    #[serde(with = "class_name")]
    pub label: UrlClass,
}

mod class_name {
    use super::UrlClass;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &UrlClass, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(c.canonical_name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<UrlClass, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub id: String,
    pub repo: String,
    pub context: String,
    pub mentions: Vec<Mention>,
}

impl ContextRecord {
    /// Checks the per-record invariants, naming the first one violated.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |violation: String| {
            Err(CorpusError::Invariant {
                id: self.id.clone(),
                violation,
            })
        };
        if self.id.is_empty() {
            return fail("id is empty".into());
        }
        if self.mentions.is_empty() {
            return fail("mentions must be non-empty".into());
        }
        let chars: Vec<char> = self.context.chars().collect();
        let mut prev_end = 0;
        for (i, m) in self.mentions.iter().enumerate() {
            if m.start >= m.end || m.end > chars.len() {
                return fail(format!(
                    "mention {i}: span [{}, {}) out of bounds for context of length {}",
                    m.start,
                    m.end,
                    chars.len()
                ));
            }
            if i > 0 && m.start < prev_end {
                return fail(format!(
                    "mention {i}: span [{}, {}) overlaps or precedes the previous mention",
                    m.start, m.end
                ));
            }
            let surface: String = chars[m.start..m.end].iter().collect();
            if surface != m.url {
                return fail(format!(
                    "mention {i}: context[{}..{}] is `{surface}`, not the url `{}`",
                    m.start, m.end, m.url
                ));
            }
            prev_end = m.end;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<ContextRecord>,
}

impl Corpus {
    pub fn new(records: Vec<ContextRecord>) -> Result<Self, CorpusError> {
        let corpus = Corpus { records };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for r in &self.records {
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::Invariant {
                    id: r.id.clone(),
                    violation: "duplicate record id".into(),
                });
            }
        }
        Ok(())
    }

    pub fn mention_count(&self) -> usize {
        self.records.iter().map(|r| r.mentions.len()).sum()
    }

    /// Number of distinct repository references.
    pub fn repo_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.repo.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn get(&self, id: &str) -> Option<&ContextRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Serializes as JSONL, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())
    }
}

/// Parses JSONL corpus text; `origin` only labels error messages.
pub fn parse_corpus(text: &str, origin: &Path) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ContextRecord = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            path: origin.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Corpus::new(records)
}

/// Loads and validates a JSONL corpus file.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text, path)
}

/// Mention counts per class; every class is present, zero included.
pub fn class_distribution(corpus: &Corpus) -> BTreeMap<UrlClass, usize> {
    let mut dist: BTreeMap<UrlClass, usize> = UrlClass::ALL.iter().map(|&c| (c, 0)).collect();
    for m in corpus.records.iter().flat_map(|r| &r.mentions) {
        *dist.get_mut(&m.label).expect("all classes seeded") += 1;
    }
    dist
}

/// Char offset to byte offset within `s`; `None` when past the end.
pub(crate) fn char_to_byte(s: &str, char_idx: usize) -> Option<usize> {
    if char_idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in s.char_indices() {
        if count == char_idx {
            return Some(b);
        }
        count += 1;
    }
    (count == char_idx).then_some(s.len())
}

pub(crate) fn byte_to_char(s: &str, byte_idx: usize) -> usize {
    s[..byte_idx].chars().count()
}
