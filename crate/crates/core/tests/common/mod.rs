//! Oracles and fixture helpers shared by the integration tests. Nothing
//! here calls into the library's matching or scoring code.
#![allow(dead_code)]

use std::path::PathBuf;

use hent::corpus::{load_corpus, Mention, UrlClass};
use hent::evaluator::{align, ScoredUnit};
use hent::matcher::Threshold;
use hent::output_parser::read_predictions;
use hent::prompting::PromptTask;
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn hent_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_hent"))
}

/// Longest common substring length by the full quadratic table.
pub fn dp_lcs(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    let mut best = 0;
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            if a[i - 1] == b[j - 1] {
                table[i][j] = table[i - 1][j - 1] + 1;
                best = best.max(table[i][j]);
            }
        }
    }
    best
}

pub fn dp_ratio(pred: &str, gold: &str) -> f64 {
    dp_lcs(pred, gold) as f64 / gold.chars().count() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleMatch {
    pub pairs: Vec<(usize, usize, f64)>,
    pub missing: Vec<usize>,
    pub spurious: Vec<usize>,
}

/// Step-by-step greedy: for each gold in order, rank the still-free
/// predictions by (ratio descending, index ascending) and take the head if
/// it clears the threshold.
pub fn oracle_match(preds: &[&str], golds: &[&str], tau: f64) -> OracleMatch {
    oracle_match_with(preds, golds, tau, dp_ratio)
}

pub fn oracle_match_with(preds: &[&str], golds: &[&str], tau: f64, ratio: impl Fn(&str, &str) -> f64) -> OracleMatch {
    let mut free: Vec<usize> = (0..preds.len()).collect();
    let mut out = OracleMatch {
        pairs: vec![],
        missing: vec![],
        spurious: vec![],
    };
    for (g, gold) in golds.iter().enumerate() {
        let mut ranked: Vec<(f64, usize)> = free.iter().map(|&p| (ratio(preds[p], gold), p)).collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        match ranked.first() {
            Some(&(r, p)) if r > 0.0 && r >= tau => {
                out.pairs.push((g, p, r));
                free.retain(|&x| x != p);
            }
            _ => out.missing.push(g),
        }
    }
    out.spurious = free;
    out
}

pub fn hand_units() -> Vec<ScoredUnit> {
    let corpus = load_corpus(&fixture("hand/corpus.jsonl")).unwrap();
    let records = read_predictions(&fixture("hand/predictions.jsonl")).unwrap();
    let outcomes = records.iter().map(|r| (r.id.clone(), r.outcome().unwrap())).collect();
    align(
        &PromptTask::ExtractClassify.units(&corpus),
        outcomes,
        Threshold::default(),
    )
    .unwrap()
}

/// Frozen hand-computed values: scheme, P, R, P(b), R(b).
pub fn hand_expected() -> Vec<(String, [f64; 4])> {
    std::fs::read_to_string(fixture("hand/expected.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), [1, 2, 3, 4].map(|i| f[i].parse().unwrap()))
        })
        .collect()
}

pub const FRAGMENTS: [&str; 6] = [
    "http://a.org/x",
    "http://a.org/x.zip",
    "https://b.net/",
    "ftp://c.io",
    "QQ",
    "x.zip",
];

pub fn random_class(rng: &mut impl Rng) -> UrlClass {
    UrlClass::ALL[rng.gen_range(0..4)]
}

pub fn random_label(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..6) {
        0 => "mystery".into(),
        _ => random_class(rng).snake_name().into(),
    }
}

pub fn mention(url: &str, label: UrlClass) -> Mention {
    Mention {
        url: url.into(),
        start: 0,
        end: url.chars().count(),
        label,
    }
}
