//! Greedy one-to-one alignment of predicted URLs to gold mentions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Mention;
use crate::output_parser::Prediction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("gold URL is empty")]
    EmptyGold,
    #[error("threshold must be in (0, 1], got {0}")]
    BadThreshold(String),
}

struct State {
    len: usize,
    link: Option<usize>,
    next: Vec<(char, usize)>,
}

impl State {
    fn get(&self, c: char) -> Option<usize> {
        self.next.iter().find(|(k, _)| *k == c).map(|&(_, v)| v)
    }

    fn set(&mut self, c: char, to: usize) {
        match self.next.iter_mut().find(|(k, _)| *k == c) {
            Some(slot) => slot.1 = to,
            None => self.next.push((c, to)),
        }
    }
}

/// Suffix automaton of `text`, used to find the longest substring of
/// another string that occurs in `text` in linear time.
struct SuffixAutomaton {
    states: Vec<State>,
}

impl SuffixAutomaton {
    fn new(text: &[char]) -> Self {
        let mut states = vec![State {
            len: 0,
            link: None,
            next: Vec::new(),
        }];
        let mut last = 0;
        for &c in text {
            let cur = states.len();
            states.push(State {
                len: states[last].len + 1,
                link: None,
                next: Vec::new(),
            });
            let mut p = Some(last);
            while let Some(pi) = p {
                if states[pi].get(c).is_some() {
                    break;
                }
                states[pi].set(c, cur);
                p = states[pi].link;
            }
            match p {
                None => states[cur].link = Some(0),
                Some(pi) => {
                    let q = states[pi].get(c).expect("transition exists");
                    if states[pi].len + 1 == states[q].len {
                        states[cur].link = Some(q);
                    } else {
                        let clone = states.len();
                        states.push(State {
                            len: states[pi].len + 1,
                            link: states[q].link,
                            next: states[q].next.clone(),
                        });
                        let mut p = Some(pi);
                        while let Some(pj) = p {
                            if states[pj].get(c) != Some(q) {
                                break;
                            }
                            states[pj].set(c, clone);
                            p = states[pj].link;
                        }
                        states[q].link = Some(clone);
                        states[cur].link = Some(clone);
                    }
                }
            }
            last = cur;
        }
        Self { states }
    }

    fn longest_common(&self, other: &[char]) -> usize {
        let (mut v, mut l, mut best) = (0usize, 0usize, 0usize);
        for &c in other {
            loop {
                if let Some(to) = self.states[v].get(c) {
                    v = to;
                    l += 1;
                    break;
                }
                match self.states[v].link {
                    Some(link) => {
                        v = link;
                        l = self.states[v].len;
                    }
                    None => {
                        l = 0;
                        break;
                    }
                }
            }
            best = best.max(l);
        }
        best
    }
}

/// Length in chars of the longest common contiguous substring.
pub fn longest_common_substring(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    SuffixAutomaton::new(&b).longest_common(&a)
}

/// Longest common substring length over the gold length, case-sensitive.
pub fn lcs_ratio(pred: &str, gold: &str) -> Result<f64, MatchError> {
    let n = gold.chars().count();
    if n == 0 {
        return Err(MatchError::EmptyGold);
    }
    Ok(longest_common_substring(pred, gold) as f64 / n as f64)
}

/// Minimum ratio for a pair to match. The default accepts any overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub const ANY_OVERLAP: Threshold = Threshold(f64::MIN_POSITIVE);

    pub fn new(tau: f64) -> Result<Self, MatchError> {
        if tau > 0.0 && tau <= 1.0 {
            Ok(Self(tau))
        } else {
            Err(MatchError::BadThreshold(tau.to_string()))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self::ANY_OVERLAP
    }
}

impl TryFrom<f64> for Threshold {
    type Error = MatchError;
    fn try_from(v: f64) -> Result<Self, MatchError> {
        Self::new(v)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub gold: usize,
    pub pred: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<Pair>,
    pub missing: Vec<usize>,
    pub spurious: Vec<usize>,
}

/// Greedy matching over raw URL strings. Golds are visited in order; each
/// takes the unmatched prediction with the highest ratio at or above `tau`,
/// the lowest index winning ties.
pub fn match_urls(preds: &[&str], golds: &[&str], tau: Threshold) -> Result<MatchResult, MatchError> {
    let mut taken = vec![false; preds.len()];
    let mut out = MatchResult::default();
    let pred_chars: Vec<Vec<char>> = preds.iter().map(|p| p.chars().collect()).collect();
    for (gi, gold) in golds.iter().enumerate() {
        let g: Vec<char> = gold.chars().collect();
        if g.is_empty() {
            return Err(MatchError::EmptyGold);
        }
        let sam = SuffixAutomaton::new(&g);
        let mut best: Option<(usize, f64)> = None;
        for (pi, p) in pred_chars.iter().enumerate() {
            if taken[pi] {
                continue;
            }
            let r = sam.longest_common(p) as f64 / g.len() as f64;
            if r > 0.0 && r >= tau.0 && best.is_none_or(|(_, b)| r > b) {
                best = Some((pi, r));
            }
        }
        match best {
            Some((pi, ratio)) => {
                taken[pi] = true;
                out.pairs.push(Pair {
                    gold: gi,
                    pred: pi,
                    ratio,
                });
            }
            None => out.missing.push(gi),
        }
    }
    out.spurious = (0..preds.len()).filter(|&i| !taken[i]).collect();
    Ok(out)
}

pub fn match_record(preds: &[Prediction], golds: &[Mention], tau: Threshold) -> Result<MatchResult, MatchError> {
    let p: Vec<&str> = preds.iter().map(|p| p.url.as_str()).collect();
    let g: Vec<&str> = golds.iter().map(|m| m.url.as_str()).collect();
    match_urls(&p, &g, tau)
}

/// Counts of matched-pair ratios in ten equal-width bins over (0, 1].
pub fn ratio_histogram<'a>(results: impl IntoIterator<Item = &'a MatchResult>) -> [usize; 10] {
    let mut bins = [0usize; 10];
    for r in results {
        for p in &r.pairs {
            let b = ((p.ratio * 10.0).ceil() as usize).clamp(1, 10) - 1;
            bins[b] += 1;
        }
    }
    bins
}
