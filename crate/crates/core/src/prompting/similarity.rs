use std::collections::BTreeMap;

/// Text similarity used to rank candidate few-shot examples.
pub trait Similarity: Sync {
    /// Score in `[0, 1]`; must be symmetric.
    fn score(&self, a: &str, b: &str) -> f64;
}

/// Cosine similarity over term-frequency vectors of casefolded
/// alphanumeric tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermFrequencyCosine;

pub(crate) fn term_frequencies(text: &str) -> BTreeMap<String, u64> {
    let mut tf = BTreeMap::new();
    for token in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let folded: String = token.chars().flat_map(char::to_lowercase).collect();
        *tf.entry(folded).or_insert(0) += 1;
    }
    tf
}

pub(crate) fn cosine(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> f64 {
    let norm = |v: &BTreeMap<String, u64>| v.values().map(|&c| c * c).sum::<u64>();
    let (na, nb) = (norm(a), norm(b));
    if na == 0 || nb == 0 {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: u64 = small.iter().filter_map(|(t, &c)| large.get(t).map(|&d| c * d)).sum();
    // Integer products keep identical multisets at exactly 1.0.
    (dot as f64 / ((na as f64) * (nb as f64)).sqrt()).clamp(0.0, 1.0)
}

impl Similarity for TermFrequencyCosine {
    fn score(&self, a: &str, b: &str) -> f64 {
        cosine(&term_frequencies(a), &term_frequencies(b))
    }
}

/// Shorthand for [`TermFrequencyCosine`].
pub fn similarity(a: &str, b: &str) -> f64 {
    TermFrequencyCosine.score(a, b)
}
