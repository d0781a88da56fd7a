//! URL extraction from README markdown.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::byte_to_char;

/// How a URL appeared in the markdown source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlKind {
    /// `[text](url)`
    Inline,
    /// `![alt](url)`; almost always `Other`.
    Image,
    /// `[label]: url`
    Reference,
    /// `<url>`
    Autolink,
    /// `href`/`src` attribute of embedded HTML.
    Html,
    /// Plain `http(s)://` token in running text.
    Bare,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedUrl {
    pub url: String,
    /// Char offsets into the source text.
    pub start: usize,
    pub end: usize,
    pub kind: UrlKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub skip_code_fences: bool,
    pub include_images: bool,
    pub include_html: bool,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            skip_code_fences: true,
            include_images: true,
            include_html: true,
        }
    }
}

impl ExtractConfig {
    /// Everything, fences included.
    pub fn all() -> Self {
        Self {
            skip_code_fences: false,
            include_images: true,
            include_html: true,
        }
    }
}

static INLINE_LINK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(!?)\[(?:[^\[\]\n]|\[[^\[\]\n]*\])*\]\([ \t]*<?([^\s()<>]*(?:\([^\s()<>]*\)[^\s()<>]*)*)>?(?:[ \t]+(?:"[^"\n]*"|'[^'\n]*'))?[ \t]*\)"#,
    )
    .unwrap()
});
static REFERENCE_DEF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^ {0,3}\[[^\]\n]+\]:[ \t]*<?([^\s<>]+)").unwrap());
static AUTOLINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<((?:https?|ftp)://[^<>\s]+)>").unwrap());
static HTML_ATTR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?i)<[a-z][^<>]*?\b(?:href|src)[ \t]*=[ \t]*["']([^"'\s<>]+)["']"#).unwrap());
static BARE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"(?i)(?:https?|ftp)://[^\s<>"'`\[\]{}|\\^]+"#).unwrap());
static FENCE_OPEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}(`{3,}|~{3,})").unwrap());

pub(crate) fn is_absolute_url(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    ["http://", "https://", "ftp://"]
        .iter()
        .any(|p| lower.starts_with(p) && lower.len() > p.len())
}

/// Removes trailing sentence punctuation from a bare URL token. A closing
/// bracket is kept only when the URL itself holds more matching openers.
pub fn trim_bare_url(token: &str) -> &str {
    let mut s = token;
    loop {
        let Some(last) = s.chars().last() else {
            return s;
        };
        let strip = match last {
            '.' | ',' | ';' | ':' | '!' | '?' | '*' => true,
            ')' => s.matches('(').count() < s.matches(')').count(),
            _ => false,
        };
        if !strip {
            return s;
        }
        s = &s[..s.len() - last.len_utf8()];
    }
}

/// Byte ranges of fenced code blocks, fence lines included. An unclosed
/// fence runs to the end of the text.
pub(crate) fn code_fence_ranges(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut open: Option<(usize, char, usize)> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        match open {
            None => {
                if let Some(m) = FENCE_OPEN.captures(body) {
                    let fence = m.get(1).unwrap().as_str();
                    let ch = fence.chars().next().unwrap();
                    // Backtick fences cannot carry backticks in the info string.
                    if ch == '`' && body[m.get(0).unwrap().end()..].contains('`') {
                        offset += line.len();
                        continue;
                    }
                    open = Some((offset, ch, fence.len()));
                }
            }
            Some((start, ch, len)) => {
                let t = body.trim_start_matches(' ');
                let run = t.chars().take_while(|&c| c == ch).count();
                if body.len() - t.len() <= 3 && run >= len && t[run..].trim().is_empty() {
                    out.push(start..offset + line.len());
                    open = None;
                }
            }
        }
        offset += line.len();
    }
    if let Some((start, _, _)) = open {
        out.push(start..text.len());
    }
    out
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

/// Byte-offset extraction; `extract_urls` converts to char offsets.
pub(crate) fn extract_byte_spans(text: &str, cfg: &ExtractConfig) -> Vec<(Range<usize>, UrlKind)> {
    let mut structured: Vec<(Range<usize>, UrlKind)> = Vec::new();

    for caps in INLINE_LINK.captures_iter(text) {
        let url = caps.get(2).unwrap();
        if !is_absolute_url(url.as_str()) {
            continue;
        }
        let kind = if caps.get(1).unwrap().as_str() == "!" {
            if !cfg.include_images {
                continue;
            }
            UrlKind::Image
        } else {
            UrlKind::Inline
        };
        structured.push((url.range(), kind));
    }
    for caps in REFERENCE_DEF.captures_iter(text) {
        let url = caps.get(1).unwrap();
        if is_absolute_url(url.as_str()) {
            structured.push((url.range(), UrlKind::Reference));
        }
    }
    for caps in AUTOLINK.captures_iter(text) {
        structured.push((caps.get(1).unwrap().range(), UrlKind::Autolink));
    }
    if cfg.include_html {
        for caps in HTML_ATTR.captures_iter(text) {
            let url = caps.get(1).unwrap();
            if is_absolute_url(url.as_str()) {
                structured.push((url.range(), UrlKind::Html));
            }
        }
    }
    structured.sort_by_key(|(r, _)| (r.start, r.end));

    let mut accepted: Vec<(Range<usize>, UrlKind)> = Vec::new();
    for cand in structured {
        if !accepted.iter().any(|(r, _)| overlaps(r, &cand.0)) {
            accepted.push(cand);
        }
    }

    // Bare tokens never override a structured span.
    for m in BARE.find_iter(text) {
        let trimmed = trim_bare_url(m.as_str());
        if !is_absolute_url(trimmed) {
            continue;
        }
        let range = m.start()..m.start() + trimmed.len();
        if accepted.iter().any(|(r, _)| overlaps(r, &range)) {
            continue;
        }
        if !cfg.include_images || !cfg.include_html {
            // A bare token inside a skipped image or tag is still skipped.
            if inside_excluded_markup(text, &range, cfg) {
                continue;
            }
        }
        accepted.push((range, UrlKind::Bare));
    }

    if cfg.skip_code_fences {
        let fences = code_fence_ranges(text);
        accepted.retain(|(r, _)| !fences.iter().any(|f| overlaps(f, r)));
    }
    accepted.sort_by_key(|(r, _)| r.start);
    accepted.dedup_by(|a, b| a.0 == b.0);
    accepted
}

fn inside_excluded_markup(text: &str, range: &Range<usize>, cfg: &ExtractConfig) -> bool {
    if !cfg.include_images {
        for caps in INLINE_LINK.captures_iter(text) {
            if caps.get(1).unwrap().as_str() == "!" && caps.get(2).unwrap().range() == *range {
                return true;
            }
        }
    }
    if !cfg.include_html {
        for caps in HTML_ATTR.captures_iter(text) {
            if caps.get(1).unwrap().range() == *range {
                return true;
            }
        }
    }
    false
}

/// Finds outgoing URLs in markdown: inline links, image links, reference
/// definitions, autolinks, HTML `href`/`src` attributes and bare tokens.
/// Results are in document order with strictly increasing, disjoint spans.
pub fn extract_urls(text: &str, cfg: &ExtractConfig) -> Vec<ExtractedUrl> {
    let spans = extract_byte_spans(text, cfg);
    let mut out = Vec::with_capacity(spans.len());
    // Incremental byte→char conversion, spans are sorted.
    let (mut last_byte, mut last_char) = (0usize, 0usize);
    for (range, kind) in spans {
        let start = last_char + byte_to_char(&text[last_byte..], range.start - last_byte);
        let url = &text[range.clone()];
        let end = start + url.chars().count();
        out.push(ExtractedUrl {
            url: url.to_string(),
            start,
            end,
            kind,
        });
        last_byte = range.end;
        last_char = end;
    }
    out
}
