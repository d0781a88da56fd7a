//! Context windows around extracted URLs.
//!
//! A context is the markdown block holding the URL (paragraph, list item,
//! table row, heading, or code block) flattened to plain text. Link targets
//! stay inline next to their anchor text. Blocks shorter than
//! [`ContextConfig::min_chars`] grow by alternately pulling in the previous
//! and the next block.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::extract::{code_fence_ranges, extract_byte_spans, is_absolute_url, ExtractConfig};
use super::HarvestError;
use crate::corpus::char_to_byte;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextConfig {
    pub min_chars: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        Self { min_chars: 80 }
    }
}

/// Plain-text context with the URL span recomputed against it (char offsets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltContext {
    pub context: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Paragraph,
    ListItem,
    TableRow,
    Heading,
    Code,
}

#[derive(Debug, Clone)]
struct Block {
    range: Range<usize>,
    kind: BlockKind,
}

static LIST_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[ \t]*(?:[-*+]|\d{1,9}[.)])(?:[ \t]+|$)").unwrap());
static HEADING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}#{1,6}(?:[ \t]+|$)").unwrap());
static TABLE_ROW: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[ \t]*\|").unwrap());
static SETEXT_UNDERLINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}(?:=+|-+)[ \t]*$").unwrap());

static LINE_PREFIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^(?:[ \t]*>[ \t]?)*(?: {0,3}#{1,6}[ \t]+|[ \t]*(?:[-*+]|\d{1,9}[.)])[ \t]+(?:\[[ xX]\][ \t]+)?)?")
        .unwrap()
});
static INLINE_LINK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(!?\[)((?:[^\[\]\n]|\[[^\[\]\n]*\])*)(\]\([ \t]*<?)([^\s()<>]*(?:\([^\s()<>]*\)[^\s()<>]*)*)(>?(?:[ \t]+(?:"[^"\n]*"|'[^'\n]*'))?[ \t]*\))"#,
    )
    .unwrap()
});
static REF_LINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\[)((?:[^\[\]\n])*)(\]\[[^\[\]\n]*\])").unwrap());
static REF_DEF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^( {0,3}\[)([^\]\n]+)(\]):[ \t]*(<?)[^\s<>]+(>?)").unwrap());
static AUTOLINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(<)[a-zA-Z][a-zA-Z0-9+.-]*://[^<>\s]+(>)").unwrap());
static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"</?[a-zA-Z][^<>]*>|<!--[\s\S]*?-->").unwrap());
static MARKUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\*\*|~~|`+|\|").unwrap());

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Splits markdown into blocks, in document order.
fn split_blocks(text: &str) -> Vec<Block> {
    let fences = code_fence_ranges(text);
    let mut blocks: Vec<Block> = Vec::new();
    let mut current: Option<Block> = None;
    let mut offset = 0;
    let mut fence_iter = fences.iter().peekable();

    let flush = |current: &mut Option<Block>, blocks: &mut Vec<Block>| {
        if let Some(b) = current.take() {
            blocks.push(b);
        }
    };

    let mut lines = text.split_inclusive('\n').peekable();
    while let Some(line) = lines.next() {
        let start = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        let content_end = start + body.len();

        if let Some(f) = fence_iter.peek() {
            if f.start == start {
                flush(&mut current, &mut blocks);
                let f = fence_iter.next().unwrap().clone();
                // Consume the remaining lines of the fence.
                while offset < f.end {
                    match lines.next() {
                        Some(l) => offset += l.len(),
                        None => break,
                    }
                }
                let end = text[f.clone()].trim_end_matches(['\n', '\r']).len() + f.start;
                blocks.push(Block {
                    range: f.start..end,
                    kind: BlockKind::Code,
                });
                continue;
            }
        }

        if is_blank(body) {
            flush(&mut current, &mut blocks);
            continue;
        }
        let kind = if HEADING.is_match(body) {
            Some(BlockKind::Heading)
        } else if TABLE_ROW.is_match(body) {
            Some(BlockKind::TableRow)
        } else if LIST_MARKER.is_match(body) && !SETEXT_UNDERLINE.is_match(body) {
            Some(BlockKind::ListItem)
        } else {
            None
        };
        match kind {
            Some(BlockKind::Heading) | Some(BlockKind::TableRow) => {
                flush(&mut current, &mut blocks);
                blocks.push(Block {
                    range: start..content_end,
                    kind: kind.unwrap(),
                });
            }
            Some(BlockKind::ListItem) => {
                flush(&mut current, &mut blocks);
                current = Some(Block {
                    range: start..content_end,
                    kind: BlockKind::ListItem,
                });
            }
            _ => {
                if SETEXT_UNDERLINE.is_match(body) {
                    if let Some(mut b) = current.take() {
                        if b.kind == BlockKind::Paragraph {
                            b.kind = BlockKind::Heading;
                        }
                        blocks.push(b);
                    }
                    continue;
                }
                match current.as_mut() {
                    Some(b) => b.range.end = content_end,
                    None => {
                        current = Some(Block {
                            range: start..content_end,
                            kind: BlockKind::Paragraph,
                        })
                    }
                }
            }
        }
    }
    flush(&mut current, &mut blocks);
    blocks
}

/// Plain text of one block plus the char span each protected URL occupies
/// in it. `protected` are byte ranges relative to the block source.
fn flatten_block(src: &str, kind: BlockKind, protected: &[Range<usize>]) -> (String, Vec<Range<usize>>) {
    let mut edits: Vec<(Range<usize>, &'static str)> = Vec::new();

    if kind == BlockKind::Code {
        // Drop the fence lines, keep the code verbatim.
        let first_nl = src.find('\n').map_or(src.len(), |i| i + 1);
        edits.push((0..first_nl, ""));
        if let Some(last_nl) = src.rfind('\n') {
            if last_nl + 1 > first_nl && FENCE_LINE.is_match(&src[last_nl + 1..]) {
                edits.push((last_nl..src.len(), ""));
            }
        }
    } else {
        for caps in INLINE_LINK.captures_iter(src) {
            let target = caps.get(4).unwrap();
            let open = caps.get(1).unwrap().range();
            let mid = caps.get(3).unwrap().range();
            let close = caps.get(5).unwrap().range();
            edits.push((open, ""));
            if is_absolute_url(target.as_str()) {
                edits.push((mid, " "));
                edits.push((close, ""));
            } else {
                edits.push((mid.start..close.end, ""));
            }
        }
        for caps in REF_DEF.captures_iter(src) {
            for g in [1, 3, 4, 5] {
                let r = caps.get(g).unwrap().range();
                if !r.is_empty() {
                    edits.push((r, ""));
                }
            }
        }
        for caps in REF_LINK.captures_iter(src) {
            edits.push((caps.get(1).unwrap().range(), ""));
            edits.push((caps.get(3).unwrap().range(), ""));
        }
        for caps in AUTOLINK.captures_iter(src) {
            edits.push((caps.get(1).unwrap().range(), ""));
            edits.push((caps.get(2).unwrap().range(), ""));
        }
        for m in HTML_TAG.find_iter(src) {
            edits.push((m.range(), " "));
        }
        for m in LINE_PREFIX.find_iter(src) {
            if !m.is_empty() {
                edits.push((m.range(), " "));
            }
        }
        for m in MARKUP.find_iter(src) {
            edits.push((m.range(), if m.as_str() == "|" { " " } else { "" }));
        }
    }

    // Edits that touch a protected URL are split around it, so tags holding
    // an `href` still reduce to the bare URL.
    let mut pieces: Vec<(Range<usize>, &'static str)> = Vec::new();
    for (range, repl) in edits {
        let mut segments = vec![range];
        for p in protected {
            segments = segments
                .into_iter()
                .flat_map(|s| {
                    if s.start < p.end && p.start < s.end {
                        let mut out = Vec::new();
                        if s.start < p.start {
                            out.push(s.start..p.start);
                        }
                        if p.end < s.end {
                            out.push(p.end..s.end);
                        }
                        out
                    } else {
                        vec![s]
                    }
                })
                .collect();
        }
        for s in segments {
            if !s.is_empty() {
                pieces.push((s, repl));
            }
        }
    }
    pieces.sort_by_key(|(r, _)| (r.start, std::cmp::Reverse(r.end)));
    let mut applied: Vec<(Range<usize>, &'static str)> = Vec::new();
    for p in pieces {
        if applied.last().is_none_or(|(last, _)| last.end <= p.0.start) {
            applied.push(p);
        }
    }

    // Walk the block emitting kept text, collapsing whitespace, and noting
    // where each protected span lands.
    let mut out = Writer::default();
    let mut spans = vec![0..0; protected.len()];
    let mut pos = 0;
    let mut edit_iter = applied.into_iter().peekable();
    while pos < src.len() {
        if let Some(i) = protected.iter().position(|p| p.start == pos) {
            let start = out.push_token(&src[protected[i].clone()]);
            spans[i] = start..out.len;
            pos = protected[i].end;
            continue;
        }
        if let Some((r, repl)) = edit_iter.peek() {
            if r.start == pos {
                out.push_text(repl);
                pos = r.end;
                edit_iter.next();
                continue;
            }
        }
        let next_protected = protected
            .iter()
            .map(|p| p.start)
            .filter(|&s| s > pos)
            .min()
            .unwrap_or(src.len());
        let next_edit = edit_iter.peek().map_or(src.len(), |(r, _)| r.start);
        let stop = next_protected.min(next_edit).min(src.len());
        out.push_text(&src[pos..stop]);
        pos = stop;
    }
    (out.text, spans)
}

static FENCE_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}(?:`{3,}|~{3,})[ \t]*$").unwrap());

#[derive(Default)]
struct Writer {
    text: String,
    len: usize,
    pending_space: bool,
}

impl Writer {
    fn push_text(&mut self, s: &str) {
        for c in s.chars() {
            if c.is_whitespace() {
                self.pending_space = true;
            } else {
                self.push_char(c);
            }
        }
    }

    fn push_char(&mut self, c: char) {
        if self.pending_space && self.len > 0 {
            self.text.push(' ');
            self.len += 1;
        }
        self.pending_space = false;
        self.text.push(c);
        self.len += 1;
    }

    /// Pushes a whitespace-free token and returns its start offset.
    fn push_token(&mut self, s: &str) -> usize {
        if self.pending_space && self.len > 0 {
            self.text.push(' ');
            self.len += 1;
        }
        self.pending_space = false;
        let start = self.len;
        self.text.push_str(s);
        self.len += s.chars().count();
        start
    }
}

/// Builds the plain-text context for the URL at char span `start..end` of
/// `markdown`.
pub fn build_context(
    markdown: &str,
    start: usize,
    end: usize,
    cfg: &ContextConfig,
) -> Result<BuiltContext, HarvestError> {
    let out_of_bounds = || HarvestError::SpanOutOfBounds { start, end };
    if start >= end {
        return Err(out_of_bounds());
    }
    let bstart = char_to_byte(markdown, start).ok_or_else(out_of_bounds)?;
    let bend = char_to_byte(markdown, end).ok_or_else(out_of_bounds)?;
    let target = bstart..bend;

    let blocks = split_blocks(markdown);
    let home = blocks
        .iter()
        .position(|b| b.range.start <= target.start && target.end <= b.range.end)
        .ok_or_else(out_of_bounds)?;

    let mut protected: Vec<Range<usize>> = extract_byte_spans(markdown, &ExtractConfig::all())
        .into_iter()
        .map(|(r, _)| r)
        .filter(|r| !(r.start < target.end && target.start < r.end))
        .collect();
    protected.push(target.clone());
    protected.sort_by_key(|r| r.start);

    let flatten = |idx: usize| -> (String, Option<Range<usize>>) {
        let b = &blocks[idx];
        let local: Vec<Range<usize>> = protected
            .iter()
            .filter(|r| b.range.start <= r.start && r.end <= b.range.end)
            .map(|r| r.start - b.range.start..r.end - b.range.start)
            .collect();
        let (text, spans) = flatten_block(&markdown[b.range.clone()], b.kind, &local);
        let span = (b.range.start <= target.start && target.end <= b.range.end)
            .then(|| target.start - b.range.start..target.end - b.range.start)
            .and_then(|t| local.iter().position(|r| *r == t))
            .map(|i| spans[i].clone());
        (text, span)
    };

    let (home_text, home_span) = flatten(home);
    let home_span = home_span.ok_or_else(out_of_bounds)?;
    let mut before: Vec<String> = Vec::new();
    let mut after: Vec<String> = Vec::new();
    let mut total = home_text.chars().count();
    let (mut prev, mut next) = (home, home + 1);
    let mut take_prev = true;
    while total < cfg.min_chars && (prev > 0 || next < blocks.len()) {
        let pick_prev = if prev == 0 {
            false
        } else if next >= blocks.len() {
            true
        } else {
            take_prev
        };
        let text = if pick_prev {
            prev -= 1;
            flatten(prev).0
        } else {
            next += 1;
            flatten(next - 1).0
        };
        take_prev = !take_prev;
        if text.is_empty() {
            continue;
        }
        total += text.chars().count() + 1;
        if pick_prev {
            before.push(text);
        } else {
            after.push(text);
        }
    }

    let mut context = String::new();
    for t in before.iter().rev() {
        context.push_str(t);
        context.push(' ');
    }
    let shift = context.chars().count();
    context.push_str(&home_text);
    for t in &after {
        context.push(' ');
        context.push_str(t);
    }
    Ok(BuiltContext {
        context,
        start: home_span.start + shift,
        end: home_span.end + shift,
    })
}
