use serde_json::Value;

use super::ParseFailure;

/// Turns a model response (after preamble stripping) into a JSON array
/// string. Repairs, least invasive first: valid array, single object,
/// trailing commas, then object-by-object recovery, which covers
/// newline-separated objects, a truncated final object and trailing text.
pub fn consolidate_json(s: &str) -> Result<String, ParseFailure> {
    let t = s.trim();
    let Some(start) = t.find(['[', '{']) else {
        return Err(ParseFailure::NoJsonFound);
    };
    let body = &t[start..];

    if let Some(v) = as_array(body) {
        return Ok(v);
    }
    // A leading object may be followed by more objects, so only a leading
    // array is cut at its closing bracket.
    if let Some(end) = balanced_end(body).filter(|_| body.starts_with('[')) {
        let head = &body[..end];
        if let Some(v) = as_array(head) {
            return Ok(v);
        }
        if let Some(v) = as_array(&remove_trailing_commas(head)) {
            return Ok(v);
        }
    }

    let objects = recover_objects(body);
    if objects.is_empty() {
        return Err(ParseFailure::UnrecoverableSyntax);
    }
    Ok(Value::Array(objects).to_string())
}

fn as_array(text: &str) -> Option<String> {
    match serde_json::from_str::<Value>(text).ok()? {
        v @ Value::Array(_) => Some(v.to_string()),
        v @ Value::Object(_) => Some(Value::Array(vec![v]).to_string()),
        _ => None,
    }
}

/// Byte index just past the bracket closing the value opened at `body[0]`.
fn balanced_end(body: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut scan = Scanner::default();
    for (i, c) in body.char_indices() {
        if !scan.step(c) {
            continue;
        }
        match c {
            '[' | '{' => depth += 1,
            ']' | '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Tracks whether the scan position is inside a JSON string literal.
#[derive(Default)]
struct Scanner {
    in_string: bool,
    escaped: bool,
}

impl Scanner {
    /// Feeds one char; true when it is structural (outside any string).
    fn step(&mut self, c: char) -> bool {
        if self.in_string {
            if self.escaped {
                self.escaped = false;
            } else if c == '\\' {
                self.escaped = true;
            } else if c == '"' {
                self.in_string = false;
            }
            false
        } else if c == '"' {
            self.in_string = true;
            false
        } else {
            true
        }
    }
}

pub(crate) fn remove_trailing_commas(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut scan = Scanner::default();
    let mut pending_comma: Option<String> = None;
    for c in text.chars() {
        let structural = scan.step(c);
        if let Some(p) = pending_comma.as_mut() {
            if structural && c.is_whitespace() {
                p.push(c);
                continue;
            }
            let held = pending_comma.take().unwrap();
            if structural && (c == ']' || c == '}') {
                out.push_str(&held[1..]);
            } else {
                out.push_str(&held);
            }
        }
        if structural && c == ',' {
            pending_comma = Some(",".into());
        } else {
            out.push(c);
        }
    }
    if let Some(held) = pending_comma {
        out.push_str(&held);
    }
    out
}

/// Collects every complete object at element level. Inside a top-level
/// array the scan stops at its closing bracket; otherwise the whole text is
/// scanned for top-level objects.
fn recover_objects(body: &str) -> Vec<Value> {
    let elem_depth = usize::from(body.starts_with('['));
    let mut depth = 0usize;
    let mut scan = Scanner::default();
    let mut open: Option<usize> = None;
    let mut found = Vec::new();
    for (i, c) in body.char_indices() {
        if !scan.step(c) {
            continue;
        }
        match c {
            '[' | '{' => {
                if c == '{' && depth == elem_depth {
                    open = Some(i);
                }
                depth += 1;
            }
            ']' | '}' => {
                let Some(d) = depth.checked_sub(1) else {
                    // Stray closer outside any value.
                    continue;
                };
                depth = d;
                if depth == elem_depth && c == '}' {
                    if let Some(s) = open.take() {
                        if let Some(v) = parse_object(&body[s..=i]) {
                            found.push(v);
                        }
                    }
                } else if elem_depth == 1 && depth == 0 {
                    break;
                }
            }
            _ => {}
        }
    }
    found
}

fn parse_object(text: &str) -> Option<Value> {
    let v = serde_json::from_str::<Value>(text)
        .ok()
        .or_else(|| serde_json::from_str::<Value>(&remove_trailing_commas(text)).ok())?;
    v.is_object().then_some(v)
}
