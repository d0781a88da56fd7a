//! C ABI over the `hent` library.
//!
//! Every function returns a [`HentStatus`]. On failure a message is kept in
//! thread-local storage and can be read with [`hent_last_error`]. Strings
//! returned through `out` pointers are owned by the caller and must be
//! released with [`hent_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hent::corpus::{class_distribution, load_corpus, parse_corpus, Corpus, UrlClass};
use hent::evaluator::{align, evaluate};
use hent::harvester::{extract_urls, ExtractConfig};
use hent::matcher::{lcs_ratio, Threshold};
use hent::output_parser::{parse_text, PredictionRecord};
use hent::prompting::PromptTask;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HentStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidInput = 4,
    EvalFailed = 5,
    Panic = 6,
}

/// Opaque handle to a loaded corpus.
pub struct HentCorpus {
    inner: Corpus,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HentStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HentStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HentStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HentStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(HentStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(HentStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(HentStatus::NullArgument, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(HentStatus::InvalidInput, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(HentStatus::InvalidInput, e.to_string())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next `hent_*` call on the same thread.
#[no_mangle]
pub extern "C" fn hent_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from a `hent_*` out parameter and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hent_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a JSONL corpus file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hent_corpus_load(path: *const c_char, out: *mut *mut HentCorpus) -> HentStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        non_null(out, "out")?;
        let inner = load_corpus(Path::new(path)).map_err(|e| {
            let status = if Path::new(path).exists() {
                HentStatus::InvalidInput
            } else {
                HentStatus::Io
            };
            Failure(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(HentCorpus { inner }));
        Ok(())
    })
}

/// Parses a corpus from JSONL text.
///
/// # Safety
/// `jsonl` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hent_corpus_from_jsonl(jsonl: *const c_char, out: *mut *mut HentCorpus) -> HentStatus {
    guard(|| {
        let text = str_arg(jsonl, "jsonl")?;
        non_null(out, "out")?;
        let inner = parse_corpus(text, Path::new("<memory>")).map_err(invalid)?;
        *out = Box::into_raw(Box::new(HentCorpus { inner }));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn hent_corpus_free(corpus: *mut HentCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Writes the number of records, mentions and distinct repositories.
///
/// # Safety
/// `corpus` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hent_corpus_counts(
    corpus: *const HentCorpus,
    records: *mut usize,
    mentions: *mut usize,
    repositories: *mut usize,
) -> HentStatus {
    guard(|| {
        non_null(corpus, "corpus")?;
        non_null(records, "records")?;
        non_null(mentions, "mentions")?;
        non_null(repositories, "repositories")?;
        let c = &(*corpus).inner;
        *records = c.len();
        *mentions = c.mention_count();
        *repositories = c.repo_count();
        Ok(())
    })
}

/// Writes mention counts per class into `out[4]`, ordered
/// DatasetDirectLink, DatasetLandingPage, Software, Other.
///
/// # Safety
/// `corpus` must be a live handle and `out` must point to 4 writable slots.
#[no_mangle]
pub unsafe extern "C" fn hent_corpus_class_counts(corpus: *const HentCorpus, out: *mut usize) -> HentStatus {
    guard(|| {
        non_null(corpus, "corpus")?;
        non_null(out, "out")?;
        let dist = class_distribution(&(*corpus).inner);
        for (i, class) in UrlClass::ALL.iter().enumerate() {
            *out.add(i) = dist[class];
        }
        Ok(())
    })
}

/// Parses raw model output. `out_json` receives
/// `{"id", "predictions": [{"url", "label"}], "parse_status"}`.
///
/// # Safety
/// `raw` must be a valid C string and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hent_parse_output(raw: *const c_char, out_json: *mut *mut c_char) -> HentStatus {
    guard(|| {
        let raw = str_arg(raw, "raw")?;
        non_null(out_json, "out_json")?;
        let record = PredictionRecord::from_outcome("", &parse_text(raw));
        put_string(out_json, serde_json::to_string(&record).map_err(invalid)?)
    })
}

/// Longest-common-substring length of `pred` and `gold` over the character
/// length of `gold`.
///
/// # Safety
/// `pred` and `gold` must be valid C strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hent_lcs_ratio(pred: *const c_char, gold: *const c_char, out: *mut f64) -> HentStatus {
    guard(|| {
        let pred = str_arg(pred, "pred")?;
        let gold = str_arg(gold, "gold")?;
        non_null(out, "out")?;
        *out = lcs_ratio(pred, gold).map_err(invalid)?;
        Ok(())
    })
}

/// URLs found in markdown text, as a JSON array of
/// `{"url", "start", "end", "kind"}` with character offsets.
///
/// # Safety
/// `markdown` must be a valid C string and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hent_extract_urls(markdown: *const c_char, out_json: *mut *mut c_char) -> HentStatus {
    guard(|| {
        let text = str_arg(markdown, "markdown")?;
        non_null(out_json, "out_json")?;
        let urls = extract_urls(text, &ExtractConfig::default());
        put_string(out_json, serde_json::to_string(&urls).map_err(invalid)?)
    })
}

/// Scores prediction records (JSONL, one per evaluation unit) against the
/// corpus and writes the evaluation report as JSON. `task` is `e+cl` or
/// `cl`; `tau` of 0 means any overlap.
///
/// # Safety
/// `corpus` must be a live handle; the strings must be valid C strings and
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hent_evaluate(
    corpus: *const HentCorpus,
    predictions_jsonl: *const c_char,
    model: *const c_char,
    task: *const c_char,
    mode: *const c_char,
    tau: f64,
    out_json: *mut *mut c_char,
) -> HentStatus {
    guard(|| {
        non_null(corpus, "corpus")?;
        let preds = str_arg(predictions_jsonl, "predictions_jsonl")?;
        let model = str_arg(model, "model")?;
        let task: PromptTask = str_arg(task, "task")?.parse().map_err(invalid)?;
        let mode = str_arg(mode, "mode")?;
        non_null(out_json, "out_json")?;
        let tau = if tau == 0.0 {
            Threshold::default()
        } else {
            Threshold::new(tau).map_err(invalid)?
        };
        let mut outcomes = Vec::new();
        for (i, line) in preds.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: PredictionRecord =
                serde_json::from_str(line).map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
            let outcome = rec.outcome().map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
            outcomes.push((rec.id, outcome));
        }
        let eval_err = |e: hent::evaluator::EvalError| Failure(HentStatus::EvalFailed, e.to_string());
        let units = align(&task.units(&(*corpus).inner), outcomes, tau).map_err(eval_err)?;
        let report = evaluate(model, task.as_str(), mode, &units).map_err(eval_err)?;
        put_string(out_json, serde_json::to_string(&report).map_err(invalid)?)
    })
}
