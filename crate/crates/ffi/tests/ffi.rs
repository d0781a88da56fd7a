use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use hent_ffi::*;
use serde_json::Value;

fn fixture(rel: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(rel);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_json(p: *mut c_char) -> Value {
    let v = serde_json::from_str(CStr::from_ptr(p).to_str().unwrap()).unwrap();
    hent_string_free(p);
    v
}

fn last_error() -> String {
    let p = hent_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn load(rel: &str) -> *mut HentCorpus {
    let mut h = ptr::null_mut();
    assert_eq!(hent_corpus_load(fixture(rel).as_ptr(), &mut h), HentStatus::Ok);
    h
}

#[test]
fn corpus_handle_counts() {
    unsafe {
        let h = load("corpus.jsonl");
        let (mut r, mut m, mut repos) = (0, 0, 0);
        assert_eq!(hent_corpus_counts(h, &mut r, &mut m, &mut repos), HentStatus::Ok);
        assert_eq!((r, m, repos), (20, 32, 20));
        let mut classes = [0usize; 4];
        assert_eq!(hent_corpus_class_counts(h, classes.as_mut_ptr()), HentStatus::Ok);
        assert_eq!(classes.iter().sum::<usize>(), 32);
        hent_corpus_free(h);
        assert!(hent_last_error().is_null());
    }
}

#[test]
fn load_errors_are_reported() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(
            hent_corpus_load(c("/no/such/file.jsonl").as_ptr(), &mut h),
            HentStatus::Io
        );
        assert!(h.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(hent_corpus_load(ptr::null(), &mut h), HentStatus::NullArgument);
        assert_eq!(
            hent_corpus_from_jsonl(c("{not json").as_ptr(), &mut h),
            HentStatus::InvalidInput
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            hent_corpus_from_jsonl(bad.as_ptr().cast(), &mut h),
            HentStatus::InvalidUtf8
        );
        hent_corpus_free(ptr::null_mut());
        hent_string_free(ptr::null_mut());
    }
}

#[test]
fn parse_and_ratio() {
    unsafe {
        let mut out = ptr::null_mut();
        let raw = c("Sure!\n[{\"URL\": \"http://a.org/x\", \"label\": \"software\"}]");
        assert_eq!(hent_parse_output(raw.as_ptr(), &mut out), HentStatus::Ok);
        let v = take_json(out);
        assert_eq!(v["parse_status"], "parsed");
        assert_eq!(v["predictions"][0]["url"], "http://a.org/x");

        assert_eq!(hent_parse_output(c("no idea").as_ptr(), &mut out), HentStatus::Ok);
        assert_eq!(take_json(out)["parse_status"], "no_json_found");

        let mut r = 0.0;
        assert_eq!(
            hent_lcs_ratio(c("http://a/x").as_ptr(), c("http://a/x.zip").as_ptr(), &mut r),
            HentStatus::Ok
        );
        assert_eq!(r, 10.0 / 14.0);
        assert_eq!(
            hent_lcs_ratio(c("x").as_ptr(), c("").as_ptr(), &mut r),
            HentStatus::InvalidInput
        );
    }
}

#[test]
fn extract_from_markdown() {
    unsafe {
        let mut out = ptr::null_mut();
        let md = c("Data at https://a.org/d.zip. Code: [repo](https://github.com/a/b)");
        assert_eq!(hent_extract_urls(md.as_ptr(), &mut out), HentStatus::Ok);
        let v = take_json(out);
        let urls: Vec<&str> = v
            .as_array()
            .unwrap()
            .iter()
            .map(|u| u["url"].as_str().unwrap())
            .collect();
        assert!(urls.contains(&"https://a.org/d.zip") && urls.contains(&"https://github.com/a/b"));
    }
}

#[test]
fn evaluate_hand_fixture() {
    unsafe {
        let h = load("hand/corpus.jsonl");
        let preds = std::fs::read_to_string(
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/hand/predictions.jsonl"),
        )
        .unwrap();
        let mut out = ptr::null_mut();
        let status = hent_evaluate(
            h,
            c(&preds).as_ptr(),
            c("m").as_ptr(),
            c("e+cl").as_ptr(),
            c("static").as_ptr(),
            0.0,
            &mut out,
        );
        assert_eq!(status, HentStatus::Ok, "{}", last_error());
        let v = take_json(out);
        let strict = &v["schemes"][0];
        assert_eq!(strict["scheme"], "Strict");
        assert_eq!(strict["multiclass"]["precision"]["value"], 0.2);
        assert_eq!(strict["multiclass"]["recall"]["value"], 0.25);

        let status = hent_evaluate(
            h,
            c("").as_ptr(),
            c("m").as_ptr(),
            c("e+cl").as_ptr(),
            c("static").as_ptr(),
            0.0,
            &mut out,
        );
        assert_eq!(status, HentStatus::EvalFailed);
        let status = hent_evaluate(
            h,
            c(&preds).as_ptr(),
            c("m").as_ptr(),
            c("ner").as_ptr(),
            c("static").as_ptr(),
            0.0,
            &mut out,
        );
        assert_eq!(status, HentStatus::InvalidInput);
        let status = hent_evaluate(
            h,
            c(&preds).as_ptr(),
            c("m").as_ptr(),
            c("cl").as_ptr(),
            c("static").as_ptr(),
            2.0,
            &mut out,
        );
        assert_eq!(status, HentStatus::InvalidInput);
        hent_corpus_free(h);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/hent.h")).unwrap();
    for name in [
        "hent_last_error",
        "hent_string_free",
        "hent_corpus_load",
        "hent_corpus_from_jsonl",
        "hent_corpus_free",
        "hent_corpus_counts",
        "hent_corpus_class_counts",
        "hent_parse_output",
        "hent_lcs_ratio",
        "hent_extract_urls",
        "hent_evaluate",
        "HENT_STATUS_OK = 0",
        "typedef struct HentCorpus HentCorpus",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
