mod common;

use common::*;
use hent::output_parser::{parse_ratio, parse_text, strip_preamble, ParseOutcome, PreambleRules, Prediction};
use proptest::prelude::*;
use serde_json::json;

fn pairs() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec(
        (
            "https?://[a-z]{1,8}\\.(org|com)/[a-z0-9_\\-\\[\\]{}\"]{0,12}",
            prop_oneof![
                Just("dataset_direct_link".to_string()),
                Just("dataset_landing_page".to_string()),
                Just("software".to_string()),
                Just("other".to_string()),
                "[a-z ]{1,10}",
            ],
        ),
        0..5,
    )
}

fn as_array(pairs: &[(String, String)]) -> String {
    serde_json::to_string(
        &pairs
            .iter()
            .map(|(u, l)| json!({"URL": u, "label": l}))
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

fn dedup(pairs: &[(String, String)]) -> Vec<(String, Option<String>)> {
    let mut out: Vec<(String, Option<String>)> = Vec::new();
    for (u, l) in pairs {
        let p = Prediction::new(u.clone(), Some(l.clone()));
        let key = (p.url.clone(), p.label_text());
        if !out.contains(&key) {
            out.push(key);
        }
    }
    out
}

fn texts(o: &ParseOutcome) -> Vec<(String, Option<String>)> {
    o.predictions()
        .iter()
        .map(|p| (p.url.clone(), p.label_text()))
        .collect()
}

proptest! {
    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,200}") {
        let _ = parse_text(&s);
        let _ = strip_preamble(&s);
    }

    #[test]
    fn json_shaped_noise_never_panics(s in "[\\[\\]{}\",:\\\\ a-z\n`]{0,120}") {
        let o = parse_text(&s);
        if !o.is_parsed() {
            prop_assert!(o.predictions().is_empty());
        }
    }

    #[test]
    fn valid_arrays_pass_through(p in pairs()) {
        let o = parse_text(&as_array(&p));
        prop_assert!(o.is_parsed());
        prop_assert_eq!(texts(&o), dedup(&p));
    }

    #[test]
    fn wrapping_noise_does_not_change_valid_arrays(p in pairs(), fence in any::<bool>()) {
        let body = as_array(&p);
        let wrapped = if fence {
            format!("```json\n{body}\n```")
        } else {
            format!("Sure! Here is the annotation:\n{body}\nI hope this helps!")
        };
        prop_assert_eq!(texts(&parse_text(&wrapped)), dedup(&p));
    }

    #[test]
    fn reparsing_is_idempotent(s in "[\\[\\]{}\",: a-zURLlabel/.]{0,120}") {
        let first = parse_text(&s);
        if first.is_parsed() {
            let again: Vec<_> = first
                .predictions()
                .iter()
                .map(|p| json!({"URL": p.url, "label": p.label_text()}))
                .collect();
            let second = parse_text(&serde_json::to_string(&again).unwrap());
            prop_assert_eq!(texts(&second), texts(&first));
        }
    }
}

#[derive(serde::Deserialize)]
struct Case {
    name: String,
    raw: String,
    status: String,
    predictions: Vec<(String, Option<String>)>,
}

#[test]
fn corpus_of_malformed_outputs() {
    let cases: Vec<Case> =
        serde_json::from_str(&std::fs::read_to_string(fixture("parser_cases.json")).unwrap()).unwrap();
    for c in cases {
        let o = parse_text(&c.raw);
        assert_eq!(o.status(), c.status, "{}", c.name);
        assert_eq!(texts(&o), c.predictions, "{}", c.name);
    }
}

#[test]
fn ratio_over_outcomes() {
    assert_eq!(parse_ratio(&[]), None);
    let outs = ["[]", "nothing here", "[{\"URL\": \"http://a\"}]", "[{"].map(parse_text);
    assert_eq!(parse_ratio(&outs), Some(0.5));
}

#[test]
fn custom_rules_file_is_used() {
    let rules = PreambleRules::from_json(r#"[{"pattern": "^RESULT>", "replacement": ""}]"#).unwrap();
    let o = hent::output_parser::parse_with_rules("RESULT>[{\"URL\": \"http://a\", \"label\": \"other\"}]", &rules);
    assert!(o.is_parsed());
    assert!(PreambleRules::from_json(r#"[{"pattern": "(", "replacement": ""}]"#).is_err());
}
