//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use hent::corpus::{class_distribution, load_corpus, UrlClass};
use hent::evaluator::{score_run, LabelMode, Scheme, ScoredUnit};
use hent::matcher::{lcs_ratio, longest_common_substring, match_urls, Threshold};
use hent::output_parser::{parse_text, ParseOutcome, Prediction};
use hent::prompting::{build_prompts, ExampleMode, PromptTask, Templates, TermFrequencyCosine};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_fidelity() -> Outcome {
    let path = std::env::var_os("HENT_GOLD_CORPUS")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/gold_standard.jsonl"));
    ensure(path.exists(), || {
        format!(
            "released gold annotations not found at {} (set HENT_GOLD_CORPUS to the converted JSONL)",
            path.display()
        )
    })?;
    let corpus = load_corpus(&path).map_err(|e| e.to_string())?;
    let dist = class_distribution(&corpus);
    let want = BTreeMap::from([
        (UrlClass::DatasetDirectLink, 120),
        (UrlClass::DatasetLandingPage, 678),
        (UrlClass::Software, 355),
        (UrlClass::Other, 286),
    ]);
    ensure(corpus.mention_count() == 1439, || {
        format!("{} mentions, want 1439", corpus.mention_count())
    })?;
    ensure(corpus.repo_count() == 811, || {
        format!("{} repositories, want 811", corpus.repo_count())
    })?;
    ensure(dist == want, || format!("class distribution {dist:?}"))?;
    Ok("1439 mentions, 811 repositories, {120, 678, 355, 286}".into())
}

/// All multisets of size <= `max` over `n` symbols, as sorted index lists.
fn multisets(n: usize, max: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for i in from..n {
            cur.push(i);
            rec(n, left - 1, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max, 0, &mut Vec::new(), &mut out);
    out
}

fn matcher_oracle() -> Outcome {
    let mut table = HashMap::new();
    for p in FRAGMENTS {
        for g in FRAGMENTS {
            table.insert((p, g), dp_ratio(p, g));
        }
    }
    let ratio = |p: &str, g: &str| table[&(p, g)];
    let sets = multisets(FRAGMENTS.len(), 5);
    let mut cases = 0usize;
    for tau in [Threshold::default(), Threshold::new(0.5).unwrap()] {
        for gs in &sets {
            let golds: Vec<&str> = gs.iter().map(|&i| FRAGMENTS[i]).collect();
            for ps in &sets {
                // Reverse half the prediction lists so the tie-break sees both orders.
                let mut preds: Vec<&str> = ps.iter().map(|&i| FRAGMENTS[i]).collect();
                if cases % 2 == 1 {
                    preds.reverse();
                }
                let got = match_urls(&preds, &golds, tau).map_err(|e| e.to_string())?;
                let want = oracle_match_with(&preds, &golds, tau.value(), ratio);
                let got_pairs: Vec<(usize, usize, f64)> = got.pairs.iter().map(|p| (p.gold, p.pred, p.ratio)).collect();
                ensure(
                    got_pairs == want.pairs && got.missing == want.missing && got.spurious == want.spurious,
                    || format!("mismatch for preds={preds:?} golds={golds:?}: {got:?} vs {want:?}"),
                )?;
                let mut gold_seen = vec![0; golds.len()];
                let mut pred_seen = vec![0; preds.len()];
                for p in &got.pairs {
                    gold_seen[p.gold] += 1;
                    pred_seen[p.pred] += 1;
                    ensure(p.ratio > 0.0 && p.ratio <= 1.0, || {
                        format!("ratio {} out of range", p.ratio)
                    })?;
                }
                got.missing.iter().for_each(|&g| gold_seen[g] += 1);
                got.spurious.iter().for_each(|&p| pred_seen[p] += 1);
                ensure(gold_seen.iter().chain(&pred_seen).all(|&c| c == 1), || {
                    format!("index not covered exactly once for preds={preds:?} golds={golds:?}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} instances agree with the greedy oracle; 1-to-1 holds"))
}

fn lcs_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let alphabets: [&[char]; 3] = [
        &['a', 'b'],
        &['a', 'b', 'c', '/', '.', ':'],
        &['h', 't', 'p', 'é', '日', '/'],
    ];
    for i in 0..10_000 {
        let alpha = alphabets[i % alphabets.len()];
        let mut gen = |min: usize| -> String {
            let n = rng.gen_range(min..=64);
            (0..n).map(|_| alpha[rng.gen_range(0..alpha.len())]).collect()
        };
        let pred = gen(0);
        let gold = gen(1);
        let want = dp_lcs(&pred, &gold);
        let got = longest_common_substring(&pred, &gold);
        ensure(got == want, || {
            format!("lcs({pred:?}, {gold:?}) = {got}, oracle {want}")
        })?;
        let r = lcs_ratio(&pred, &gold).map_err(|e| e.to_string())?;
        ensure(r == dp_ratio(&pred, &gold), || {
            format!("ratio mismatch for {pred:?} / {gold:?}")
        })?;
        ensure(dp_lcs(&gold, &pred) == want, || "oracle asymmetry".into())?;
    }
    Ok("10000 random pairs equal the quadratic oracle".into())
}

fn random_unit(rng: &mut StdRng, i: usize) -> ScoredUnit {
    let ng = rng.gen_range(0..=4);
    let np = rng.gen_range(0..=4);
    let golds = (0..ng)
        .map(|_| mention(FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())], random_class(rng)))
        .collect();
    let preds = (0..np)
        .map(|_| Prediction::new(FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())], Some(random_label(rng))))
        .collect();
    let outcome = if rng.gen_bool(0.1) {
        ParseOutcome::Failed(hent::output_parser::ParseFailure::NoJsonFound)
    } else {
        ParseOutcome::Parsed(preds)
    };
    ScoredUnit::new(format!("u{i}"), golds, outcome, Threshold::default()).unwrap()
}

fn evaluator_correctness() -> Outcome {
    let units = hand_units();
    for (scheme_name, want) in hand_expected() {
        let scheme = Scheme::ALL.into_iter().find(|s| s.as_str() == scheme_name).unwrap();
        let m = score_run(&units, scheme, LabelMode::Multiclass).map_err(|e| e.to_string())?;
        let b = score_run(&units, scheme, LabelMode::Binary).map_err(|e| e.to_string())?;
        let got = [m.precision.value, m.recall.value, b.precision.value, b.recall.value];
        ensure(got == want, || format!("{scheme_name}: got {got:?}, frozen {want:?}"))?;
    }

    let corpus = load_corpus(&fixture("corpus.jsonl")).unwrap();
    let perfect: Vec<ScoredUnit> = corpus
        .records
        .iter()
        .map(|r| {
            let preds = r
                .mentions
                .iter()
                .map(|m| Prediction::new(m.url.clone(), Some(m.label.snake_name().into())))
                .collect();
            ScoredUnit::new(
                r.id.clone(),
                r.mentions.clone(),
                ParseOutcome::Parsed(preds),
                Threshold::default(),
            )
            .unwrap()
        })
        .collect();
    for scheme in Scheme::ALL {
        for mode in [LabelMode::Multiclass, LabelMode::Binary] {
            let s = score_run(&perfect, scheme, mode).unwrap();
            ensure(s.precision.value == 1.0 && s.recall.value == 1.0, || {
                format!("perfect run {scheme} {mode:?}: {s:?}")
            })?;
        }
    }

    let mut rng = StdRng::seed_from_u64(11);
    for fixture_no in 0..1000 {
        let n = rng.gen_range(1..=6);
        let units: Vec<ScoredUnit> = (0..n).map(|i| random_unit(&mut rng, i)).collect();
        for mode in [LabelMode::Multiclass, LabelMode::Binary] {
            let s = Scheme::ALL.map(|sc| score_run(&units, sc, mode).unwrap());
            let [strict, exact, partial, _] = s;
            for (lo, hi) in [(&strict, &exact), (&exact, &partial)] {
                ensure(
                    hi.precision.value >= lo.precision.value && hi.recall.value >= lo.recall.value,
                    || format!("monotonicity broken in fixture {fixture_no} ({mode:?})"),
                )?;
            }
        }
    }
    Ok("hand fixture matches frozen values; perfect run scores 1.0; 1000 random fixtures monotone".into())
}

const GOWALLA_OUTPUT: &str = r#"[{"URL": "https://snap.stanford.edu/data/loc-gowalla.html", "label": "dataset_landing_page"},{"URL": "http://dawenl.github.io/data/gowalla_pro.zip", "label": "dataset_direct_link"}]"#;

#[derive(serde::Deserialize)]
struct ParserCase {
    name: String,
    raw: String,
    status: String,
    predictions: Vec<(String, Option<String>)>,
}

fn parser_robustness() -> Outcome {
    let cases: Vec<ParserCase> =
        serde_json::from_str(&fs::read_to_string(fixture("parser_cases.json")).unwrap()).unwrap();
    ensure(cases.len() >= 25, || format!("only {} parser cases", cases.len()))?;
    for c in &cases {
        let out = parse_text(&c.raw);
        let got: Vec<(String, Option<String>)> = out
            .predictions()
            .iter()
            .map(|p| (p.url.clone(), p.label_text()))
            .collect();
        ensure(out.status() == c.status && got == c.predictions, || {
            format!("case `{}`: got {} {:?}", c.name, out.status(), got)
        })?;
    }
    let gowalla = parse_text(GOWALLA_OUTPUT);
    let got: Vec<(&str, Option<UrlClass>)> = gowalla
        .predictions()
        .iter()
        .map(|p| (p.url.as_str(), p.label.class()))
        .collect();
    ensure(
        got == [
            (
                "https://snap.stanford.edu/data/loc-gowalla.html",
                Some(UrlClass::DatasetLandingPage),
            ),
            (
                "http://dawenl.github.io/data/gowalla_pro.zip",
                Some(UrlClass::DatasetDirectLink),
            ),
        ],
        || format!("Gowalla example output parsed to {got:?}"),
    )?;
    Ok(format!(
        "{} malformed outputs and the Gowalla example output parse as expected",
        cases.len()
    ))
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let stage_files = [
        "prompts.jsonl",
        "raw_outputs.jsonl",
        "predictions.jsonl",
        "matches.jsonl",
        "eval.json",
        "report.csv",
        "report.txt",
    ];
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(hent_bin())
            .args(["pipeline", "--config"])
            .arg(fixture("config.json"))
            .arg("--backend")
            .arg("replay")
            .arg("--out-dir")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        runs.push(out);
    }
    for f in stage_files {
        let a = fs::read(runs[0].join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(runs[1].join(f)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    for f in ["report.csv", "report.txt", "eval.json"] {
        let got = fs::read(runs[0].join(f)).unwrap();
        let want = fs::read(fixture("golden").join(f)).unwrap();
        ensure(got == want, || format!("{f} differs from the golden file"))?;
    }
    Ok("two replay runs are byte-identical and match the golden report".into())
}

fn prompt_fidelity() -> Outcome {
    let corpus = load_corpus(&fixture("corpus.jsonl")).unwrap();
    let pool = load_corpus(&fixture("pool.jsonl")).unwrap();
    let templates = Templates::builtin();
    let static_ids = ["pool-gowalla", "pool-software", "pool-other", "pool-mixed"]
        .map(String::from)
        .to_vec();
    let mode = ExampleMode::fixed(static_ids).unwrap();
    let prompts = build_prompts(
        PromptTask::ExtractClassify,
        &mode,
        &corpus,
        &pool,
        &templates,
        &TermFrequencyCosine,
    )
    .map_err(|e| e.to_string())?;
    let input = "Input: Gowalla https://snap.stanford.edu/data/loc-gowalla.html : the pre-processed data that we used in the paper can be downloaded here http://dawenl.github.io/data/gowalla_pro.zip .\n";
    let output = format!("Output: {GOWALLA_OUTPUT}\n");
    for p in &prompts {
        ensure(p.text.contains(input) && p.text.contains(&output), || {
            format!("prompt {} lacks the verbatim Gowalla example", p.id)
        })?;
    }

    let mut checked = 0;
    let sweeps: [(&hent::corpus::Corpus, &str); 2] = [(&pool, "pool"), (&corpus, "corpus as its own pool")];
    for task in [PromptTask::ExtractClassify, PromptTask::ClassifyOnly] {
        for (pool_used, _) in sweeps {
            let prompts = build_prompts(
                task,
                &ExampleMode::Dynamic,
                &corpus,
                pool_used,
                &templates,
                &TermFrequencyCosine,
            )
            .map_err(|e| e.to_string())?;
            for p in &prompts {
                let target = corpus.get(&p.target_id).unwrap();
                for ex in &p.example_ids {
                    let e = pool_used.get(ex).unwrap();
                    ensure(e.id != target.id && e.repo != target.repo, || {
                        format!("prompt {} uses {} as an example", p.id, ex)
                    })?;
                    ensure(
                        !p.text.contains(&format!("Input: {}\n", target.context)) || task == PromptTask::ClassifyOnly,
                        || format!("prompt {} repeats its target as an example", p.id),
                    )?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "Gowalla example verbatim in {} prompts; leakage guard holds for {checked} prompts",
        prompts.len()
    ))
}

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            number: 1,
            name: "corpus fidelity",
            budget: Duration::from_secs(5),
            check: corpus_fidelity,
        },
        Criterion {
            number: 2,
            name: "matcher oracle equivalence",
            budget: Duration::from_secs(60),
            check: matcher_oracle,
        },
        Criterion {
            number: 3,
            name: "LCS oracle equivalence",
            budget: Duration::from_secs(30),
            check: lcs_oracle,
        },
        Criterion {
            number: 4,
            name: "evaluator correctness",
            budget: Duration::from_secs(30),
            check: evaluator_correctness,
        },
        Criterion {
            number: 5,
            name: "parser robustness",
            budget: Duration::from_secs(30),
            check: parser_robustness,
        },
        Criterion {
            number: 6,
            name: "end-to-end determinism",
            budget: Duration::from_secs(60),
            check: end_to_end_determinism,
        },
        Criterion {
            number: 7,
            name: "prompt fidelity",
            budget: Duration::from_secs(30),
            check: prompt_fidelity,
        },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed > c.budget {
                Err(format!("took {elapsed:.2?}, budget {:?}", c.budget))
            } else {
                Ok(detail)
            }
        });
        match result {
            Ok(detail) => println!("PASS  criterion {}: {} ({detail}; {elapsed:.2?})", c.number, c.name),
            Err(reason) => {
                failed += 1;
                println!("FAIL  criterion {}: {} ({reason}; {elapsed:.2?})", c.number, c.name);
            }
        }
    }
    println!("criterion 8 (live-backend smoke) is manual and not run here");
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
