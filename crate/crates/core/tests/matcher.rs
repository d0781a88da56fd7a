mod common;

use common::*;
use hent::matcher::{lcs_ratio, longest_common_substring, match_urls, ratio_histogram, Threshold};
use proptest::prelude::*;

fn url_like() -> impl Strategy<Value = String> {
    "[a-c/.:é]{0,24}"
}

proptest! {
    #[test]
    fn lcs_matches_quadratic_table(a in url_like(), b in url_like()) {
        prop_assert_eq!(longest_common_substring(&a, &b), dp_lcs(&a, &b));
    }

    #[test]
    fn lcs_is_symmetric(a in url_like(), b in url_like()) {
        prop_assert_eq!(longest_common_substring(&a, &b), longest_common_substring(&b, &a));
    }

    #[test]
    fn ratio_bounds(a in url_like(), b in "[a-c/.:é]{1,24}") {
        let r = lcs_ratio(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r == 1.0, b.chars().count() == dp_lcs(&a, &b));
        prop_assert_eq!(lcs_ratio(&b, &b).unwrap(), 1.0);
    }

    #[test]
    fn greedy_equals_oracle(
        preds in prop::collection::vec(url_like(), 0..6),
        golds in prop::collection::vec("[a-c/.:é]{1,24}", 0..6),
        tau in prop_oneof![Just(Threshold::default()), (0.05f64..=1.0).prop_map(|t| Threshold::new(t).unwrap())],
    ) {
        let p: Vec<&str> = preds.iter().map(String::as_str).collect();
        let g: Vec<&str> = golds.iter().map(String::as_str).collect();
        let got = match_urls(&p, &g, tau).unwrap();
        let want = oracle_match(&p, &g, tau.value());
        let pairs: Vec<(usize, usize, f64)> = got.pairs.iter().map(|x| (x.gold, x.pred, x.ratio)).collect();
        prop_assert_eq!(pairs, want.pairs);
        prop_assert_eq!(got.missing, want.missing);
        prop_assert_eq!(got.spurious, want.spurious);
    }

    #[test]
    fn histogram_counts_every_pair(
        preds in prop::collection::vec(url_like(), 0..6),
        golds in prop::collection::vec("[a-c/.:é]{1,24}", 0..6),
    ) {
        let p: Vec<&str> = preds.iter().map(String::as_str).collect();
        let g: Vec<&str> = golds.iter().map(String::as_str).collect();
        let m = match_urls(&p, &g, Threshold::default()).unwrap();
        let h = ratio_histogram(std::slice::from_ref(&m));
        prop_assert_eq!(h.iter().sum::<usize>(), m.pairs.len());
    }
}

#[test]
fn identical_lists_pair_diagonally() {
    let urls: Vec<&str> = FRAGMENTS.to_vec();
    let m = match_urls(&urls, &urls, Threshold::new(1.0).unwrap()).unwrap();
    assert!(m.missing.is_empty() && m.spurious.is_empty());
    for p in &m.pairs {
        assert_eq!(p.ratio, 1.0);
        assert_eq!(urls[p.gold], urls[p.pred]);
    }
}

#[test]
fn empty_gold_url_is_rejected() {
    assert!(lcs_ratio("x", "").is_err());
    assert!(match_urls(&["x"], &[""], Threshold::default()).is_err());
}

#[test]
fn threshold_rejects_out_of_range() {
    for bad in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(Threshold::new(bad).is_err(), "{bad}");
    }
    assert!(serde_json::from_str::<Threshold>("0").is_err());
    assert_eq!(serde_json::from_str::<Threshold>("0.5").unwrap().value(), 0.5);
}
