//! Parser versus the independent recognizer, plus round-trip properties over
//! generated classmarks.

mod support;

use classmark::notation::{normalize, parse, parse_str, serialize};
use proptest::prelude::*;
use support::corpus::{generated, Generator};
use support::oracle;

fn agrees(s: &str) -> bool {
    oracle::accepts(s) == parse_str(s).is_ok()
}

#[test]
fn reduced_alphabet_up_to_length_five() {
    let alphabet: Vec<char> = "019.+:/()=[]\"".chars().collect();
    let (checked, bad) = support::disagreements(&alphabet, 5, agrees);
    assert!(checked > 400_000);
    assert!(bad.is_empty(), "{:?}", &bad[..bad.len().min(20)]);
}

#[test]
fn extended_alphabet_up_to_length_five() {
    // letters, suffixes, hyphen and apostrophe specials
    let alphabet: Vec<char> = "09.:(=\"-'A*a[]".chars().collect();
    let (_, bad) = support::disagreements(&alphabet, 5, agrees);
    assert!(bad.is_empty(), "{:?}", &bad[..bad.len().min(20)]);
}

#[test]
fn generated_corpus_is_in_the_language_and_round_trips() {
    for c in generated(7, 2_000) {
        assert!(oracle::accepts(&c), "generator produced {c}");
        let tree = parse_str(&c).unwrap_or_else(|e| panic!("{c}: {e}"));
        assert_eq!(serialize(&tree), c);
    }
}

#[test]
fn noisy_whitespace_normalizes_away() {
    let mut g = Generator::new(11);
    for _ in 0..1_000 {
        let c = g.classmark();
        let raw = g.with_noise(&c);
        let cm = normalize(&raw).unwrap();
        assert_eq!(cm.normalized, c, "raw {raw:?}");
        assert_eq!(serialize(&parse(&cm).unwrap()), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn arbitrary_strings_agree(s in "[0-9.+:/()=\\[\\]\"'*A-Ca-c -]{0,9}") {
        let cm = normalize(&s);
        if let Ok(cm) = cm {
            prop_assert_eq!(oracle::accepts(&cm.normalized), parse(&cm).is_ok(), "input {:?}", s);
        }
    }

    #[test]
    fn parse_errors_point_inside_the_input(s in "[0-9.+:/()=\\[\\]\"-]{0,12}") {
        if let Err(e) = parse_str(&s) {
            prop_assert!(e.position <= s.chars().count());
        }
    }

    #[test]
    fn generated_classmarks_round_trip(seed in any::<u64>()) {
        let c = Generator::new(seed).classmark();
        let tree = parse_str(&c).unwrap();
        prop_assert_eq!(serialize(&tree), c.clone());
        prop_assert_eq!(parse_str(&c).unwrap(), tree);
    }
}
