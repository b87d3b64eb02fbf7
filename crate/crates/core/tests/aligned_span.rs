mod common;

use common::oracle;
use neolex_core::wiktionary::parse_aligned_span;
use proptest::prelude::*;

#[test]
fn fixed_cases() {
    let cases = [
        ("<aligned_word> YouTube </aligned_word>", Some("YouTube")),
        (
            "Sure.\n<aligned_word>\nlateral thinkers\n</aligned_word>\nDone",
            Some("lateral thinkers"),
        ),
        (
            "<aligned_word>a</aligned_word><aligned_word>b</aligned_word>",
            Some("a"),
        ),
        ("<aligned_word></aligned_word>", Some("")),
        ("<aligned_word>open only", None),
        ("no tags at all", None),
        ("</aligned_word> reversed <aligned_word>", None),
    ];
    for (text, want) in cases {
        assert_eq!(parse_aligned_span(text).ok().as_deref(), want, "{text:?}");
    }
}

fn piece() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("<aligned_word>".to_string()),
        Just("</aligned_word>".to_string()),
        Just("<aligned_word".to_string()),
        Just(" ".to_string()),
        Just("\n".to_string()),
        "[a-zA-Z給她愛 ]{0,8}",
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]
    #[test]
    fn matches_find_based_oracle(parts in prop::collection::vec(piece(), 0..10)) {
        let text: String = parts.concat();
        prop_assert_eq!(parse_aligned_span(&text).ok(), oracle::aligned_span(&text));
    }
}
