//! Property tests for the cross-cutting invariants: totality, determinism,
//! operator laws, and serialization round-trips.

use proptest::prelude::*;

use lshproj::features::{extract_text_features, tokenize, FeatureConfig};
use lshproj::perturb::{add_char, drop_char, swap_chars, CharAlphabet, PerturbSpec};
use lshproj::projection::{hamming, project_text, ProjectionConfig, ProjectionVector};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word_strategy() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        any::<char>().prop_filter("no whitespace", |c| !c.is_whitespace()),
        0..14,
    )
    .prop_map(|chars| chars.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn feature_extraction_is_total_and_deterministic(text in ".{0,60}") {
        let cfg = FeatureConfig::sentence_default();
        let a = extract_text_features(&text, &cfg);
        let b = extract_text_features(&text, &cfg);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tokens_are_normalized(text in ".{0,60}") {
        for t in tokenize(&text) {
            prop_assert!(!t.as_str().is_empty());
            prop_assert!(!t.as_str().chars().any(char::is_whitespace));
            prop_assert!(!t.as_str().chars().any(char::is_uppercase));
        }
    }

    #[test]
    fn projection_bytes_and_hex_round_trip(text in ".{0,40}", k in 1usize..300) {
        let cfg = ProjectionConfig::sentence_default(11).with_k(k);
        let pv = project_text(&text, &cfg);
        prop_assert_eq!(pv.k(), k);
        let bytes = ProjectionVector::from_bytes(&pv.to_bytes()).unwrap();
        prop_assert_eq!(&bytes, &pv);
        let hex = ProjectionVector::from_hex(&pv.to_hex(), k).unwrap();
        prop_assert_eq!(&hex, &pv);
        prop_assert_eq!(pv.to_hex().len(), k.div_ceil(4));
    }

    #[test]
    fn hamming_is_a_metric_sample(a in ".{0,30}", b in ".{0,30}") {
        let cfg = ProjectionConfig::sentence_default(3).with_k(192);
        let pa = project_text(&a, &cfg);
        let pb = project_text(&b, &cfg);
        let d_ab = hamming(&pa, &pb).unwrap();
        let d_ba = hamming(&pb, &pa).unwrap();
        prop_assert_eq!(d_ab, d_ba);
        prop_assert!(d_ab <= 192);
        prop_assert_eq!(hamming(&pa, &pa).unwrap(), 0);
    }

    #[test]
    fn add_law(word in word_strategy(), n in 1usize..4, seed in any::<u64>()) {
        let alphabet = CharAlphabet::lowercase_letters();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = add_char(&word, n, &alphabet, &mut rng);
        let len = word.chars().count();
        if len < 2 {
            prop_assert_eq!(out, word);
        } else {
            prop_assert_eq!(out.chars().count(), len + n);
            prop_assert_eq!(out.chars().next(), word.chars().next());
            prop_assert_eq!(out.chars().last(), word.chars().last());
        }
    }

    #[test]
    fn swap_law(word in word_strategy(), n in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = swap_chars(&word, n, &mut rng);
        let len = word.chars().count();
        if len < 4 {
            prop_assert_eq!(out, word);
        } else {
            prop_assert_eq!(out.chars().count(), len);
            prop_assert_eq!(out.chars().next(), word.chars().next());
            prop_assert_eq!(out.chars().last(), word.chars().last());
            let mut x: Vec<char> = word.chars().collect();
            let mut y: Vec<char> = out.chars().collect();
            x.sort_unstable();
            y.sort_unstable();
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn drop_law(word in word_strategy(), n in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = drop_char(&word, n, &mut rng);
        let len = word.chars().count();
        if len < 3 {
            prop_assert_eq!(out, word);
        } else {
            prop_assert_eq!(out.chars().count(), len - n.min(len - 2));
            prop_assert_eq!(out.chars().next(), word.chars().next());
            prop_assert_eq!(out.chars().last(), word.chars().last());
        }
    }

    #[test]
    fn sentence_perturbation_deterministic_and_shape_preserving(
        words in proptest::collection::vec("[a-z]{1,10}", 0..12),
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let text = words.join(" ");
        let spec = PerturbSpec::all_ops(p, seed);
        let alphabet = CharAlphabet::lowercase_letters();
        let once = lshproj::perturb::perturb_sentence(&text, &spec, &alphabet);
        let twice = lshproj::perturb::perturb_sentence(&text, &spec, &alphabet);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.split_whitespace().count(), text.split_whitespace().count());
    }

    #[test]
    fn feature_config_kv_round_trip(
        char_orders in proptest::collection::btree_set(1usize..6, 1..4),
        word_orders in proptest::collection::btree_set(1usize..4, 0..3),
        binary in any::<bool>(),
    ) {
        let cfg = FeatureConfig {
            level: lshproj::features::FeatureLevel::CharAndWord,
            char_ngram_orders: char_orders,
            char_skip_pairs: [(2, 1)].into_iter().collect(),
            word_ngram_orders: word_orders,
            word_skip_pairs: std::collections::BTreeSet::new(),
            use_binary_counts: binary,
        };
        let emitted = cfg.to_kv().emit();
        let parsed = lshproj::kvconfig::KvMap::parse(&emitted).unwrap();
        let back = FeatureConfig::from_kv(&parsed, FeatureConfig::token_default()).unwrap();
        prop_assert_eq!(cfg, back);
    }
}
