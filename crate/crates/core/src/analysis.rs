//! Projection-space perturbation analysis.
//!
//! Quantifies how the binary projection behaves over a vocabulary: how far
//! apart distinct words sit (inter-word Hamming spread), how far a word's
//! projection moves under misspelling (bit shift), how that shift scales
//! with dimension and perturbation level, and how often a perturbed word
//! lands closer to some other vocabulary word than to its own original.
//!
//! All statistics are integer-accumulated and driven by per-item derived RNG
//! streams, so results are byte-identical across runs and independent of
//! thread scheduling.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::{extract_token_features, tokenize, Token};
use crate::hashing::{mix64, mix64_3};
use crate::perturb::{perturb_word, CharAlphabet, PerturbError, PerturbSpec};
use crate::projection::{hamming, project, ProjectionConfig, ProjectionError, ProjectionVector};

/// Seed axis separating pair sampling from perturbation draws.
const PAIR_AXIS: u64 = 0x7061_6972;
/// Seed axis for the collision study's per-word streams.
const COLLISION_AXIS: u64 = 0x636f_6c6c;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("corpus yields no tokens")]
    EmptyCorpus,
    #[error("vocabulary must be non-empty")]
    EmptyVocab,
    #[error("vocabulary words must be distinct")]
    DuplicateWords,
    #[error("vocabulary must contain at least {needed} words, got {got}")]
    VocabTooSmall { needed: usize, got: usize },
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// A deduplicated word sample drawn from some corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabSample {
    words: Vec<Token>,
    source: String,
}

impl VocabSample {
    pub fn new(words: Vec<Token>, source: impl Into<String>) -> Result<Self, AnalysisError> {
        if words.is_empty() {
            return Err(AnalysisError::EmptyVocab);
        }
        let mut seen = std::collections::HashSet::new();
        for w in &words {
            if !seen.insert(w.as_str()) {
                return Err(AnalysisError::DuplicateWords);
            }
        }
        Ok(VocabSample {
            words,
            source: source.into(),
        })
    }

    pub fn words(&self) -> &[Token] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Tokenizes a corpus and keeps the `max_words` most frequent distinct
/// words; ties break lexicographically.
pub fn build_vocab(
    corpus: &str,
    max_words: usize,
    source: impl Into<String>,
) -> Result<VocabSample, AnalysisError> {
    assert!(max_words >= 1, "max_words must be >= 1");
    let tokens = tokenize(corpus);
    if tokens.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let mut counts: HashMap<Token, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut ranked: Vec<(Token, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_words);
    VocabSample::new(ranked.into_iter().map(|(t, _)| t).collect(), source)
}

/// Mean/SD of sampled pairwise Hamming distances, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct HammingStats {
    pub mean_bits: f64,
    pub sd_bits: f64,
    pub pairs: usize,
}

fn project_vocab(vocab: &VocabSample, config: &ProjectionConfig) -> Vec<ProjectionVector> {
    vocab
        .words()
        .par_iter()
        .map(|w| project(&extract_token_features(w, &config.feature_config), config))
        .collect()
}

/// Samples `pair_samples` uniform random distinct word pairs and reports the
/// mean and standard deviation of their token-level projection distances.
pub fn pairwise_hamming_stats(
    vocab: &VocabSample,
    config: &ProjectionConfig,
    pair_samples: usize,
    seed: u64,
) -> Result<HammingStats, AnalysisError> {
    config.validate()?;
    assert!(pair_samples >= 1, "pair_samples must be >= 1");
    let n = vocab.len();
    if n < 2 {
        return Err(AnalysisError::VocabTooSmall { needed: 2, got: n });
    }
    let projections = project_vocab(vocab, config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0u64;
    let mut sum_sq = 0u128;
    for _ in 0..pair_samples {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n);
        while j == i {
            j = rng.random_range(0..n);
        }
        let d = hamming(&projections[i], &projections[j]).expect("same k") as u64;
        sum += d;
        sum_sq += u128::from(d) * u128::from(d);
    }
    let mean = sum as f64 / pair_samples as f64;
    let var = (sum_sq as f64 / pair_samples as f64 - mean * mean).max(0.0);
    Ok(HammingStats {
        mean_bits: mean,
        sd_bits: var.sqrt(),
        pairs: pair_samples,
    })
}

/// Result of one perturbation-shift measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub k: usize,
    /// The spec's perturbation probability for this measurement.
    pub perturb_level: f64,
    /// Mean Hamming distance between each word's projection and its
    /// perturbed projection, averaged over all words and repeats
    /// (unperturbed words contribute 0).
    pub mean_shift_bits: f64,
    /// Mean pairwise distance between distinct vocabulary words.
    pub mean_interword_bits: f64,
    /// `mean_shift_bits / mean_interword_bits`.
    pub ratio: f64,
    pub sample_count: usize,
}

/// Sampling effort for shift measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftParams {
    /// Word pairs sampled for the inter-word baseline.
    pub pair_samples: usize,
    /// Independent perturbation draws averaged per word.
    pub repeats: usize,
}

impl Default for ShiftParams {
    fn default() -> Self {
        ShiftParams {
            pair_samples: 20_000,
            repeats: 5,
        }
    }
}

fn shift_given(
    vocab: &VocabSample,
    config: &ProjectionConfig,
    spec: &PerturbSpec,
    alphabet: &CharAlphabet,
    repeats: usize,
    originals: &[ProjectionVector],
    interword: &HammingStats,
) -> ShiftReport {
    let total_shift: u64 = (0..vocab.len())
        .into_par_iter()
        .map(|i| {
            let word = vocab.words()[i].as_str();
            let mut sum = 0u64;
            for r in 0..repeats {
                // Stream depends only on (seed, repeat, word index): the
                // same word gets the same draws at every K, and nested
                // perturbation levels select nested word sets.
                let mut rng = ChaCha8Rng::seed_from_u64(mix64_3(spec.seed, r as u64, i as u64));
                let (perturbed, _) = perturb_word(word, spec, alphabet, &mut rng);
                if perturbed != word {
                    let token = Token::new(perturbed.to_lowercase())
                        .expect("perturbed word stays a valid token");
                    let pv = project(
                        &extract_token_features(&token, &config.feature_config),
                        config,
                    );
                    sum += hamming(&originals[i], &pv).expect("same k") as u64;
                }
            }
            sum
        })
        .sum();
    let sample_count = vocab.len() * repeats;
    let mean_shift = total_shift as f64 / sample_count as f64;
    let ratio = if interword.mean_bits > 0.0 {
        mean_shift / interword.mean_bits
    } else {
        0.0
    };
    ShiftReport {
        k: config.k,
        perturb_level: spec.p_perturb,
        mean_shift_bits: mean_shift,
        mean_interword_bits: interword.mean_bits,
        ratio,
        sample_count,
    }
}

/// Measures the mean perturbation-induced projection shift over the
/// vocabulary, together with the inter-word baseline and their ratio.
pub fn perturbation_shift(
    vocab: &VocabSample,
    config: &ProjectionConfig,
    spec: &PerturbSpec,
    alphabet: &CharAlphabet,
    params: &ShiftParams,
) -> Result<ShiftReport, AnalysisError> {
    assert!(params.repeats >= 1, "repeats must be >= 1");
    spec.validate()?;
    config.validate()?;
    let interword = pairwise_hamming_stats(
        vocab,
        config,
        params.pair_samples,
        mix64(spec.seed, PAIR_AXIS),
    )?;
    let originals = project_vocab(vocab, config);
    Ok(shift_given(
        vocab,
        config,
        spec,
        alphabet,
        params.repeats,
        &originals,
        &interword,
    ))
}

/// Grid evaluation of the shift over `k_values × perturb_levels`, ordered by
/// `(k, level)`. All cells share perturbation draws, so trends across the
/// grid are not confounded by resampling noise.
pub fn shift_sweep(
    vocab: &VocabSample,
    k_values: &[usize],
    perturb_levels: &[f64],
    base_config: &ProjectionConfig,
    spec_template: &PerturbSpec,
    alphabet: &CharAlphabet,
    params: &ShiftParams,
) -> Result<Vec<ShiftReport>, AnalysisError> {
    assert!(!k_values.is_empty(), "k_values must be non-empty");
    assert!(
        !perturb_levels.is_empty(),
        "perturb_levels must be non-empty"
    );
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut levels = perturb_levels.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut reports = Vec::with_capacity(ks.len() * levels.len());
    for &k in &ks {
        let config = ProjectionConfig {
            k,
            ..base_config.clone()
        };
        config.validate()?;
        let interword = pairwise_hamming_stats(
            vocab,
            &config,
            params.pair_samples,
            mix64(spec_template.seed, PAIR_AXIS),
        )?;
        let originals = project_vocab(vocab, &config);
        for &level in &levels {
            let spec = spec_template.clone().with_p(level);
            spec.validate()?;
            reports.push(shift_given(
                vocab,
                &config,
                &spec,
                alphabet,
                params.repeats,
                &originals,
                &interword,
            ));
        }
    }
    Ok(reports)
}

/// Result of the nearest-word collision study.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    /// Fraction of words whose perturbed projection lands strictly closer to
    /// some sampled other word than to the word's own original projection.
    pub confusion_fraction: f64,
    pub words: usize,
    pub neighbor_samples: usize,
}

/// For every word: perturb it, then compare the distance back to its own
/// projection against the minimum distance to `neighbor_samples` random
/// other vocabulary words.
pub fn collision_study(
    vocab: &VocabSample,
    config: &ProjectionConfig,
    spec: &PerturbSpec,
    alphabet: &CharAlphabet,
    neighbor_samples: usize,
) -> Result<CollisionReport, AnalysisError> {
    assert!(neighbor_samples >= 1, "neighbor_samples must be >= 1");
    spec.validate()?;
    config.validate()?;
    let n = vocab.len();
    if n < 2 {
        return Err(AnalysisError::VocabTooSmall { needed: 2, got: n });
    }
    let originals = project_vocab(vocab, config);
    let confused: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let word = vocab.words()[i].as_str();
            let mut rng = ChaCha8Rng::seed_from_u64(mix64_3(spec.seed, COLLISION_AXIS, i as u64));
            let (perturbed, _) = perturb_word(word, spec, alphabet, &mut rng);
            let pv = if perturbed == word {
                originals[i].clone()
            } else {
                let token = Token::new(perturbed.to_lowercase())
                    .expect("perturbed word stays a valid token");
                project(
                    &extract_token_features(&token, &config.feature_config),
                    config,
                )
            };
            let d_self = hamming(&pv, &originals[i]).expect("same k");
            for _ in 0..neighbor_samples {
                let mut j = rng.random_range(0..n);
                while j == i {
                    j = rng.random_range(0..n);
                }
                if hamming(&pv, &originals[j]).expect("same k") < d_self {
                    return 1u64;
                }
            }
            0u64
        })
        .sum();
    Ok(CollisionReport {
        confusion_fraction: confused as f64 / n as f64,
        words: n,
        neighbor_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_vocab(n: usize, seed: u64) -> VocabSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = std::collections::HashSet::new();
        let mut words = Vec::new();
        while words.len() < n {
            let len = rng.random_range(4..=9usize);
            let w: String = (0..len)
                .map(|_| char::from(b'a' + rng.random_range(0..26u8)))
                .collect();
            if seen.insert(w.clone()) {
                words.push(Token::new(w).unwrap());
            }
        }
        VocabSample::new(words, "test").unwrap()
    }

    #[test]
    fn build_vocab_dedup_and_rank() {
        let v = build_vocab("a b a", 10, "t").unwrap();
        let words: Vec<&str> = v.words().iter().map(|t| t.as_str()).collect();
        assert_eq!(words, ["a", "b"]);

        // Frequency first, then lexicographic tie-break.
        let v = build_vocab("a b a c", 2, "t").unwrap();
        let words: Vec<&str> = v.words().iter().map(|t| t.as_str()).collect();
        assert_eq!(words, ["a", "b"]);
    }

    #[test]
    fn build_vocab_empty_corpus_errors() {
        assert_eq!(build_vocab("", 5, "t"), Err(AnalysisError::EmptyCorpus));
        assert_eq!(
            build_vocab("!!! ...", 5, "t"),
            Err(AnalysisError::EmptyCorpus)
        );
    }

    #[test]
    fn vocab_sample_rejects_duplicates() {
        let words = vec![Token::new("a").unwrap(), Token::new("a").unwrap()];
        assert_eq!(
            VocabSample::new(words, "t"),
            Err(AnalysisError::DuplicateWords)
        );
    }

    #[test]
    fn pairwise_stats_of_two_words_is_their_distance() {
        let vocab = VocabSample::new(
            vec![Token::new("alpha").unwrap(), Token::new("omega").unwrap()],
            "t",
        )
        .unwrap();
        let cfg = ProjectionConfig::token_default(7).with_k(256);
        let stats = pairwise_hamming_stats(&vocab, &cfg, 500, 9).unwrap();
        let exact = {
            let ps = project_vocab(&vocab, &cfg);
            hamming(&ps[0], &ps[1]).unwrap() as f64
        };
        assert_eq!(stats.mean_bits, exact);
        assert_eq!(stats.sd_bits, 0.0);
    }

    #[test]
    fn pairwise_stats_needs_two_words() {
        let vocab = VocabSample::new(vec![Token::new("solo").unwrap()], "t").unwrap();
        let cfg = ProjectionConfig::token_default(7);
        assert_eq!(
            pairwise_hamming_stats(&vocab, &cfg, 10, 1),
            Err(AnalysisError::VocabTooSmall { needed: 2, got: 1 })
        );
    }

    #[test]
    fn zero_probability_means_zero_shift() {
        let vocab = test_vocab(50, 3);
        let cfg = ProjectionConfig::token_default(7).with_k(512);
        let spec = PerturbSpec::all_ops(0.0, 11);
        let report = perturbation_shift(
            &vocab,
            &cfg,
            &spec,
            &CharAlphabet::lowercase_letters(),
            &ShiftParams {
                pair_samples: 2000,
                repeats: 2,
            },
        )
        .unwrap();
        assert_eq!(report.mean_shift_bits, 0.0);
        assert_eq!(report.ratio, 0.0);
        assert!(report.mean_interword_bits > 0.0);
    }

    #[test]
    fn shift_is_ordered_and_bounded() {
        let vocab = test_vocab(120, 5);
        let cfg = ProjectionConfig::token_default(21).with_k(512);
        let alphabet = CharAlphabet::lowercase_letters();
        let params = ShiftParams {
            pair_samples: 4000,
            repeats: 3,
        };
        let low = perturbation_shift(
            &vocab,
            &cfg,
            &PerturbSpec::all_ops(0.1, 13),
            &alphabet,
            &params,
        )
        .unwrap();
        let high = perturbation_shift(
            &vocab,
            &cfg,
            &PerturbSpec::all_ops(0.3, 13),
            &alphabet,
            &params,
        )
        .unwrap();
        assert!(low.mean_shift_bits <= high.mean_shift_bits);
        for r in [&low, &high] {
            assert!(0.0 <= r.mean_shift_bits);
            assert!(r.mean_shift_bits <= r.mean_interword_bits);
            assert!(r.mean_interword_bits <= cfg.k as f64);
        }
    }

    #[test]
    fn shift_reports_are_reproducible() {
        let vocab = test_vocab(60, 17);
        let cfg = ProjectionConfig::token_default(2).with_k(256);
        let spec = PerturbSpec::all_ops(0.2, 23);
        let params = ShiftParams {
            pair_samples: 1000,
            repeats: 2,
        };
        let a = perturbation_shift(
            &vocab,
            &cfg,
            &spec,
            &CharAlphabet::lowercase_letters(),
            &params,
        )
        .unwrap();
        let b = perturbation_shift(
            &vocab,
            &cfg,
            &spec,
            &CharAlphabet::lowercase_letters(),
            &params,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pairwise_mean_scales_with_k() {
        // The sign-hash construction is scale-invariant in K: the mean
        // pairwise distance stays near K/2 at every dimension.
        let vocab = test_vocab(300, 8);
        let mut per_k = Vec::new();
        for k in [840usize, 1120] {
            let cfg = ProjectionConfig::token_default(19).with_k(k);
            let stats = pairwise_hamming_stats(&vocab, &cfg, 20_000, 3).unwrap();
            let normalized = stats.mean_bits / k as f64;
            assert!(
                (0.45..=0.55).contains(&normalized),
                "K={k}: mean {:.1} bits ({normalized:.3}·K)",
                stats.mean_bits
            );
            per_k.push(normalized);
        }
        assert!(
            (per_k[0] - per_k[1]).abs() < 0.02,
            "normalized means diverge across K: {per_k:?}"
        );
    }

    #[test]
    fn sweep_grid_shape_and_order() {
        let vocab = test_vocab(40, 29);
        let base = ProjectionConfig::token_default(5);
        let spec = PerturbSpec::all_ops(0.0, 31);
        let reports = shift_sweep(
            &vocab,
            &[128, 64],
            &[0.10, 0.05],
            &base,
            &spec,
            &CharAlphabet::lowercase_letters(),
            &ShiftParams {
                pair_samples: 500,
                repeats: 1,
            },
        )
        .unwrap();
        assert_eq!(reports.len(), 4);
        let cells: Vec<(usize, f64)> = reports.iter().map(|r| (r.k, r.perturb_level)).collect();
        assert_eq!(
            cells,
            vec![(64, 0.05), (64, 0.10), (128, 0.05), (128, 0.10)]
        );
    }

    #[test]
    fn collision_zero_probability_never_confuses() {
        let vocab = test_vocab(30, 41);
        let cfg = ProjectionConfig::token_default(2).with_k(256);
        let report = collision_study(
            &vocab,
            &cfg,
            &PerturbSpec::all_ops(0.0, 43),
            &CharAlphabet::lowercase_letters(),
            10,
        )
        .unwrap();
        assert_eq!(report.confusion_fraction, 0.0);
    }

    #[test]
    fn collision_needs_two_words() {
        let vocab = VocabSample::new(vec![Token::new("solo").unwrap()], "t").unwrap();
        let cfg = ProjectionConfig::token_default(2);
        assert_eq!(
            collision_study(
                &vocab,
                &cfg,
                &PerturbSpec::all_ops(0.2, 1),
                &CharAlphabet::lowercase_letters(),
                5,
            ),
            Err(AnalysisError::VocabTooSmall { needed: 2, got: 1 })
        );
    }
}
