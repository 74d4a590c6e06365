//! Feature extraction: text → bag of character/word n-grams and skip-grams.
//!
//! This is the first half of the projection pipeline. Raw text is tokenized
//! (lowercase, whitespace split, edge punctuation stripped) and decomposed
//! into morphological features. The resulting [`FeatureBag`] is the only
//! thing the projection ever sees, so the enabled families (and whether
//! counts are kept or clamped to presence) fully determine the
//! representation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::kvconfig::{self, KvError, KvMap};

/// Joiner placed between tokens inside word-gram payloads.
///
/// A non-printable sentinel (ASCII unit separator) that the tokenizer can
/// never emit, so the word bigram `ab⊔c` can't collide with a token `abc`
/// or with any char gram.
pub const WORD_JOINER: char = '\u{1f}';

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("token is empty")]
    Empty,
    #[error("token contains whitespace")]
    Whitespace,
    #[error("token contains uppercase characters")]
    Uppercase,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("no feature family enabled for level {0}")]
    NoFamiliesEnabled(String),
    #[error("n-gram order must be >= 1")]
    ZeroOrder,
    #[error("skip pair ({order}:{skip}) invalid: need order >= 2 and skip >= 1")]
    BadSkipPair { order: usize, skip: usize },
    #[error(transparent)]
    Kv(#[from] KvError),
}

/// A normalized word: non-empty, lowercase, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, TokenError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TokenError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace);
        }
        if text.chars().any(char::is_uppercase) {
            return Err(TokenError::Uppercase);
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    CharNgram,
    CharSkipgram,
    WordNgram,
    WordSkipgram,
}

impl FeatureKind {
    fn tag(self) -> u8 {
        match self {
            FeatureKind::CharNgram => 0,
            FeatureKind::CharSkipgram => 1,
            FeatureKind::WordNgram => 2,
            FeatureKind::WordSkipgram => 3,
        }
    }
}

/// One extracted gram. `skip` is 0 exactly for the contiguous kinds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Feature {
    pub kind: FeatureKind,
    pub payload: String,
    pub order: usize,
    pub skip: usize,
}

impl Feature {
    pub fn char_ngram(payload: impl Into<String>, order: usize) -> Self {
        Feature {
            kind: FeatureKind::CharNgram,
            payload: payload.into(),
            order,
            skip: 0,
        }
    }

    pub fn char_skipgram(payload: impl Into<String>, order: usize, skip: usize) -> Self {
        Feature {
            kind: FeatureKind::CharSkipgram,
            payload: payload.into(),
            order,
            skip,
        }
    }

    pub fn word_ngram(payload: impl Into<String>, order: usize) -> Self {
        Feature {
            kind: FeatureKind::WordNgram,
            payload: payload.into(),
            order,
            skip: 0,
        }
    }

    pub fn word_skipgram(payload: impl Into<String>, order: usize, skip: usize) -> Self {
        Feature {
            kind: FeatureKind::WordSkipgram,
            payload: payload.into(),
            order,
            skip,
        }
    }

    /// Canonical byte encoding hashed by the projection:
    /// kind tag, order (u32 LE), skip (u32 LE), then the UTF-8 payload.
    ///
    /// This layout is fixed; changing it would silently re-randomize every
    /// stored projection.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let payload = self.payload.as_bytes();
        let mut out = Vec::with_capacity(9 + payload.len());
        out.push(self.kind.tag());
        out.extend_from_slice(&(self.order as u32).to_le_bytes());
        out.extend_from_slice(&(self.skip as u32).to_le_bytes());
        out.extend_from_slice(payload);
        out
    }
}

/// Multiset of features with positive counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureBag {
    entries: HashMap<Feature, u32>,
}

impl FeatureBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, feature: Feature, count: u32) {
        if count > 0 {
            *self.entries.entry(feature).or_insert(0) += count;
        }
    }

    pub fn count(&self, feature: &Feature) -> u32 {
        self.entries.get(feature).copied().unwrap_or(0)
    }

    /// Number of distinct features.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Feature, u32)> {
        self.entries.iter().map(|(f, &c)| (f, c))
    }

    pub fn total_count(&self) -> u64 {
        self.entries.values().map(|&c| u64::from(c)).sum()
    }

    /// Count-summing union.
    pub fn merge(&mut self, other: FeatureBag) {
        for (f, c) in other.entries {
            self.add(f, c);
        }
    }

    /// Clamps every count to 1 (presence instead of frequency).
    pub fn clamp_binary(&mut self) {
        for c in self.entries.values_mut() {
            *c = 1;
        }
    }
}

impl FromIterator<(Feature, u32)> for FeatureBag {
    fn from_iter<I: IntoIterator<Item = (Feature, u32)>>(iter: I) -> Self {
        let mut bag = FeatureBag::new();
        for (f, c) in iter {
            bag.add(f, c);
        }
        bag
    }
}

/// Which gram families apply: char grams per token, word grams over the
/// token sequence, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureLevel {
    CharOnly,
    WordOnly,
    CharAndWord,
}

impl FeatureLevel {
    fn uses_char(self) -> bool {
        matches!(self, FeatureLevel::CharOnly | FeatureLevel::CharAndWord)
    }

    fn uses_word(self) -> bool {
        matches!(self, FeatureLevel::WordOnly | FeatureLevel::CharAndWord)
    }

    fn kv_name(self) -> &'static str {
        match self {
            FeatureLevel::CharOnly => "char",
            FeatureLevel::WordOnly => "word",
            FeatureLevel::CharAndWord => "char_and_word",
        }
    }

    fn from_kv_name(s: &str) -> Option<Self> {
        match s {
            "char" => Some(FeatureLevel::CharOnly),
            "word" => Some(FeatureLevel::WordOnly),
            "char_and_word" => Some(FeatureLevel::CharAndWord),
            _ => None,
        }
    }
}

/// Full inventory of enabled gram families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureConfig {
    pub level: FeatureLevel,
    pub char_ngram_orders: BTreeSet<usize>,
    pub char_skip_pairs: BTreeSet<(usize, usize)>,
    pub word_ngram_orders: BTreeSet<usize>,
    pub word_skip_pairs: BTreeSet<(usize, usize)>,
    /// Clamp counts to presence. On by default: the projection then moves
    /// only when the *set* of grams changes, not their frequencies.
    pub use_binary_counts: bool,
}

impl FeatureConfig {
    /// Default inventory for single-token projections:
    /// char n-grams n ∈ {1,2,3,4} plus char skip-grams (2,1).
    pub fn token_default() -> Self {
        FeatureConfig {
            level: FeatureLevel::CharOnly,
            char_ngram_orders: [1, 2, 3, 4].into_iter().collect(),
            char_skip_pairs: [(2, 1)].into_iter().collect(),
            word_ngram_orders: BTreeSet::new(),
            word_skip_pairs: BTreeSet::new(),
            use_binary_counts: true,
        }
    }

    /// Default inventory for whole-sentence projections:
    /// word n-grams n ∈ {1,2}, word skip-grams (2,1), and char n-grams
    /// n ∈ {2,3} of every token.
    pub fn sentence_default() -> Self {
        FeatureConfig {
            level: FeatureLevel::CharAndWord,
            char_ngram_orders: [2, 3].into_iter().collect(),
            char_skip_pairs: BTreeSet::new(),
            word_ngram_orders: [1, 2].into_iter().collect(),
            word_skip_pairs: [(2, 1)].into_iter().collect(),
            use_binary_counts: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for &o in self
            .char_ngram_orders
            .iter()
            .chain(self.word_ngram_orders.iter())
        {
            if o == 0 {
                return Err(ConfigError::ZeroOrder);
            }
        }
        for &(order, skip) in self
            .char_skip_pairs
            .iter()
            .chain(self.word_skip_pairs.iter())
        {
            if order < 2 || skip < 1 {
                return Err(ConfigError::BadSkipPair { order, skip });
            }
        }
        let char_enabled = self.level.uses_char()
            && (!self.char_ngram_orders.is_empty() || !self.char_skip_pairs.is_empty());
        let word_enabled = self.level.uses_word()
            && (!self.word_ngram_orders.is_empty() || !self.word_skip_pairs.is_empty());
        if !char_enabled && !word_enabled {
            return Err(ConfigError::NoFamiliesEnabled(
                self.level.kv_name().to_string(),
            ));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("level", self.level.kv_name());
        kv.set(
            "char_ngram_orders",
            kvconfig::emit_usize_list(self.char_ngram_orders.iter().copied()),
        );
        kv.set(
            "char_skip_pairs",
            kvconfig::emit_pair_list(self.char_skip_pairs.iter().copied()),
        );
        kv.set(
            "word_ngram_orders",
            kvconfig::emit_usize_list(self.word_ngram_orders.iter().copied()),
        );
        kv.set(
            "word_skip_pairs",
            kvconfig::emit_pair_list(self.word_skip_pairs.iter().copied()),
        );
        kv.set("use_binary_counts", self.use_binary_counts.to_string());
        kv
    }

    /// Reads the config from a parsed key-value map, starting from `base`
    /// for any keys not present.
    pub fn from_kv(kv: &KvMap, base: FeatureConfig) -> Result<Self, ConfigError> {
        let mut cfg = base;
        if let Some(v) = kv.get("level") {
            cfg.level = FeatureLevel::from_kv_name(v).ok_or_else(|| KvError::InvalidValue {
                key: "level".into(),
                value: v.into(),
                reason: "expected char, word or char_and_word".into(),
            })?;
        }
        if let Some(v) = kv.get("char_ngram_orders") {
            cfg.char_ngram_orders = kvconfig::parse_usize_list("char_ngram_orders", v)?
                .into_iter()
                .collect();
        }
        if let Some(v) = kv.get("char_skip_pairs") {
            cfg.char_skip_pairs = kvconfig::parse_pair_list("char_skip_pairs", v)?
                .into_iter()
                .collect();
        }
        if let Some(v) = kv.get("word_ngram_orders") {
            cfg.word_ngram_orders = kvconfig::parse_usize_list("word_ngram_orders", v)?
                .into_iter()
                .collect();
        }
        if let Some(v) = kv.get("word_skip_pairs") {
            cfg.word_skip_pairs = kvconfig::parse_pair_list("word_skip_pairs", v)?
                .into_iter()
                .collect();
        }
        if let Some(v) = kv.get("use_binary_counts") {
            cfg.use_binary_counts = kvconfig::parse_bool("use_binary_counts", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Lowercases, splits on Unicode whitespace, strips non-alphanumeric
/// characters from token edges, and drops tokens that become empty.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .filter_map(|raw| {
            let lowered = raw.to_lowercase();
            let trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric());
            Token::new(trimmed).ok()
        })
        .collect()
}

/// All contiguous character substrings of length `order`, with multiplicity.
pub fn char_ngrams(token: &Token, order: usize) -> FeatureBag {
    assert!(order >= 1, "n-gram order must be >= 1");
    let chars: Vec<char> = token.as_str().chars().collect();
    let mut bag = FeatureBag::new();
    if chars.len() < order {
        return bag;
    }
    for window in chars.windows(order) {
        bag.add(
            Feature::char_ngram(window.iter().collect::<String>(), order),
            1,
        );
    }
    bag
}

/// Grams over characters at positions `i, i+skip+1, i+2(skip+1), …`: a
/// uniform gap of `skip` skipped characters between selected ones.
pub fn char_skipgrams(token: &Token, order: usize, skip: usize) -> FeatureBag {
    assert!(order >= 2, "skip-gram order must be >= 2");
    assert!(skip >= 1, "skip must be >= 1");
    let chars: Vec<char> = token.as_str().chars().collect();
    let mut bag = FeatureBag::new();
    let step = skip + 1;
    let span = (order - 1) * step + 1;
    if chars.len() < span {
        return bag;
    }
    for start in 0..=(chars.len() - span) {
        let payload: String = (0..order).map(|j| chars[start + j * step]).collect();
        bag.add(Feature::char_skipgram(payload, order, skip), 1);
    }
    bag
}

/// Contiguous runs of `order` tokens joined with [`WORD_JOINER`].
pub fn word_ngrams(tokens: &[Token], order: usize) -> FeatureBag {
    assert!(order >= 1, "n-gram order must be >= 1");
    let mut bag = FeatureBag::new();
    if tokens.len() < order {
        return bag;
    }
    for window in tokens.windows(order) {
        bag.add(Feature::word_ngram(join_tokens(window.iter()), order), 1);
    }
    bag
}

/// Same gap rule as [`char_skipgrams`], applied over tokens.
pub fn word_skipgrams(tokens: &[Token], order: usize, skip: usize) -> FeatureBag {
    assert!(order >= 2, "skip-gram order must be >= 2");
    assert!(skip >= 1, "skip must be >= 1");
    let mut bag = FeatureBag::new();
    let step = skip + 1;
    let span = (order - 1) * step + 1;
    if tokens.len() < span {
        return bag;
    }
    for start in 0..=(tokens.len() - span) {
        let payload = join_tokens((0..order).map(|j| &tokens[start + j * step]));
        bag.add(Feature::word_skipgram(payload, order, skip), 1);
    }
    bag
}

fn join_tokens<'a>(tokens: impl Iterator<Item = &'a Token>) -> String {
    let mut out = String::new();
    for (i, t) in tokens.enumerate() {
        if i > 0 {
            out.push(WORD_JOINER);
        }
        out.push_str(t.as_str());
    }
    out
}

fn add_char_families(token: &Token, config: &FeatureConfig, bag: &mut FeatureBag) {
    for &order in &config.char_ngram_orders {
        bag.merge(char_ngrams(token, order));
    }
    for &(order, skip) in &config.char_skip_pairs {
        bag.merge(char_skipgrams(token, order, skip));
    }
}

/// Char-level features of a single token (union over all enabled char
/// families; word families don't apply to one token).
pub fn extract_token_features(token: &Token, config: &FeatureConfig) -> FeatureBag {
    let mut bag = FeatureBag::new();
    if config.level.uses_char() {
        add_char_families(token, config, &mut bag);
    }
    if config.use_binary_counts {
        bag.clamp_binary();
    }
    bag
}

/// Sentence-level features: word families over the token sequence plus char
/// families of every token, per the configured level.
pub fn extract_text_features(text: &str, config: &FeatureConfig) -> FeatureBag {
    let tokens = tokenize(text);
    let mut bag = FeatureBag::new();
    if config.level.uses_word() {
        for &order in &config.word_ngram_orders {
            bag.merge(word_ngrams(&tokens, order));
        }
        for &(order, skip) in &config.word_skip_pairs {
            bag.merge(word_skipgrams(&tokens, order, skip));
        }
    }
    if config.level.uses_char() {
        for token in &tokens {
            add_char_families(token, config, &mut bag);
        }
    }
    if config.use_binary_counts {
        bag.clamp_binary();
    }
    bag
}
