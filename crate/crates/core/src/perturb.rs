//! Misspelling operators and the per-word perturbation protocol.
//!
//! Three character-level operators model common typos: `add` inserts random
//! characters, `swap` exchanges two characters, `drop` deletes characters.
//! All three touch only the *interior* of a word; the first and last
//! characters always survive. Words too short to have an interior pass
//! through unchanged (and still count as selected).
//!
//! A sentence is perturbed by visiting each whitespace-delimited word and,
//! with probability `p_perturb`, applying one operator chosen uniformly from
//! the spec's set (`n_edits` times). Datasets derive one RNG stream per
//! example from `(seed, example index)`, so output never depends on
//! iteration order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{Dataset, LabeledExample};
use crate::hashing::mix64;
use crate::kvconfig::{self, KvError, KvMap};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PerturbError {
    #[error("operation set must be non-empty")]
    EmptyOps,
    #[error("operation set contains a duplicate")]
    DuplicateOp,
    #[error("p_perturb must be in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("n_edits must be >= 1")]
    ZeroEdits,
    #[error("unknown perturbation op `{0}`")]
    UnknownOp(String),
    #[error("alphabet must be non-empty")]
    EmptyAlphabet,
    #[error("alphabet contains duplicate character {0:?}")]
    DuplicateAlphabetChar(char),
    #[error("alphabet must not contain whitespace")]
    WhitespaceInAlphabet,
    #[error(transparent)]
    Kv(#[from] KvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbOp {
    Add,
    Swap,
    Drop,
}

impl PerturbOp {
    pub const ALL: [PerturbOp; 3] = [PerturbOp::Add, PerturbOp::Swap, PerturbOp::Drop];

    pub fn name(self) -> &'static str {
        match self {
            PerturbOp::Add => "add",
            PerturbOp::Swap => "swap",
            PerturbOp::Drop => "drop",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, PerturbError> {
        match s {
            "add" => Ok(PerturbOp::Add),
            "swap" => Ok(PerturbOp::Swap),
            "drop" => Ok(PerturbOp::Drop),
            other => Err(PerturbError::UnknownOp(other.to_string())),
        }
    }
}

/// Whether `p_perturb` selects whole words or individual interior characters.
///
/// `PerWord` is the primary protocol. `PerChar` treats `p_perturb` as a
/// per-character probability: the number of edits for a word is the number
/// of interior characters that fire, each edit applying one operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerturbMode {
    #[default]
    PerWord,
    PerChar,
}

impl PerturbMode {
    fn kv_name(self) -> &'static str {
        match self {
            PerturbMode::PerWord => "per_word",
            PerturbMode::PerChar => "per_char",
        }
    }
}

/// Characters available to the `add` operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharAlphabet {
    chars: Vec<char>,
}

impl CharAlphabet {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Result<Self, PerturbError> {
        let chars: Vec<char> = chars.into_iter().collect();
        if chars.is_empty() {
            return Err(PerturbError::EmptyAlphabet);
        }
        for (i, &c) in chars.iter().enumerate() {
            if c.is_whitespace() {
                return Err(PerturbError::WhitespaceInAlphabet);
            }
            if chars[..i].contains(&c) {
                return Err(PerturbError::DuplicateAlphabetChar(c));
            }
        }
        Ok(CharAlphabet { chars })
    }

    /// The default insertion alphabet: lowercase `a`–`z`.
    pub fn lowercase_letters() -> Self {
        CharAlphabet {
            chars: (b'a'..=b'z').map(char::from).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}

/// The full perturbation protocol configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSpec {
    /// Non-empty, duplicate-free operator set.
    pub ops: Vec<PerturbOp>,
    /// Probability that any given word (or character, in `PerChar` mode) is
    /// perturbed.
    pub p_perturb: f64,
    /// Edits applied to each selected word.
    pub n_edits: usize,
    pub seed: u64,
    pub mode: PerturbMode,
    /// Ablation switch: apply every op in `ops` sequentially to a selected
    /// word instead of picking one uniformly. Off by default.
    pub apply_all: bool,
}

impl PerturbSpec {
    pub fn new(ops: Vec<PerturbOp>, p_perturb: f64, n_edits: usize, seed: u64) -> Self {
        PerturbSpec {
            ops,
            p_perturb,
            n_edits,
            seed,
            mode: PerturbMode::PerWord,
            apply_all: false,
        }
    }

    /// All three operators, one edit per selected word.
    pub fn all_ops(p_perturb: f64, seed: u64) -> Self {
        PerturbSpec::new(PerturbOp::ALL.to_vec(), p_perturb, 1, seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_p(mut self, p_perturb: f64) -> Self {
        self.p_perturb = p_perturb;
        self
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        if self.ops.is_empty() {
            return Err(PerturbError::EmptyOps);
        }
        for (i, op) in self.ops.iter().enumerate() {
            if self.ops[..i].contains(op) {
                return Err(PerturbError::DuplicateOp);
            }
        }
        if !self.p_perturb.is_finite() || !(0.0..=1.0).contains(&self.p_perturb) {
            return Err(PerturbError::InvalidProbability(self.p_perturb));
        }
        if self.n_edits == 0 {
            return Err(PerturbError::ZeroEdits);
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set(
            "ops",
            self.ops
                .iter()
                .map(|o| o.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.set("p_perturb", self.p_perturb.to_string());
        kv.set("n_edits", self.n_edits.to_string());
        kv.set("seed", self.seed.to_string());
        kv.set("mode", self.mode.kv_name());
        kv.set("apply_all", self.apply_all.to_string());
        kv
    }

    pub fn from_kv(kv: &KvMap, base: PerturbSpec) -> Result<Self, PerturbError> {
        let mut spec = base;
        if let Some(v) = kv.get("ops") {
            spec.ops = parse_ops(v)?;
        }
        if let Some(v) = kv.get("p_perturb") {
            spec.p_perturb = kvconfig::parse_f64("p_perturb", v)?;
        }
        if let Some(v) = kv.get("n_edits") {
            spec.n_edits = kvconfig::parse_usize("n_edits", v)?;
        }
        if let Some(v) = kv.get("seed") {
            spec.seed = kvconfig::parse_u64("seed", v)?;
        }
        if let Some(v) = kv.get("mode") {
            spec.mode = match v {
                "per_word" => PerturbMode::PerWord,
                "per_char" => PerturbMode::PerChar,
                other => {
                    return Err(KvError::InvalidValue {
                        key: "mode".into(),
                        value: other.into(),
                        reason: "expected per_word or per_char".into(),
                    }
                    .into())
                }
            };
        }
        if let Some(v) = kv.get("apply_all") {
            spec.apply_all = kvconfig::parse_bool("apply_all", v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses `add,swap,drop` (or the shorthand `all`).
pub fn parse_ops(s: &str) -> Result<Vec<PerturbOp>, PerturbError> {
    if s.trim() == "all" {
        return Ok(PerturbOp::ALL.to_vec());
    }
    let ops: Vec<PerturbOp> = s
        .split(',')
        .map(|p| PerturbOp::from_name(p.trim()))
        .collect::<Result<_, _>>()?;
    if ops.is_empty() {
        return Err(PerturbError::EmptyOps);
    }
    Ok(ops)
}

/// Inserts `n` random alphabet characters at random interior positions
/// (strictly after the first character, strictly before the last). Words
/// shorter than 2 characters pass through unchanged.
pub fn add_char(word: &str, n: usize, alphabet: &CharAlphabet, rng: &mut impl Rng) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.len() < 2 {
        return word.to_string();
    }
    for _ in 0..n {
        let pos = rng.random_range(1..chars.len());
        let ch = alphabet.chars()[rng.random_range(0..alphabet.len())];
        chars.insert(pos, ch);
    }
    chars.into_iter().collect()
}

/// Swaps two distinct random interior characters, `n` times. Words shorter
/// than 4 characters (fewer than 2 interior characters) pass through.
pub fn swap_chars(word: &str, n: usize, rng: &mut impl Rng) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.len() < 4 {
        return word.to_string();
    }
    let hi = chars.len() - 1;
    for _ in 0..n {
        let i = rng.random_range(1..hi);
        let mut j = rng.random_range(1..hi);
        while j == i {
            j = rng.random_range(1..hi);
        }
        chars.swap(i, j);
    }
    chars.into_iter().collect()
}

/// Removes `n` random interior characters (never the first or last). Words
/// shorter than 3 characters pass through; at most `len − 2` characters can
/// be dropped.
pub fn drop_char(word: &str, n: usize, rng: &mut impl Rng) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.len() < 3 {
        return word.to_string();
    }
    for _ in 0..n {
        if chars.len() <= 2 {
            break;
        }
        let pos = rng.random_range(1..chars.len() - 1);
        chars.remove(pos);
    }
    chars.into_iter().collect()
}

fn apply_op(
    op: PerturbOp,
    word: &str,
    n: usize,
    alphabet: &CharAlphabet,
    rng: &mut impl Rng,
) -> String {
    match op {
        PerturbOp::Add => add_char(word, n, alphabet, rng),
        PerturbOp::Swap => swap_chars(word, n, rng),
        PerturbOp::Drop => drop_char(word, n, rng),
    }
}

/// Applies the protocol to a single word. Returns the (possibly identical)
/// word and whether it was selected for perturbation.
///
/// The selection draw is always consumed first, so two specs differing only
/// in `p_perturb` make identical selection decisions from the same RNG
/// stream, so nested perturbation levels select nested word sets.
pub fn perturb_word(
    word: &str,
    spec: &PerturbSpec,
    alphabet: &CharAlphabet,
    rng: &mut impl Rng,
) -> (String, bool) {
    match spec.mode {
        PerturbMode::PerWord => {
            let u: f64 = rng.random();
            if u >= spec.p_perturb {
                return (word.to_string(), false);
            }
            let mut out;
            if spec.apply_all {
                out = word.to_string();
                for &op in &spec.ops {
                    out = apply_op(op, &out, spec.n_edits, alphabet, rng);
                }
            } else {
                let op = spec.ops[rng.random_range(0..spec.ops.len())];
                out = apply_op(op, word, spec.n_edits, alphabet, rng);
            }
            (out, true)
        }
        PerturbMode::PerChar => {
            let interior = word.chars().count().saturating_sub(2);
            let mut edits = 0usize;
            for _ in 0..interior {
                if rng.random::<f64>() < spec.p_perturb {
                    edits += 1;
                }
            }
            if edits == 0 {
                return (word.to_string(), false);
            }
            let mut out = word.to_string();
            for _ in 0..edits {
                let op = spec.ops[rng.random_range(0..spec.ops.len())];
                out = apply_op(op, &out, 1, alphabet, rng);
            }
            (out, true)
        }
    }
}

/// Word/selection counters reported by [`perturb_sentence_counted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PerturbStats {
    pub words_seen: usize,
    pub words_selected: usize,
}

fn perturb_sentence_with_rng(
    text: &str,
    spec: &PerturbSpec,
    alphabet: &CharAlphabet,
    rng: &mut impl Rng,
) -> (String, PerturbStats) {
    let mut out = String::with_capacity(text.len());
    let mut stats = PerturbStats::default();
    let mut i = 0;
    while i < text.len() {
        let c = text[i..].chars().next().unwrap();
        let is_ws = c.is_whitespace();
        let start = i;
        while i < text.len() {
            let c2 = text[i..].chars().next().unwrap();
            if c2.is_whitespace() != is_ws {
                break;
            }
            i += c2.len_utf8();
        }
        let run = &text[start..i];
        if is_ws {
            out.push_str(run);
        } else {
            stats.words_seen += 1;
            let (word, selected) = perturb_word(run, spec, alphabet, rng);
            if selected {
                stats.words_selected += 1;
            }
            out.push_str(&word);
        }
    }
    (out, stats)
}

/// Perturbs each whitespace-delimited word of `text` per the spec,
/// preserving the original separators exactly. Deterministic in
/// `(text, spec, alphabet)`.
pub fn perturb_sentence(text: &str, spec: &PerturbSpec, alphabet: &CharAlphabet) -> String {
    perturb_sentence_counted(text, spec, alphabet).0
}

/// [`perturb_sentence`] plus word/selection counts.
pub fn perturb_sentence_counted(
    text: &str,
    spec: &PerturbSpec,
    alphabet: &CharAlphabet,
) -> (String, PerturbStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    perturb_sentence_with_rng(text, spec, alphabet, &mut rng)
}

/// Perturbs one text with the RNG stream derived from `(spec.seed, index)`.
/// This is the per-example primitive behind [`perturb_dataset`].
pub fn perturb_text_indexed(
    text: &str,
    spec: &PerturbSpec,
    alphabet: &CharAlphabet,
    index: u64,
) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(spec.seed, index));
    perturb_sentence_with_rng(text, spec, alphabet, &mut rng).0
}

/// Perturbs every example's text; labels, order and class names are
/// untouched. Example `i` uses the RNG stream derived from
/// `(spec.seed, i)`, so the result is independent of evaluation order.
pub fn perturb_dataset(dataset: &Dataset, spec: &PerturbSpec, alphabet: &CharAlphabet) -> Dataset {
    let examples = dataset
        .examples
        .iter()
        .enumerate()
        .map(|(i, ex)| LabeledExample {
            text: perturb_text_indexed(&ex.text, spec, alphabet, i as u64),
            label: ex.label,
        })
        .collect();
    Dataset {
        examples,
        class_names: dataset.class_names.clone(),
    }
}
