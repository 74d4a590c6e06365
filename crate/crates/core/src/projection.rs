//! The LSH transform: feature bag → K-bit binary projection.
//!
//! No projection matrix is ever stored. For a feature `f` with canonical
//! byte encoding `enc(f)` (see [`crate::features::Feature::canonical_bytes`])
//! and a seed `s`, the sign of `f` at bit position `j` is
//!
//! ```text
//! base(f)   = stable_hash64(s, enc(f))                  // FNV-1a + SplitMix64
//! block(b)  = splitmix64(base(f) ^ (b * 0x9e3779b97f4a7c15))
//! sign(f,j) = +1 if bit (j mod 64) of block(j / 64) is set, else −1
//! ```
//!
//! and bit `j` of the projection is 1 iff `Σ_f count(f) · sign(f, j) > 0`.
//! Ties (a zero sum, including the empty bag) give bit 0. The construction
//! is stateless and byte-stable across platforms: equal `(bag, k, seed)`
//! always produce the identical bit vector, while memory stays `O(K)`
//! regardless of vocabulary size. This exact recipe is a compatibility
//! contract: projections persisted by one build are only meaningful to
//! another if none of it changes.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::{
    extract_text_features, extract_token_features, tokenize, ConfigError, FeatureBag,
    FeatureConfig, Token,
};
use crate::hashing::{splitmix64, stable_hash64};
use crate::kvconfig::{self, KvMap};
use crate::matrix::Matrix;

/// Default projection dimension.
pub const DEFAULT_K: usize = 1120;

/// Reserved one-hot index for out-of-vocabulary tokens.
pub const UNK_INDEX: usize = 0;

const BASIS_MAGIC: &[u8; 8] = b"LSHPBM01";
const BLOCK_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ProjectionError {
    #[error("projection dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("projection dimension k must be >= 1")]
    InvalidK,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("malformed projection bytes: {0}")]
    MalformedBytes(String),
    #[error("malformed projection hex: {0}")]
    MalformedHex(String),
    #[error("basis matrix contains non-finite entries")]
    NonFiniteBasis,
    #[error("malformed basis matrix bytes: {0}")]
    MalformedBasis(String),
}

/// Everything that determines a projection: dimension, hash seed, and the
/// feature inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionConfig {
    pub k: usize,
    pub seed: u64,
    pub feature_config: FeatureConfig,
}

impl ProjectionConfig {
    /// K=1120 over the token-level feature inventory.
    pub fn token_default(seed: u64) -> Self {
        ProjectionConfig {
            k: DEFAULT_K,
            seed,
            feature_config: FeatureConfig::token_default(),
        }
    }

    /// K=1120 over the sentence-level feature inventory.
    pub fn sentence_default(seed: u64) -> Self {
        ProjectionConfig {
            k: DEFAULT_K,
            seed,
            feature_config: FeatureConfig::sentence_default(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<(), ProjectionError> {
        if self.k == 0 {
            return Err(ProjectionError::InvalidK);
        }
        self.feature_config.validate()?;
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("k", self.k.to_string());
        kv.set("seed", self.seed.to_string());
        for (key, value) in self.feature_config.to_kv().iter() {
            kv.set(key, value);
        }
        kv
    }

    pub fn from_kv(kv: &KvMap, base: ProjectionConfig) -> Result<Self, ProjectionError> {
        let mut cfg = base;
        if let Some(v) = kv.get("k") {
            cfg.k = kvconfig::parse_usize("k", v).map_err(ConfigError::from)?;
        }
        if let Some(v) = kv.get("seed") {
            cfg.seed = kvconfig::parse_u64("seed", v).map_err(ConfigError::from)?;
        }
        cfg.feature_config = FeatureConfig::from_kv(kv, cfg.feature_config)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A K-bit binary projection, packed 64 bits per block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProjectionVector {
    blocks: Vec<u64>,
    k: usize,
}

impl ProjectionVector {
    pub fn zeros(k: usize) -> Self {
        ProjectionVector {
            blocks: vec![0; k.div_ceil(64)],
            k,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut pv = ProjectionVector::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            if b {
                pv.set(j);
            }
        }
        pv
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bit(&self, j: usize) -> bool {
        assert!(j < self.k);
        (self.blocks[j >> 6] >> (j & 63)) & 1 == 1
    }

    fn set(&mut self, j: usize) {
        self.blocks[j >> 6] |= 1u64 << (j & 63);
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&j| self.bit(j))
    }

    /// Serializes as a u64 little-endian length header (K, in bits) followed
    /// by ⌈K/8⌉ bytes, most-significant-bit-first within each byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.k.div_ceil(8);
        let mut out = Vec::with_capacity(8 + nbytes);
        out.extend_from_slice(&(self.k as u64).to_le_bytes());
        for i in 0..nbytes {
            let mut byte = 0u8;
            for p in 0..8 {
                let j = i * 8 + p;
                if j < self.k && self.bit(j) {
                    byte |= 1 << (7 - p);
                }
            }
            out.push(byte);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProjectionError> {
        if bytes.len() < 8 {
            return Err(ProjectionError::MalformedBytes(
                "missing length header".into(),
            ));
        }
        let k = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let nbytes = k.div_ceil(8);
        let body = &bytes[8..];
        if body.len() != nbytes {
            return Err(ProjectionError::MalformedBytes(format!(
                "expected {nbytes} payload bytes for k={k}, got {}",
                body.len()
            )));
        }
        let mut pv = ProjectionVector::zeros(k);
        for j in 0..k {
            if (body[j / 8] >> (7 - (j % 8))) & 1 == 1 {
                pv.set(j);
            }
        }
        Ok(pv)
    }

    /// Hex text form: ⌈K/4⌉ lowercase digits, 4 bits per digit with bit 0 at
    /// the most significant position of the first digit.
    pub fn to_hex(&self) -> String {
        let ndigits = self.k.div_ceil(4);
        let mut out = String::with_capacity(ndigits);
        for n in 0..ndigits {
            let mut nibble = 0u8;
            for p in 0..4 {
                let j = n * 4 + p;
                if j < self.k && self.bit(j) {
                    nibble |= 1 << (3 - p);
                }
            }
            out.push(char::from_digit(u32::from(nibble), 16).unwrap());
        }
        out
    }

    pub fn from_hex(hex: &str, k: usize) -> Result<Self, ProjectionError> {
        let ndigits = k.div_ceil(4);
        if hex.len() != ndigits {
            return Err(ProjectionError::MalformedHex(format!(
                "expected {ndigits} digits for k={k}, got {}",
                hex.len()
            )));
        }
        let mut pv = ProjectionVector::zeros(k);
        for (n, ch) in hex.chars().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| ProjectionError::MalformedHex(format!("bad digit `{ch}`")))?
                as u8;
            for p in 0..4 {
                let j = n * 4 + p;
                if j < k && (nibble >> (3 - p)) & 1 == 1 {
                    pv.set(j);
                }
            }
        }
        Ok(pv)
    }
}

/// Number of differing bit positions.
pub fn hamming(a: &ProjectionVector, b: &ProjectionVector) -> Result<usize, ProjectionError> {
    if a.k != b.k {
        return Err(ProjectionError::DimensionMismatch {
            left: a.k,
            right: b.k,
        });
    }
    Ok(a.blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// Projects a feature bag to K bits. Deterministic in `(bag, config)`.
pub fn project(bag: &FeatureBag, config: &ProjectionConfig) -> ProjectionVector {
    let k = config.k;
    let nblocks = k.div_ceil(64);
    let mut acc = vec![0i64; k];
    for (feature, count) in bag.iter() {
        let base = stable_hash64(config.seed, &feature.canonical_bytes());
        let c = i64::from(count);
        for b in 0..nblocks {
            let bits = splitmix64(base ^ (b as u64).wrapping_mul(BLOCK_SALT));
            let upto = (k - b * 64).min(64);
            let slot = &mut acc[b * 64..b * 64 + upto];
            for (t, a) in slot.iter_mut().enumerate() {
                if (bits >> t) & 1 == 1 {
                    *a += c;
                } else {
                    *a -= c;
                }
            }
        }
    }
    let mut pv = ProjectionVector::zeros(k);
    for (j, &a) in acc.iter().enumerate() {
        if a > 0 {
            pv.set(j);
        }
    }
    pv
}

/// Sentence-level projection: extract features from the whole text, then
/// project.
pub fn project_text(text: &str, config: &ProjectionConfig) -> ProjectionVector {
    project(&extract_text_features(text, &config.feature_config), config)
}

/// One token-level projection per token of the text, in order.
pub fn project_tokens(text: &str, config: &ProjectionConfig) -> Vec<ProjectionVector> {
    tokenize(text)
        .iter()
        .map(|t| project(&extract_token_features(t, &config.feature_config), config))
        .collect()
}

/// Trainable dense matrix whose columns are combined according to projection
/// bits (or selected by one-hot index): shape `d × columns`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    m: Matrix,
}

impl BasisMatrix {
    pub fn new(m: Matrix) -> Result<Self, ProjectionError> {
        if !m.is_finite() {
            return Err(ProjectionError::NonFiniteBasis);
        }
        Ok(BasisMatrix { m })
    }

    /// `d × columns` matrix with entries drawn uniformly from `[-scale, scale]`.
    pub fn random_uniform(d: usize, columns: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(d, columns, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * scale);
        BasisMatrix { m }
    }

    /// Embedding dimension (number of rows).
    pub fn d(&self) -> usize {
        self.m.rows()
    }

    pub fn columns(&self) -> usize {
        self.m.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.m
    }

    /// Binary layout: magic, d (u64 LE), columns (u64 LE), then row-major
    /// f64 little-endian entries.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.m.data().len() * 8);
        out.extend_from_slice(BASIS_MAGIC);
        out.extend_from_slice(&(self.d() as u64).to_le_bytes());
        out.extend_from_slice(&(self.columns() as u64).to_le_bytes());
        for v in self.m.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProjectionError> {
        let malformed = |msg: &str| ProjectionError::MalformedBasis(msg.into());
        if bytes.len() < 24 {
            return Err(malformed("truncated header"));
        }
        if &bytes[..8] != BASIS_MAGIC {
            return Err(malformed("bad magic"));
        }
        let d = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let body = &bytes[24..];
        let want = d
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| malformed("dimension overflow"))?;
        if body.len() != want {
            return Err(malformed("payload size mismatch"));
        }
        let data: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        BasisMatrix::new(Matrix::from_vec(d, cols, data))
    }
}

/// Sums the basis columns selected by the projection's set bits.
pub fn embed(p: &ProjectionVector, basis: &BasisMatrix) -> Result<Vec<f64>, ProjectionError> {
    if basis.columns() != p.k() {
        return Err(ProjectionError::DimensionMismatch {
            left: basis.columns(),
            right: p.k(),
        });
    }
    let ones: Vec<usize> = p.ones().collect();
    let mut out = vec![0.0; basis.d()];
    for (r, o) in out.iter_mut().enumerate() {
        let row = basis.matrix().row(r);
        let mut acc = 0.0;
        for &j in &ones {
            acc += row[j];
        }
        *o = acc;
    }
    Ok(out)
}

/// Token → column index map with a reserved UNK slot at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotVocab {
    index: HashMap<String, usize>,
    ordered: Vec<String>,
}

impl OneHotVocab {
    /// Builds from tokens in first-appearance order; indices 1.. are assigned
    /// to distinct tokens, index 0 stays reserved for UNK.
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let mut index = HashMap::new();
        let mut ordered = Vec::new();
        for t in tokens {
            if !index.contains_key(t.as_str()) {
                ordered.push(t.as_str().to_string());
                index.insert(t.as_str().to_string(), ordered.len());
            }
        }
        OneHotVocab { index, ordered }
    }

    /// Rebuilds from tokens listed in index order (index 1 first).
    pub fn from_ordered_tokens(tokens: Vec<String>) -> Self {
        let mut index = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            index.insert(t.clone(), i + 1);
        }
        OneHotVocab {
            index,
            ordered: tokens,
        }
    }

    /// Vocabulary size V, including the UNK slot.
    pub fn size(&self) -> usize {
        self.ordered.len() + 1
    }

    /// Column index for a token; unknown tokens map to [`UNK_INDEX`].
    pub fn lookup(&self, token: &Token) -> usize {
        self.index.get(token.as_str()).copied().unwrap_or(UNK_INDEX)
    }

    /// Tokens in index order (index 1 first).
    pub fn ordered_tokens(&self) -> &[String] {
        &self.ordered
    }
}

/// Column of `w_v` for the token's one-hot index (UNK column when the token
/// is out of vocabulary).
pub fn embed_onehot(token: &Token, vocab: &OneHotVocab, w_v: &BasisMatrix) -> Vec<f64> {
    assert_eq!(
        w_v.columns(),
        vocab.size(),
        "embedding matrix columns must equal vocabulary size"
    );
    let idx = vocab.lookup(token);
    (0..w_v.d()).map(|r| w_v.matrix().get(r, idx)).collect()
}
