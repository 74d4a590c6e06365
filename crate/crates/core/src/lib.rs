//! Binary LSH projection representations for text.
//!
//! Instead of looking tokens up in an `O(V)`-sized embedding table, text is
//! decomposed into character/word n-grams and skip-grams and hashed on the
//! fly into a fixed `K`-bit binary vector. Memory stays `O(K)` no matter how
//! large the vocabulary grows, and because most grams survive a misspelling,
//! the representation moves only slightly under character noise.
//!
//! The crate is organized around that pipeline:
//!
//! - [`features`]: text → bag of n-gram/skip-gram features
//! - [`projection`]: feature bag → `K`-bit projection, Hamming utilities,
//!   and the basis-matrix embedding that replaces a lookup table
//! - [`perturb`]: add/swap/drop misspelling operators and per-word
//!   perturbation of sentences and datasets
//! - [`analysis`]: projection-space statistics (inter-word Hamming spread,
//!   perturbation-induced bit shift, proportionality sweeps, collisions)
//! - [`classifier`]: a projection-based text classifier and a word-lookup
//!   baseline sharing the same MLP head, trained from scratch
//! - [`data`]: TSV datasets, plain-text corpora, and a synthetic generator
//!
//! All randomness is seeded and all hashing is stateless, so every result in
//! the crate is reproducible bit-for-bit from its inputs and seeds.

pub mod analysis;
pub mod classifier;
pub mod data;
pub mod features;
pub mod hashing;
pub mod kvconfig;
pub mod matrix;
pub mod perturb;
pub mod projection;

pub use features::{FeatureBag, FeatureConfig, Token};
pub use perturb::{CharAlphabet, PerturbSpec};
pub use projection::{ProjectionConfig, ProjectionVector};
