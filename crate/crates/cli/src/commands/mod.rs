pub mod analyze;
pub mod attack;
pub mod evaluate;
pub mod perturb;
pub mod project;
pub mod train;

use std::fs;
use std::path::Path;

use anyhow::Context;
use lshproj::kvconfig::KvMap;
use lshproj::perturb::CharAlphabet;

/// Percentages are accepted as either probabilities (0.05) or percents (5):
/// anything above 1 is divided by 100.
pub fn normalize_probability(p: f64) -> f64 {
    if p > 1.0 {
        p / 100.0
    } else {
        p
    }
}

pub fn load_kv(path: &Path) -> anyhow::Result<KvMap> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    KvMap::parse(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// `--alphabet` string → insertion alphabet; default lowercase a–z.
pub fn parse_alphabet(s: Option<&str>) -> anyhow::Result<CharAlphabet> {
    match s {
        None => Ok(CharAlphabet::lowercase_letters()),
        Some(text) => Ok(CharAlphabet::new(text.chars())?),
    }
}
