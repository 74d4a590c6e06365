//! Dataset and corpus ingestion.
//!
//! Labeled classification data travels as TSV (`label<TAB>text\n`, UTF-8, no
//! quoting; tabs inside text are unsupported). Analysis corpora are plain
//! text files read through a minimal markup filter. A seeded synthetic
//! generator produces linearly separable datasets for tests and experiments
//! without shipping any third-party corpus.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hashing::mix64;

#[derive(Error, Debug)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line}: expected `label<TAB>text`")]
    MalformedLine { path: String, line: usize },
    #[error("{path}: no examples found")]
    EmptyFile { path: String },
    #[error("split fractions must be positive and sum to 1, got {0:?}")]
    BadFractions((f64, f64, f64)),
    #[error("split produced an empty partition (sizes {0:?})")]
    EmptySplit((usize, usize, usize)),
    #[error("unknown class label `{0}`")]
    UnknownClass(String),
}

/// One classification example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub text: String,
    /// Index into the owning dataset's `class_names`.
    pub label: usize,
}

/// An ordered collection of labeled examples plus the label-index mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Re-indexes this dataset's labels against another class-name list
    /// (e.g. the one a model was trained with). Errors on unseen names.
    pub fn align_classes(&self, class_names: &[String]) -> Result<Dataset, DataError> {
        let index: HashMap<&str, usize> = class_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut examples = Vec::with_capacity(self.examples.len());
        for ex in &self.examples {
            let name = &self.class_names[ex.label];
            let &label = index
                .get(name.as_str())
                .ok_or_else(|| DataError::UnknownClass(name.clone()))?;
            examples.push(LabeledExample {
                text: ex.text.clone(),
                label,
            });
        }
        Ok(Dataset {
            examples,
            class_names: class_names.to_vec(),
        })
    }
}

/// Train/validation/test partitions sharing one class mapping.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Loads `label<TAB>text` lines. Class names are assigned indices in first
/// appearance order; line numbers in errors are 1-based physical lines.
pub fn load_tsv(path: &Path, has_header: bool) -> Result<Dataset, DataError> {
    let display = path.display().to_string();
    let content = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: display.clone(),
        source,
    })?;
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut examples = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if has_header && i == 0 {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or(DataError::MalformedLine {
            path: display.clone(),
            line: line_no,
        })?;
        let label_idx = match class_index.get(label) {
            Some(&idx) => idx,
            None => {
                let idx = class_names.len();
                class_names.push(label.to_string());
                class_index.insert(label.to_string(), idx);
                idx
            }
        };
        examples.push(LabeledExample {
            text: text.to_string(),
            label: label_idx,
        });
    }
    if examples.is_empty() {
        return Err(DataError::EmptyFile { path: display });
    }
    Ok(Dataset {
        examples,
        class_names,
    })
}

/// Writes the dataset back out as `label<TAB>text` lines.
pub fn save_tsv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = String::new();
    for ex in &dataset.examples {
        out.push_str(&dataset.class_names[ex.label]);
        out.push('\t');
        out.push_str(&ex.text);
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Seeded shuffle followed by contiguous partition. Sizes are
/// floor-allocated for validation and test, remainder goes to train.
pub fn split(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitDataset, DataError> {
    let (f_train, f_val, f_test) = fractions;
    let sum = f_train + f_val + f_test;
    if !(f_train > 0.0 && f_val > 0.0 && f_test > 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadFractions(fractions));
    }
    let n = dataset.len();
    let n_val = (f_val * n as f64).floor() as usize;
    let n_test = (f_test * n as f64).floor() as usize;
    let n_train = n - n_val - n_test;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(DataError::EmptySplit((n_train, n_val, n_test)));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let take = |range: std::ops::Range<usize>| Dataset {
        examples: range.map(|i| dataset.examples[order[i]].clone()).collect(),
        class_names: dataset.class_names.clone(),
    };
    Ok(SplitDataset {
        train: take(0..n_train),
        validation: take(n_train..n_train + n_val),
        test: take(n_train + n_val..n),
    })
}

/// Two-way seeded hold-out: shuffles and carves off `floor(val_frac · n)`
/// examples for validation, leaving the rest for training.
pub fn hold_out(
    dataset: &Dataset,
    val_frac: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !val_frac.is_finite() || val_frac <= 0.0 || val_frac >= 1.0 {
        return Err(DataError::BadFractions((1.0 - val_frac, val_frac, 0.0)));
    }
    let n = dataset.len();
    let n_val = (val_frac * n as f64).floor() as usize;
    if n_val == 0 || n_val == n {
        return Err(DataError::EmptySplit((n - n_val, n_val, 0)));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let pick = |idx: &[usize]| Dataset {
        examples: idx.iter().map(|&i| dataset.examples[i].clone()).collect(),
        class_names: dataset.class_names.clone(),
    };
    Ok((pick(&order[n_val..]), pick(&order[..n_val])))
}

/// Generates a linearly separable classification dataset.
///
/// Each class owns a disjoint pool of `keyword_pool_size` made-up keywords;
/// every example is `sentence_len` words drawn from its class pool and a
/// shared filler pool, with at least one class keyword guaranteed. A
/// word-unigram presence table therefore distinguishes all classes exactly.
pub fn synth_dataset(
    classes: usize,
    examples_per_class: usize,
    keyword_pool_size: usize,
    sentence_len: usize,
    seed: u64,
) -> Dataset {
    assert!(classes >= 1, "need at least one class");
    assert!(examples_per_class >= 1);
    assert!(keyword_pool_size >= 1);
    assert!(sentence_len >= 1);

    let mut word_rng = ChaCha8Rng::seed_from_u64(mix64(seed, 0));
    let mut taken: HashSet<String> = HashSet::new();
    let mut fresh_word = |rng: &mut ChaCha8Rng| loop {
        let len = rng.random_range(5..=9usize);
        let w: String = (0..len)
            .map(|_| char::from(b'a' + rng.random_range(0..26u8)))
            .collect();
        if taken.insert(w.clone()) {
            return w;
        }
    };

    let filler: Vec<String> = (0..keyword_pool_size)
        .map(|_| fresh_word(&mut word_rng))
        .collect();
    let pools: Vec<Vec<String>> = (0..classes)
        .map(|_| {
            (0..keyword_pool_size)
                .map(|_| fresh_word(&mut word_rng))
                .collect()
        })
        .collect();

    let mut examples = Vec::with_capacity(classes * examples_per_class);
    for (class, pool) in pools.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, 1 + class as u64));
        for _ in 0..examples_per_class {
            let mut words: Vec<&str> = Vec::with_capacity(sentence_len);
            let mut has_keyword = false;
            for _ in 0..sentence_len {
                if rng.random::<f64>() < 0.5 {
                    words.push(&pool[rng.random_range(0..pool.len())]);
                    has_keyword = true;
                } else {
                    words.push(&filler[rng.random_range(0..filler.len())]);
                }
            }
            if !has_keyword {
                let at = rng.random_range(0..sentence_len);
                words[at] = &pool[rng.random_range(0..pool.len())];
            }
            examples.push(LabeledExample {
                text: words.join(" "),
                label: class,
            });
        }
    }
    Dataset {
        examples,
        class_names: (0..classes).map(|c| format!("class{c}")).collect(),
    }
}

/// Reads up to `max_bytes` of a text file, replacing invalid UTF-8, and
/// drops every line whose first non-whitespace character is `<` (a minimal
/// markup filter for XML-ish dumps).
pub fn load_corpus(path: &Path, max_bytes: usize) -> Result<String, DataError> {
    let mut bytes = fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    bytes.truncate(max_bytes);
    let text = String::from_utf8_lossy(&bytes);
    let kept: Vec<&str> = text
        .lines()
        .filter(|line| !line.trim_start().starts_with('<'))
        .collect();
    Ok(kept.join("\n"))
}
