//! The two classifier architectures.
//!
//! Both put the same MLP + softmax head on top of a `d`-dimensional input;
//! they differ only in how text becomes that input:
//!
//! - SGNN path: sentence projection `ℙ(x)` → sum of basis columns at the set
//!   bits (`W_K · ℙ(x)ᵀ`). No vocabulary, memory `O(K)`.
//! - Lookup baseline: per-token embedding columns (`W_V · 𝕐(x)ᵀ`) mean-pooled
//!   over the tokens, with a reserved UNK column for unseen words.
//!
//! The projection is a constant during training: gradients flow into the
//! basis/embedding matrix and the head, never into the hashing.

use std::io;

use thiserror::Error;

use crate::data::LabeledExample;
use crate::features::tokenize;
use crate::hashing::mix64;
use crate::matrix::Matrix;
use crate::perturb::PerturbError;
use crate::projection::{
    project_text, BasisMatrix, OneHotVocab, ProjectionConfig, ProjectionError, ProjectionVector,
};

use super::mlp::{softmax, HeadGrads, MlpHead};

/// Default embedding dimension d.
pub const DEFAULT_EMBED_DIM: usize = 64;
/// Default hidden layer widths.
pub const DEFAULT_HIDDEN: [usize; 2] = [256, 256];

#[derive(Error, Debug)]
pub enum ClassifierError {
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("batch must be non-empty")]
    EmptyBatch,
    #[error("dataset must be non-empty")]
    EmptyDataset,
    #[error("runs must be >= 1")]
    ZeroRuns,
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error("malformed model bytes: {0}")]
    MalformedModel(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Projection-based classifier: text → K-bit projection → basis embedding →
/// MLP head.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnnModel {
    pub projection_config: ProjectionConfig,
    /// Trainable `d × K` basis.
    pub basis: BasisMatrix,
    pub head: MlpHead,
}

/// Word-lookup baseline: text → mean-pooled trainable token embeddings →
/// the same MLP head. Stands in for the lookup-table paradigm.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupModel {
    pub vocab: OneHotVocab,
    /// Trainable `d × V` embedding table (column 0 is UNK).
    pub embedding: BasisMatrix,
    pub head: MlpHead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Sgnn,
    Lookup,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sgnn => "sgnn",
            ModelKind::Lookup => "lookup",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBody {
    Sgnn(SgnnModel),
    Lookup(LookupModel),
}

/// A trained (or trainable) classifier plus its label mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub class_names: Vec<String>,
    pub body: ModelBody,
}

impl Model {
    /// Fresh SGNN model. The basis starts at `U[-1/√K, 1/√K]`.
    pub fn new_sgnn(
        projection_config: ProjectionConfig,
        embed_dim: usize,
        hidden: &[usize],
        class_names: Vec<String>,
        init_seed: u64,
    ) -> Result<Self, ClassifierError> {
        projection_config.validate()?;
        assert!(embed_dim > 0);
        assert!(!class_names.is_empty());
        let k = projection_config.k;
        let basis =
            BasisMatrix::random_uniform(embed_dim, k, 1.0 / (k as f64).sqrt(), mix64(init_seed, 0));
        let head = MlpHead::new(
            &head_dims(embed_dim, hidden, class_names.len()),
            mix64(init_seed, 1),
        );
        Ok(Model {
            class_names,
            body: ModelBody::Sgnn(SgnnModel {
                projection_config,
                basis,
                head,
            }),
        })
    }

    /// Fresh lookup model over a fixed vocabulary. The embedding table
    /// starts at `U[-0.5, 0.5]`.
    pub fn new_lookup(
        vocab: OneHotVocab,
        embed_dim: usize,
        hidden: &[usize],
        class_names: Vec<String>,
        init_seed: u64,
    ) -> Self {
        assert!(embed_dim > 0);
        assert!(!class_names.is_empty());
        let embedding =
            BasisMatrix::random_uniform(embed_dim, vocab.size(), 0.5, mix64(init_seed, 0));
        let head = MlpHead::new(
            &head_dims(embed_dim, hidden, class_names.len()),
            mix64(init_seed, 1),
        );
        Model {
            class_names,
            body: ModelBody::Lookup(LookupModel {
                vocab,
                embedding,
                head,
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match &self.body {
            ModelBody::Sgnn(_) => ModelKind::Sgnn,
            ModelBody::Lookup(_) => ModelKind::Lookup,
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn embed_dim(&self) -> usize {
        self.rep_matrix().rows()
    }

    /// The trainable representation matrix (basis or embedding table).
    pub fn rep_matrix(&self) -> &Matrix {
        match &self.body {
            ModelBody::Sgnn(m) => m.basis.matrix(),
            ModelBody::Lookup(m) => m.embedding.matrix(),
        }
    }

    pub fn rep_matrix_mut(&mut self) -> &mut Matrix {
        match &mut self.body {
            ModelBody::Sgnn(m) => m.basis.matrix_mut(),
            ModelBody::Lookup(m) => m.embedding.matrix_mut(),
        }
    }

    pub fn head(&self) -> &MlpHead {
        match &self.body {
            ModelBody::Sgnn(m) => &m.head,
            ModelBody::Lookup(m) => &m.head,
        }
    }

    pub fn head_mut(&mut self) -> &mut MlpHead {
        match &mut self.body {
            ModelBody::Sgnn(m) => &mut m.head,
            ModelBody::Lookup(m) => &mut m.head,
        }
    }

    /// Precomputes the representation-side constants for a text: the sentence
    /// projection (SGNN) or the token index list (lookup). Neither carries
    /// gradients, so training caches these once per example.
    pub fn prepare(&self, text: &str) -> PreparedInput {
        match &self.body {
            ModelBody::Sgnn(m) => PreparedInput::Bits(project_text(text, &m.projection_config)),
            ModelBody::Lookup(m) => {
                PreparedInput::TokenIds(tokenize(text).iter().map(|t| m.vocab.lookup(t)).collect())
            }
        }
    }

    /// Dense input vector fed to the head.
    pub fn input_vector(&self, prepared: &PreparedInput) -> Vec<f64> {
        match (&self.body, prepared) {
            (ModelBody::Sgnn(m), PreparedInput::Bits(pv)) => {
                assert_eq!(pv.k(), m.basis.columns());
                let ones: Vec<usize> = pv.ones().collect();
                let mut out = vec![0.0; m.basis.d()];
                for (r, o) in out.iter_mut().enumerate() {
                    let row = m.basis.matrix().row(r);
                    let mut acc = 0.0;
                    for &j in &ones {
                        acc += row[j];
                    }
                    *o = acc;
                }
                out
            }
            (ModelBody::Lookup(m), PreparedInput::TokenIds(ids)) => {
                let d = m.embedding.d();
                let mut out = vec![0.0; d];
                if ids.is_empty() {
                    return out;
                }
                for &id in ids {
                    for (r, o) in out.iter_mut().enumerate() {
                        *o += m.embedding.matrix().get(r, id);
                    }
                }
                let inv = 1.0 / ids.len() as f64;
                for o in &mut out {
                    *o *= inv;
                }
                out
            }
            _ => panic!("prepared input does not match model kind"),
        }
    }

    /// Class probability vector for prepared input.
    pub fn forward_prepared(&self, prepared: &PreparedInput) -> Vec<f64> {
        softmax(&self.head().forward(&self.input_vector(prepared)))
    }
}

fn head_dims(embed_dim: usize, hidden: &[usize], classes: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(embed_dim);
    dims.extend_from_slice(hidden);
    dims.push(classes);
    dims
}

/// Gradient-free per-example input representation.
#[derive(Debug, Clone, PartialEq)]
pub enum PreparedInput {
    Bits(ProjectionVector),
    TokenIds(Vec<usize>),
}

/// Class probability vector for a raw text.
pub fn forward(model: &Model, text: &str) -> Vec<f64> {
    model.forward_prepared(&model.prepare(text))
}

/// Gradients for every trainable tensor of a [`Model`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    /// Gradient of the basis (d × K) or embedding table (d × V).
    pub rep: Matrix,
    pub head: HeadGrads,
}

impl Grads {
    pub fn zeros_like(model: &Model) -> Self {
        Grads {
            rep: Matrix::zeros(model.rep_matrix().rows(), model.rep_matrix().cols()),
            head: HeadGrads::zeros_like(model.head()),
        }
    }
}

/// Mean cross-entropy over the batch plus gradients for all trainable
/// parameters. The binary projection and token indices are constants.
pub fn loss_and_grads(
    model: &Model,
    batch: &[LabeledExample],
) -> Result<(f64, Grads), ClassifierError> {
    if batch.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    let classes = model.class_count();
    for ex in batch {
        if ex.label >= classes {
            return Err(ClassifierError::LabelOutOfRange {
                label: ex.label,
                classes,
            });
        }
    }
    let prepared: Vec<(PreparedInput, usize)> = batch
        .iter()
        .map(|ex| (model.prepare(&ex.text), ex.label))
        .collect();
    let indices: Vec<usize> = (0..prepared.len()).collect();
    Ok(batch_loss_grads(model, &prepared, &indices))
}

/// Core batch pass over pre-prepared examples selected by `indices`.
pub(crate) fn batch_loss_grads(
    model: &Model,
    items: &[(PreparedInput, usize)],
    indices: &[usize],
) -> (f64, Grads) {
    assert!(!indices.is_empty());
    let inv_batch = 1.0 / indices.len() as f64;
    let mut grads = Grads::zeros_like(model);
    let mut total_loss = 0.0;
    for &idx in indices {
        let (prepared, label) = &items[idx];
        let x = model.input_vector(prepared);
        let trace = model.head().forward_trace(&x);
        let probs = softmax(trace.logits());
        total_loss += -(probs[*label].max(1e-300)).ln();

        let mut d_logits = probs;
        d_logits[*label] -= 1.0;
        for d in &mut d_logits {
            *d *= inv_batch;
        }
        let dx = model.head().backward(&trace, &d_logits, &mut grads.head);

        match (&model.body, prepared) {
            (ModelBody::Sgnn(_), PreparedInput::Bits(pv)) => {
                let cols = grads.rep.cols();
                let data = grads.rep.data_mut();
                for j in pv.ones() {
                    for (r, &dr) in dx.iter().enumerate() {
                        data[r * cols + j] += dr;
                    }
                }
            }
            (ModelBody::Lookup(_), PreparedInput::TokenIds(ids)) => {
                if !ids.is_empty() {
                    let coef = 1.0 / ids.len() as f64;
                    let cols = grads.rep.cols();
                    let data = grads.rep.data_mut();
                    for &id in ids {
                        for (r, &dr) in dx.iter().enumerate() {
                            data[r * cols + id] += dr * coef;
                        }
                    }
                }
            }
            _ => unreachable!("prepared input matches model kind"),
        }
    }
    (total_loss * inv_batch, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Token;
    use crate::projection::OneHotVocab;

    fn sgnn_fixture() -> Model {
        let cfg = ProjectionConfig::sentence_default(5).with_k(96);
        Model::new_sgnn(
            cfg,
            10,
            &[8, 6],
            vec!["a".into(), "b".into(), "c".into()],
            77,
        )
        .unwrap()
    }

    fn lookup_fixture() -> Model {
        let tokens: Vec<Token> = ["book", "a", "flight", "play", "some", "music"]
            .iter()
            .map(|s| Token::new(*s).unwrap())
            .collect();
        let vocab = OneHotVocab::build(tokens.iter());
        Model::new_lookup(
            vocab,
            10,
            &[8, 6],
            vec!["a".into(), "b".into(), "c".into()],
            78,
        )
    }

    #[test]
    fn forward_outputs_probabilities() {
        for model in [sgnn_fixture(), lookup_fixture()] {
            let p = forward(&model, "book a flight");
            assert_eq!(p.len(), 3);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&x| x >= 0.0));
            // Determinism.
            assert_eq!(p, forward(&model, "book a flight"));
        }
    }

    #[test]
    fn empty_text_is_a_valid_forward_pass() {
        for model in [sgnn_fixture(), lookup_fixture()] {
            let p = forward(&model, "");
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zeroed_head_predicts_uniformly() {
        let mut model = sgnn_fixture();
        for layer in model.head_mut().layers_mut() {
            layer.w.data_mut().fill(0.0);
            layer.b.fill(0.0);
        }
        let p = forward(&model, "anything at all");
        for &x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_model_loss_is_ln_c() {
        let mut model = sgnn_fixture();
        for layer in model.head_mut().layers_mut() {
            layer.w.data_mut().fill(0.0);
            layer.b.fill(0.0);
        }
        let batch = vec![
            LabeledExample {
                text: "x y".into(),
                label: 0,
            },
            LabeledExample {
                text: "z w".into(),
                label: 2,
            },
        ];
        let (loss, _) = loss_and_grads(&model, &batch).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn duplicated_batch_has_identical_loss_and_grads() {
        let model = lookup_fixture();
        let batch = vec![
            LabeledExample {
                text: "book a flight".into(),
                label: 0,
            },
            LabeledExample {
                text: "play some music".into(),
                label: 1,
            },
        ];
        let mut doubled = batch.clone();
        doubled.extend(batch.iter().cloned());
        let (l1, g1) = loss_and_grads(&model, &batch).unwrap();
        let (l2, g2) = loss_and_grads(&model, &doubled).unwrap();
        // Mean invariance up to float summation order.
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        assert!(close(l1, l2), "{l1} vs {l2}");
        for (x, y) in g1.rep.data().iter().zip(g2.rep.data()) {
            assert!(close(*x, *y));
        }
        for (la, lb) in g1.head.layers.iter().zip(&g2.head.layers) {
            for (x, y) in la.0.data().iter().zip(lb.0.data()) {
                assert!(close(*x, *y));
            }
            for (x, y) in la.1.iter().zip(&lb.1) {
                assert!(close(*x, *y));
            }
        }
    }

    #[test]
    fn label_out_of_range_errors() {
        let model = sgnn_fixture();
        let batch = vec![LabeledExample {
            text: "x".into(),
            label: 9,
        }];
        assert!(matches!(
            loss_and_grads(&model, &batch),
            Err(ClassifierError::LabelOutOfRange {
                label: 9,
                classes: 3
            })
        ));
        assert!(matches!(
            loss_and_grads(&model, &[]),
            Err(ClassifierError::EmptyBatch)
        ));
    }

    #[test]
    fn whitespace_variants_share_predictions() {
        // Perturbations that leave the feature bag unchanged leave the
        // probabilities unchanged.
        let model = sgnn_fixture();
        let a = forward(&model, "book a flight");
        let b = forward(&model, "  book   a    flight ");
        assert_eq!(a, b);
    }
}
