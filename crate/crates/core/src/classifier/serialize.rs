//! Binary model persistence.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "LSHPMDL1" | format version u32 | kind u8 (0 sgnn, 1 lookup)
//! class names: u32 count, then per name u32 len + UTF-8 bytes
//! sgnn body:   projection config as key-value text (u32 len + bytes),
//!              basis matrix blob (u64 len + bytes)
//! lookup body: vocab tokens in index order (u64 count, u32 len + UTF-8 each),
//!              embedding matrix blob (u64 len + bytes)
//! head:        u32 dim count, the dims [in, h1, …, classes] as u64s, then
//!              per layer a weight-matrix blob (u64 len + bytes, same binary
//!              format as the basis matrix) and dims[l+1] bias f64s
//! ```
//!
//! Loading a saved model reproduces forward passes bit-for-bit.

use std::fs;
use std::path::Path;

use crate::kvconfig::KvMap;
use crate::projection::{BasisMatrix, OneHotVocab, ProjectionConfig};

use super::mlp::{DenseLayer, MlpHead};
use super::model::{ClassifierError, LookupModel, Model, ModelBody, SgnnModel};

const MODEL_MAGIC: &[u8; 8] = b"LSHPMDL1";
const FORMAT_VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> ClassifierError {
    ClassifierError::MalformedModel(msg.into())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ClassifierError> {
        if self.pos + n > self.bytes.len() {
            return Err(bad("unexpected end of model data"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, ClassifierError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ClassifierError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ClassifierError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ClassifierError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, ClassifierError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| bad("invalid UTF-8 string"))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn push_string(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn push_blob(out: &mut Vec<u8>, blob: &[u8]) {
    out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
    out.extend_from_slice(blob);
}

/// Serializes a model to its binary form.
pub fn save_model(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    match &model.body {
        ModelBody::Sgnn(_) => out.push(0),
        ModelBody::Lookup(_) => out.push(1),
    }
    out.extend_from_slice(&(model.class_names.len() as u32).to_le_bytes());
    for name in &model.class_names {
        push_string(&mut out, name);
    }
    match &model.body {
        ModelBody::Sgnn(m) => {
            push_string(&mut out, &m.projection_config.to_kv().emit());
            push_blob(&mut out, &m.basis.to_bytes());
        }
        ModelBody::Lookup(m) => {
            let tokens = m.vocab.ordered_tokens();
            out.extend_from_slice(&(tokens.len() as u64).to_le_bytes());
            for t in tokens {
                push_string(&mut out, t);
            }
            push_blob(&mut out, &m.embedding.to_bytes());
        }
    }
    let head = model.head();
    let dims = head.dims();
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in &dims {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    for layer in head.layers() {
        let blob = BasisMatrix::new(layer.w.clone())
            .expect("finite layer weights")
            .to_bytes();
        push_blob(&mut out, &blob);
        for v in &layer.b {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Deserializes a model saved by [`save_model`].
pub fn load_model(bytes: &[u8]) -> Result<Model, ClassifierError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let kind = r.u8()?;
    let n_classes = r.u32()? as usize;
    let mut class_names = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        class_names.push(r.string()?);
    }

    let body = match kind {
        0 => {
            let kv_text = r.string()?;
            let kv = KvMap::parse(&kv_text).map_err(|e| bad(format!("projection config: {e}")))?;
            let projection_config =
                ProjectionConfig::from_kv(&kv, ProjectionConfig::token_default(0))
                    .map_err(|e| bad(format!("projection config: {e}")))?;
            let blob_len = r.u64()? as usize;
            let basis = BasisMatrix::from_bytes(r.take(blob_len)?)
                .map_err(|e| bad(format!("basis: {e}")))?;
            ModelBody::Sgnn(SgnnModel {
                projection_config,
                basis,
                head: read_head(&mut r)?,
            })
        }
        1 => {
            let n_tokens = r.u64()? as usize;
            let mut tokens = Vec::with_capacity(n_tokens);
            for _ in 0..n_tokens {
                tokens.push(r.string()?);
            }
            let vocab = OneHotVocab::from_ordered_tokens(tokens);
            let blob_len = r.u64()? as usize;
            let embedding = BasisMatrix::from_bytes(r.take(blob_len)?)
                .map_err(|e| bad(format!("embedding: {e}")))?;
            ModelBody::Lookup(LookupModel {
                vocab,
                embedding,
                head: read_head(&mut r)?,
            })
        }
        other => return Err(bad(format!("unknown model kind {other}"))),
    };
    if !r.done() {
        return Err(bad("trailing bytes after model"));
    }
    let model = Model { class_names, body };
    if model.class_count() != model.head().output_dim() {
        return Err(bad("class count does not match head output dimension"));
    }
    Ok(model)
}

fn read_head(r: &mut Reader<'_>) -> Result<MlpHead, ClassifierError> {
    let n_dims = r.u32()? as usize;
    if n_dims < 2 {
        return Err(bad("head needs at least input and output dims"));
    }
    let mut dims = Vec::with_capacity(n_dims);
    for _ in 0..n_dims {
        let d = r.u64()? as usize;
        if d == 0 {
            return Err(bad("zero layer dimension"));
        }
        dims.push(d);
    }
    let mut layers = Vec::with_capacity(n_dims - 1);
    for pair in dims.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let blob_len = r.u64()? as usize;
        let w = BasisMatrix::from_bytes(r.take(blob_len)?)
            .map_err(|e| bad(format!("head weights: {e}")))?;
        if w.d() != out_dim || w.columns() != in_dim {
            return Err(bad("head weight shape does not match dims"));
        }
        let mut b = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            b.push(r.f64()?);
        }
        layers.push(DenseLayer {
            w: w.matrix().clone(),
            b,
        });
    }
    Ok(MlpHead::from_layers(layers))
}

/// Writes a model file.
pub fn save_model_to_path(model: &Model, path: &Path) -> Result<(), ClassifierError> {
    fs::write(path, save_model(model)).map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a model file.
pub fn load_model_from_path(path: &Path) -> Result<Model, ClassifierError> {
    let bytes = fs::read(path).map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_model(&bytes)
}
