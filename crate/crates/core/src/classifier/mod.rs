//! Text classifiers over the projection pipeline: the SGNN-style model
//! (sentence projection → basis embedding → MLP → softmax) and the
//! word-lookup baseline (mean-pooled embedding table → identical MLP head),
//! trained from scratch with analytic gradients.

pub mod mlp;
pub mod model;
pub mod serialize;
pub mod train;

pub use mlp::{softmax, DenseLayer, HeadGrads, MlpHead};
pub use model::{
    forward, loss_and_grads, ClassifierError, Grads, LookupModel, Model, ModelBody, ModelKind,
    PreparedInput, SgnnModel, DEFAULT_EMBED_DIM, DEFAULT_HIDDEN,
};
pub use serialize::{load_model, load_model_from_path, save_model, save_model_to_path};
pub use train::{
    evaluate, robustness_eval, train, EpochRecord, RobustnessRow, TrainConfig, TrainLog,
};
