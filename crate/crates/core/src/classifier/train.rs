//! From-scratch training: mini-batch Adam with early stopping on validation
//! accuracy, plus evaluation and the misspelling-robustness harness.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::hashing::mix64;
use crate::perturb::{perturb_dataset, CharAlphabet, PerturbSpec};

use super::model::{batch_loss_grads, ClassifierError, Grads, Model, PreparedInput};

/// Optimizer and schedule settings. Defaults: Adam(0.9, 0.999, 1e-8),
/// learning rate 1e-4, batch size 32, early-stopping patience 10.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 32,
            patience: 10,
            max_epochs: 50,
            seed,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }

    pub fn with_max_epochs(mut self, max_epochs: usize) -> Self {
        self.max_epochs = max_epochs;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    /// True when patience ran out before `max_epochs`.
    pub stopped_early: bool,
}

struct AdamState {
    m: Grads,
    v: Grads,
    t: u64,
}

impl AdamState {
    fn new(model: &Model) -> Self {
        AdamState {
            m: Grads::zeros_like(model),
            v: Grads::zeros_like(model),
            t: 0,
        }
    }
}

fn adam_slice(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &TrainConfig,
) {
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..param.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

fn adam_step(model: &mut Model, grads: &Grads, state: &mut AdamState, cfg: &TrainConfig) {
    state.t += 1;
    let t = state.t;
    adam_slice(
        model.rep_matrix_mut().data_mut(),
        grads.rep.data(),
        state.m.rep.data_mut(),
        state.v.rep.data_mut(),
        t,
        cfg,
    );
    let head = model.head_mut();
    for (l, layer) in head.layers_mut().iter_mut().enumerate() {
        adam_slice(
            layer.w.data_mut(),
            grads.head.layers[l].0.data(),
            state.m.head.layers[l].0.data_mut(),
            state.v.head.layers[l].0.data_mut(),
            t,
            cfg,
        );
        adam_slice(
            &mut layer.b,
            &grads.head.layers[l].1,
            &mut state.m.head.layers[l].1,
            &mut state.v.head.layers[l].1,
            t,
            cfg,
        );
    }
}

fn validate_dataset(model: &Model, dataset: &Dataset) -> Result<(), ClassifierError> {
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let classes = model.class_count();
    for ex in &dataset.examples {
        if ex.label >= classes {
            return Err(ClassifierError::LabelOutOfRange {
                label: ex.label,
                classes,
            });
        }
    }
    Ok(())
}

fn prepare_dataset(model: &Model, dataset: &Dataset) -> Vec<(PreparedInput, usize)> {
    dataset
        .examples
        .iter()
        .map(|ex| (model.prepare(&ex.text), ex.label))
        .collect()
}

/// Lowest-index argmax.
fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

fn accuracy_prepared(model: &Model, items: &[(PreparedInput, usize)]) -> f64 {
    let correct = items
        .iter()
        .filter(|(input, label)| argmax(&model.forward_prepared(input)) == *label)
        .count();
    correct as f64 / items.len() as f64
}

/// Trains in place with mini-batch Adam and early stopping on validation
/// accuracy; on return the model holds the best-validation snapshot.
/// Fixed seeds give bit-identical trajectories.
pub fn train(
    model: &mut Model,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainLog, ClassifierError> {
    assert!(cfg.batch_size >= 1);
    assert!(cfg.max_epochs >= 1);
    assert!(cfg.patience >= 1);
    validate_dataset(model, train_set)?;
    validate_dataset(model, val_set)?;

    let train_items = prepare_dataset(model, train_set);
    let val_items = prepare_dataset(model, val_set);

    let mut state = AdamState::new(model);
    let mut best_snapshot = model.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut epochs_without_improvement = 0;
    let mut log = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_items.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (loss, grads) = batch_loss_grads(model, &train_items, chunk);
            adam_step(model, &grads, &mut state, cfg);
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / train_items.len() as f64;
        let val_accuracy = accuracy_prepared(model, &val_items);
        log.push(EpochRecord {
            epoch,
            train_loss,
            val_accuracy,
        });

        if val_accuracy > best_val {
            best_val = val_accuracy;
            best_epoch = epoch;
            best_snapshot = model.clone();
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if epochs_without_improvement >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    *model = best_snapshot;
    Ok(TrainLog {
        epochs: log,
        best_epoch,
        best_val_accuracy: best_val,
        stopped_early,
    })
}

/// Fraction of argmax-correct predictions (ties resolve to the lowest class
/// index).
pub fn evaluate(model: &Model, test_set: &Dataset) -> Result<f64, ClassifierError> {
    validate_dataset(model, test_set)?;
    let items = prepare_dataset(model, test_set);
    Ok(accuracy_prepared(model, &items))
}

/// One row of the robustness table: accuracy drop under a perturbation spec.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub spec: PerturbSpec,
    pub clean_accuracy: f64,
    /// Per-run drops (clean − perturbed), one per perturbation seed.
    pub drops: Vec<f64>,
    pub mean_drop: f64,
    /// Population standard deviation of the drops.
    pub sd_drop: f64,
}

/// Evaluates the trained model against each spec over `runs` derived
/// perturbation seeds, reporting the accuracy drop mean ± SD. The model is
/// trained once and reused; only perturbation seeds vary across runs.
pub fn robustness_eval(
    model: &Model,
    test_set: &Dataset,
    specs: &[PerturbSpec],
    alphabet: &CharAlphabet,
    runs: usize,
) -> Result<Vec<RobustnessRow>, ClassifierError> {
    if runs == 0 {
        return Err(ClassifierError::ZeroRuns);
    }
    let clean_accuracy = evaluate(model, test_set)?;
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let mut drops = Vec::with_capacity(runs);
        for run in 0..runs {
            let run_spec = spec.clone().with_seed(mix64(spec.seed, run as u64));
            let perturbed = perturb_dataset(test_set, &run_spec, alphabet);
            let acc = evaluate(model, &perturbed)?;
            drops.push(clean_accuracy - acc);
        }
        let mean = drops.iter().sum::<f64>() / runs as f64;
        let var = drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / runs as f64;
        rows.push(RobustnessRow {
            spec: spec.clone(),
            clean_accuracy,
            drops,
            mean_drop: mean,
            sd_drop: var.sqrt(),
        });
    }
    Ok(rows)
}
