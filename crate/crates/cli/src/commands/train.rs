//! `lshproj train`: train an SGNN or lookup classifier on a TSV dataset and
//! save it with a run manifest.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use lshproj::classifier::{save_model_to_path, train, Model, TrainConfig};
use lshproj::data::{hold_out, load_tsv};
use lshproj::features::tokenize;
use lshproj::hashing::mix64;
use lshproj::projection::{OneHotVocab, ProjectionConfig};

use crate::manifest::RunManifest;

use super::load_kv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Sgnn,
    Lookup,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Training TSV (`label<TAB>text`).
    #[arg(long)]
    pub train: PathBuf,
    /// Validation TSV; when absent, --val-frac of the training data is held
    /// out (seeded shuffle).
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
    /// Where to save the trained model.
    #[arg(long)]
    pub save: PathBuf,
    /// Key-value projection config for the SGNN path.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Projection dimension override (SGNN).
    #[arg(long)]
    pub k: Option<usize>,
    /// Embedding dimension d.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "256,256")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub has_header: bool,
}

pub fn run(args: TrainArgs) -> anyhow::Result<()> {
    let seeds = [
        ("projection", mix64(args.seed, 0)),
        ("init", mix64(args.seed, 1)),
        ("train", mix64(args.seed, 2)),
        ("split", mix64(args.seed, 3)),
    ];
    let seed_of = |name: &str| seeds.iter().find(|(n, _)| *n == name).unwrap().1;

    let full = load_tsv(&args.train, args.has_header)?;
    let (train_set, val_set) = match &args.val {
        Some(path) => {
            let val = load_tsv(path, args.has_header)?.align_classes(&full.class_names)?;
            (full.clone(), val)
        }
        None => hold_out(&full, args.val_frac, seed_of("split"))?,
    };

    let mut projection_kv = None;
    let mut model = match args.model {
        ModelArg::Sgnn => {
            let base = ProjectionConfig::sentence_default(seed_of("projection"));
            let mut pconf = match &args.config {
                Some(path) => ProjectionConfig::from_kv(&load_kv(path)?, base)?,
                None => base,
            };
            if let Some(k) = args.k {
                pconf.k = k;
            }
            pconf.validate()?;
            projection_kv = Some(pconf.to_kv());
            Model::new_sgnn(
                pconf,
                args.dim,
                &args.hidden,
                full.class_names.clone(),
                seed_of("init"),
            )?
        }
        ModelArg::Lookup => {
            let tokens: Vec<_> = train_set
                .examples
                .iter()
                .flat_map(|e| tokenize(&e.text))
                .collect();
            let vocab = OneHotVocab::build(tokens.iter());
            Model::new_lookup(
                vocab,
                args.dim,
                &args.hidden,
                full.class_names.clone(),
                seed_of("init"),
            )
        }
    };

    let mut cfg = TrainConfig::new(seed_of("train"))
        .with_learning_rate(args.lr)
        .with_max_epochs(args.max_epochs);
    cfg.batch_size = args.batch;
    cfg.patience = args.patience;

    let log = train(&mut model, &train_set, &val_set, &cfg)?;
    for rec in &log.epochs {
        println!(
            "epoch {:>3}  train_loss {:.6}  val_accuracy {:.4}",
            rec.epoch, rec.train_loss, rec.val_accuracy
        );
    }
    println!(
        "best epoch {} (val accuracy {:.4}){}",
        log.best_epoch,
        log.best_val_accuracy,
        if log.stopped_early {
            ", stopped early"
        } else {
            ""
        }
    );

    save_model_to_path(&model, &args.save)?;
    let mut manifest = RunManifest::new("train", args.seed);
    for (name, value) in seeds {
        manifest.derived_seed(name, value);
    }
    if let Some(kv) = &projection_kv {
        manifest.set_kv(kv);
    }
    manifest.set("model", model.kind().name());
    manifest.set("dim", args.dim);
    manifest.set(
        "hidden",
        args.hidden
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.set("learning_rate", args.lr);
    manifest.set("batch_size", args.batch);
    manifest.set("patience", args.patience);
    manifest.set("max_epochs", args.max_epochs);
    manifest.set("val_frac", args.val_frac);
    manifest.set("classes", model.class_count());
    manifest.set("best_epoch", log.best_epoch);
    manifest.set("best_val_accuracy", log.best_val_accuracy);
    manifest.input(&args.train);
    if let Some(val) = &args.val {
        manifest.input(val);
    }
    manifest.output(&args.save);
    manifest.write_alongside(&args.save)?;

    println!("saved model to {}", args.save.display());
    Ok(())
}
