//! `lshproj evaluate`: accuracy of a saved model on a TSV test set.

use std::path::PathBuf;

use clap::Args;

use lshproj::classifier::{evaluate, load_model_from_path};
use lshproj::data::load_tsv;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Saved model file.
    #[arg(long)]
    pub load: PathBuf,
    /// Test TSV (`label<TAB>text`); labels are matched to the model's
    /// class names.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub has_header: bool,
}

pub fn run(args: EvaluateArgs) -> anyhow::Result<()> {
    let model = load_model_from_path(&args.load)?;
    let test = load_tsv(&args.test, args.has_header)?.align_classes(&model.class_names)?;
    let accuracy = evaluate(&model, &test)?;
    println!(
        "accuracy {:.4} ({} examples, {} classes, {} model)",
        accuracy,
        test.len(),
        model.class_count(),
        model.kind().name()
    );
    Ok(())
}
