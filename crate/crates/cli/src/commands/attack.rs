//! `lshproj attack`: accuracy drop of a saved model under misspelling
//! perturbations, averaged over several perturbation seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use lshproj::classifier::{load_model_from_path, robustness_eval, RobustnessRow};
use lshproj::data::load_tsv;
use lshproj::perturb::{parse_ops, PerturbSpec};

use crate::manifest::RunManifest;

use super::{load_kv, normalize_probability, parse_alphabet};

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Saved model file.
    #[arg(long)]
    pub load: PathBuf,
    /// Test TSV (`label<TAB>text`).
    #[arg(long)]
    pub test: PathBuf,
    /// Comma-separated subset of add,swap,drop (or `all`).
    #[arg(long, default_value = "all")]
    pub ops: String,
    /// Perturbation probabilities; one spec per value (5 and 0.05 both mean 5%).
    #[arg(long = "p-list", value_delimiter = ',', default_value = "0.2")]
    pub p_list: Vec<f64>,
    /// Edits per perturbed word.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Perturbation seeds per spec (mean ± SD over these runs).
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Perturbation spec files in the key-value format (comma-separated or
    /// repeated), evaluated in addition to the --ops/--p-list grid.
    #[arg(long = "specs", value_delimiter = ',')]
    pub spec_files: Vec<PathBuf>,
    /// Insertion alphabet for `add` (default a-z).
    #[arg(long)]
    pub alphabet: Option<String>,
    #[arg(long)]
    pub has_header: bool,
    /// Write the JSON records here (plus a run manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: AttackArgs) -> anyhow::Result<()> {
    let model = load_model_from_path(&args.load)?;
    let test = load_tsv(&args.test, args.has_header)?.align_classes(&model.class_names)?;
    let alphabet = parse_alphabet(args.alphabet.as_deref())?;

    let ops = parse_ops(&args.ops)?;
    let mut specs: Vec<PerturbSpec> = args
        .p_list
        .iter()
        .map(|&p| PerturbSpec::new(ops.clone(), normalize_probability(p), args.n, args.seed))
        .collect();
    for path in &args.spec_files {
        let kv = load_kv(path)?;
        specs.push(PerturbSpec::from_kv(
            &kv,
            PerturbSpec::all_ops(0.2, args.seed),
        )?);
    }

    let rows = robustness_eval(&model, &test, &specs, &alphabet, args.runs)?;

    let mut records = String::new();
    for row in &rows {
        let record = serde_json::json!({
            "type": "attack",
            "ops": row.spec.ops.iter().map(|o| o.name()).collect::<Vec<_>>().join(","),
            "p": row.spec.p_perturb,
            "n": row.spec.n_edits,
            "runs": args.runs,
            "clean_accuracy": row.clean_accuracy,
            "mean_drop": row.mean_drop,
            "sd_drop": row.sd_drop,
            "drops": row.drops,
        });
        records.push_str(&record.to_string());
        records.push('\n');
    }
    print!("{records}");
    println!();
    print!("{}", table(&rows, args.runs));

    if let Some(out) = &args.out {
        fs::write(out, &records).with_context(|| format!("writing {}", out.display()))?;
        let mut manifest = RunManifest::new("attack", args.seed);
        manifest.set("model", model.kind().name());
        manifest.set("ops", &args.ops);
        manifest.set(
            "p_list",
            specs
                .iter()
                .map(|s| s.p_perturb.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        manifest.set("n", args.n);
        manifest.set("runs", args.runs);
        manifest.input(&args.load);
        manifest.input(&args.test);
        manifest.output(out);
        manifest.write_alongside(out)?;
    }
    Ok(())
}

fn table(rows: &[RobustnessRow], runs: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>6} {:>3} {:>5} {:>8} {:>11} {:>9}",
        "ops", "p", "n", "runs", "clean", "mean_drop", "sd_drop"
    );
    for row in rows {
        let ops = row
            .spec
            .ops
            .iter()
            .map(|o| o.name())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(
            out,
            "{:<16} {:>6.2} {:>3} {:>5} {:>8.4} {:>11.4} {:>9.4}",
            ops,
            row.spec.p_perturb,
            row.spec.n_edits,
            runs,
            row.clean_accuracy,
            row.mean_drop,
            row.sd_drop
        );
    }
    out
}
