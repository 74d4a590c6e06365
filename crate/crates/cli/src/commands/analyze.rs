//! `lshproj analyze` (alias `sweep`): projection-shift grid over
//! K × perturbation level, with an optional collision study.
//!
//! Emits one JSON record per grid cell followed by aligned human-readable
//! tables; `--out` additionally writes the records and a run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use lshproj::analysis::{build_vocab, collision_study, shift_sweep, ShiftParams, ShiftReport};
use lshproj::data::load_corpus;
use lshproj::features::FeatureConfig;
use lshproj::perturb::{parse_ops, PerturbSpec};
use lshproj::projection::ProjectionConfig;

use crate::manifest::RunManifest;

use super::{load_kv, normalize_probability, parse_alphabet};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Plain-text corpus file (markup lines starting with `<` are dropped).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_bytes: usize,
    /// Most-frequent distinct words kept as the vocabulary.
    #[arg(long, default_value_t = 2000)]
    pub words: usize,
    #[arg(
        long = "k-list",
        value_delimiter = ',',
        default_value = "840,980,1120,1260"
    )]
    pub k_list: Vec<usize>,
    /// Perturbation levels; 5 and 0.05 both mean 5%.
    #[arg(long = "p-list", value_delimiter = ',', default_value = "5,10")]
    pub p_list: Vec<f64>,
    /// Word pairs sampled for the inter-word baseline.
    #[arg(long, default_value_t = 20_000)]
    pub pairs: usize,
    /// Perturbation draws averaged per word.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value = "all")]
    pub ops: String,
    /// Edits per perturbed word.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Neighbor samples per word for the collision study (0 = skip).
    #[arg(long, default_value_t = 0)]
    pub collisions: usize,
    /// Key-value feature-config override for the token-level projection.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON records here (plus a run manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Insertion alphabet for `add` (default a-z).
    #[arg(long)]
    pub alphabet: Option<String>,
}

pub fn run(args: AnalyzeArgs) -> anyhow::Result<()> {
    let corpus = load_corpus(&args.corpus, args.max_bytes)?;
    let vocab = build_vocab(&corpus, args.words, args.corpus.display().to_string())?;

    let mut base = ProjectionConfig::token_default(args.seed);
    if let Some(path) = &args.config {
        base.feature_config = FeatureConfig::from_kv(&load_kv(path)?, base.feature_config)?;
    }
    let spec_template = PerturbSpec::new(parse_ops(&args.ops)?, 0.0, args.n, args.seed);
    let alphabet = parse_alphabet(args.alphabet.as_deref())?;
    let levels: Vec<f64> = args
        .p_list
        .iter()
        .map(|&p| normalize_probability(p))
        .collect();
    let params = ShiftParams {
        pair_samples: args.pairs,
        repeats: args.repeats,
    };

    let reports = shift_sweep(
        &vocab,
        &args.k_list,
        &levels,
        &base,
        &spec_template,
        &alphabet,
        &params,
    )?;

    let mut records = String::new();
    for r in &reports {
        let record = serde_json::json!({
            "type": "shift",
            "k": r.k,
            "level": r.perturb_level,
            "mean_shift_bits": r.mean_shift_bits,
            "mean_interword_bits": r.mean_interword_bits,
            "ratio": r.ratio,
            "sample_count": r.sample_count,
        });
        records.push_str(&record.to_string());
        records.push('\n');
    }

    if args.collisions > 0 {
        for r in &reports {
            let config = ProjectionConfig {
                k: r.k,
                ..base.clone()
            };
            let spec = spec_template.clone().with_p(r.perturb_level);
            let c = collision_study(&vocab, &config, &spec, &alphabet, args.collisions)?;
            let record = serde_json::json!({
                "type": "collision",
                "k": r.k,
                "level": r.perturb_level,
                "confusion_fraction": c.confusion_fraction,
                "words": c.words,
                "neighbor_samples": c.neighbor_samples,
            });
            records.push_str(&record.to_string());
            records.push('\n');
        }
    }

    print!("{records}");
    println!();
    print!("{}", detail_table(&reports, vocab.len()));
    println!();
    print!("{}", shift_matrix(&reports));

    if let Some(out) = &args.out {
        fs::write(out, &records).with_context(|| format!("writing {}", out.display()))?;
        let mut manifest = RunManifest::new("analyze", args.seed);
        manifest.set_kv(&base.to_kv());
        manifest.set_kv(&spec_template.to_kv());
        manifest.set("k_list", join_usize(&args.k_list));
        manifest.set(
            "p_list",
            levels
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        manifest.set("pairs", args.pairs);
        manifest.set("repeats", args.repeats);
        manifest.set("words", vocab.len());
        manifest.set("max_bytes", args.max_bytes);
        manifest.set("collisions", args.collisions);
        manifest.input(&args.corpus);
        manifest.output(out);
        manifest.write_alongside(out)?;
    }
    Ok(())
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn detail_table(reports: &[ShiftReport], words: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6}  {:>7}  {:>12}  {:>14}  {:>7}  {:>8}",
        "K", "level", "shift(bits)", "interword(bits)", "ratio", "samples"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:>6}  {:>6.2}%  {:>12.2}  {:>14.2}  {:>7.4}  {:>8}",
            r.k,
            r.perturb_level * 100.0,
            r.mean_shift_bits,
            r.mean_interword_bits,
            r.ratio,
            r.sample_count
        );
    }
    let _ = writeln!(out, "({words} vocabulary words)");
    out
}

/// Rows = K, columns = perturbation level, cells = mean shift in bits.
fn shift_matrix(reports: &[ShiftReport]) -> String {
    let mut ks: Vec<usize> = reports.iter().map(|r| r.k).collect();
    ks.dedup();
    let mut levels: Vec<f64> = Vec::new();
    for r in reports {
        if !levels.contains(&r.perturb_level) {
            levels.push(r.perturb_level);
        }
    }
    levels.sort_by(f64::total_cmp);

    let mut out = String::from("avg. change in word projections (bits)\n");
    let _ = write!(out, "{:>6}", "K");
    for l in &levels {
        let _ = write!(out, "  {:>9.2}%", l * 100.0);
    }
    out.push('\n');
    for &k in &ks {
        let _ = write!(out, "{k:>6}");
        for &l in &levels {
            let cell = reports
                .iter()
                .find(|r| r.k == k && r.perturb_level == l)
                .map(|r| r.mean_shift_bits)
                .unwrap_or(f64::NAN);
            let _ = write!(out, "  {cell:>10.2}");
        }
        out.push('\n');
    }
    out
}
