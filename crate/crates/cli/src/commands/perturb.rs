//! `lshproj perturb`: misspell the text column of a TSV dataset.
//!
//! Streams `label<TAB>text` lines, perturbing only the text with one RNG
//! stream per data line, so the output is byte-identical across runs and at
//! `--p 0` byte-identical to the input.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};

use lshproj::perturb::{parse_ops, perturb_text_indexed, PerturbMode, PerturbSpec};

use crate::manifest::RunManifest;

use super::{normalize_probability, parse_alphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PerWord,
    PerChar,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated subset of add,swap,drop (or `all`).
    #[arg(long, default_value = "all")]
    pub ops: String,
    /// Per-word perturbation probability (5 and 0.05 both mean 5%).
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    /// Edits per perturbed word.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::PerWord)]
    pub mode: ModeArg,
    /// Apply every op sequentially to each selected word.
    #[arg(long)]
    pub apply_all: bool,
    /// Treat the first line as a header and copy it through untouched.
    #[arg(long)]
    pub has_header: bool,
    /// Insertion alphabet for `add` (default a-z).
    #[arg(long)]
    pub alphabet: Option<String>,
}

pub fn run(args: PerturbArgs) -> anyhow::Result<()> {
    let mut spec = PerturbSpec::new(
        parse_ops(&args.ops)?,
        normalize_probability(args.p),
        args.n,
        args.seed,
    );
    spec.mode = match args.mode {
        ModeArg::PerWord => PerturbMode::PerWord,
        ModeArg::PerChar => PerturbMode::PerChar,
    };
    spec.apply_all = args.apply_all;
    spec.validate()?;
    let alphabet = parse_alphabet(args.alphabet.as_deref())?;

    let content = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut out = String::with_capacity(content.len());
    let mut line_no = 0usize;
    let mut data_index = 0u64;
    for piece in content.split_inclusive('\n') {
        line_no += 1;
        let (line, newline) = match piece.strip_suffix('\n') {
            Some(rest) => (rest, "\n"),
            None => (piece, ""),
        };
        if args.has_header && line_no == 1 {
            out.push_str(line);
            out.push_str(newline);
            continue;
        }
        let Some((label, text)) = line.split_once('\t') else {
            bail!(
                "{}: line {line_no}: expected `label<TAB>text`",
                args.input.display()
            );
        };
        out.push_str(label);
        out.push('\t');
        out.push_str(&perturb_text_indexed(text, &spec, &alphabet, data_index));
        out.push_str(newline);
        data_index += 1;
    }
    fs::write(&args.out, &out).with_context(|| format!("writing {}", args.out.display()))?;

    let mut manifest = RunManifest::new("perturb", args.seed);
    manifest.set_kv(&spec.to_kv());
    manifest.set("alphabet", args.alphabet.as_deref().unwrap_or("a-z"));
    manifest.set("has_header", args.has_header);
    manifest.set("lines", data_index);
    manifest.input(&args.input);
    manifest.output(&args.out);
    manifest.write_alongside(&args.out)?;

    eprintln!(
        "perturbed {} data lines ({} -> {})",
        data_index,
        args.input.display(),
        args.out.display()
    );
    Ok(())
}
