//! `lshproj project`: print hex projections of texts or their tokens.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};

use lshproj::projection::{project_text, project_tokens, ProjectionConfig};

use crate::manifest::RunManifest;

use super::load_kv;

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProjectMode {
    /// One sentence-level projection per input line.
    Sentence,
    /// One token-level projection per token, one per line.
    Tokens,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Text to project (alternative to --in).
    #[arg(long, conflicts_with = "input")]
    pub text: Option<String>,
    /// File with one input text per line.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Key-value config file (k, seed, feature inventory).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Projection dimension override.
    #[arg(long)]
    pub k: Option<usize>,
    /// Hash seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ProjectMode::Sentence)]
    pub mode: ProjectMode,
    /// Also write the hex lines to a file, with a run manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ProjectArgs) -> anyhow::Result<()> {
    let base = match args.mode {
        ProjectMode::Sentence => ProjectionConfig::sentence_default(DEFAULT_SEED),
        ProjectMode::Tokens => ProjectionConfig::token_default(DEFAULT_SEED),
    };
    let mut config = match &args.config {
        Some(path) => ProjectionConfig::from_kv(&load_kv(path)?, base)?,
        None => base,
    };
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;

    let texts: Vec<String> = match (&args.text, &args.input) {
        (Some(t), None) => vec![t.clone()],
        (None, Some(path)) => fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .lines()
            .map(str::to_string)
            .collect(),
        _ => bail!("exactly one of --text or --in is required"),
    };

    let mut lines = String::new();
    for text in &texts {
        match args.mode {
            ProjectMode::Sentence => {
                lines.push_str(&project_text(text, &config).to_hex());
                lines.push('\n');
            }
            ProjectMode::Tokens => {
                for pv in project_tokens(text, &config) {
                    lines.push_str(&pv.to_hex());
                    lines.push('\n');
                }
            }
        }
    }
    print!("{lines}");

    if let Some(out) = &args.out {
        fs::write(out, &lines).with_context(|| format!("writing {}", out.display()))?;
        let mut manifest = RunManifest::new("project", config.seed);
        manifest.set_kv(&config.to_kv());
        manifest.set(
            "mode",
            match args.mode {
                ProjectMode::Sentence => "sentence",
                ProjectMode::Tokens => "tokens",
            },
        );
        if let Some(input) = &args.input {
            manifest.input(input);
        }
        manifest.output(out);
        manifest.write_alongside(out)?;
    }
    Ok(())
}
