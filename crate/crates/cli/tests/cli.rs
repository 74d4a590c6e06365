//! End-to-end tests of the `lshproj` binary: exit codes, determinism of
//! stdout and file artifacts, manifest emission, and the documented output
//! shapes of every subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lshproj"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn lshproj");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_fail(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn lshproj");
    assert!(
        !out.status.success(),
        "command {args:?} unexpectedly passed"
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Two classes with disjoint keyword pools; enough examples to train a tiny
/// model in a couple of epochs.
fn write_dataset(path: &Path, per_class: usize, offset: usize) {
    let flights = ["airport", "boarding", "runway", "ticket", "gate", "pilot"];
    let music = ["guitar", "melody", "rhythm", "chorus", "drums", "vinyl"];
    let filler = ["the", "please", "now", "again", "some"];
    let mut body = String::new();
    for i in 0..per_class {
        let j = offset + i;
        body.push_str(&format!(
            "flight\t{} {} {} {}\n",
            filler[j % filler.len()],
            flights[j % flights.len()],
            flights[(j + 2) % flights.len()],
            filler[(j + 1) % filler.len()],
        ));
        body.push_str(&format!(
            "music\t{} {} {} {}\n",
            filler[(j + 2) % filler.len()],
            music[j % music.len()],
            music[(j + 3) % music.len()],
            filler[j % filler.len()],
        ));
    }
    fs::write(path, body).unwrap();
}

fn write_corpus(path: &Path) {
    // Deterministic pseudo-words, no RNG needed.
    let mut text = String::new();
    let letters = b"abcdefghijklmnopqrstuvwxyz";
    for i in 0..6000usize {
        let len = 4 + (i * 7 + 3) % 5;
        for p in 0..len {
            text.push(char::from(letters[(i * 31 + p * 17 + i / 26) % 26]));
        }
        text.push(if i % 13 == 12 { '\n' } else { ' ' });
    }
    fs::write(path, text).unwrap();
}

#[test]
fn project_hex_length_and_determinism() {
    let a = run_ok(&["project", "--text", "cat", "--k", "8"]);
    let hex = stdout(&a);
    assert_eq!(hex.trim_end().len(), 2, "k=8 → 2 hex digits, got {hex:?}");
    let b = run_ok(&["project", "--text", "cat", "--k", "8"]);
    assert_eq!(a.stdout, b.stdout);

    // Empty text → all-zero vector of ⌈K/4⌉ digits at the default K=1120.
    let empty = run_ok(&["project", "--text", ""]);
    assert_eq!(stdout(&empty).trim_end(), "0".repeat(280));
}

#[test]
fn project_tokens_mode_and_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("texts.txt");
    fs::write(&input, "book a flight\nhello\n").unwrap();
    let out = run_ok(&[
        "project",
        "--in",
        input.to_str().unwrap(),
        "--mode",
        "tokens",
        "--k",
        "64",
    ]);
    // 3 tokens + 1 token = 4 lines of 16 hex digits.
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.len() == 16));
}

#[test]
fn project_out_writes_artifact_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("proj.hex");
    let run = run_ok(&[
        "project",
        "--text",
        "manifest me",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(&out_path).unwrap(), stdout(&run));
    let manifest = fs::read_to_string(dir.path().join("proj.hex.manifest.json")).unwrap();
    assert!(manifest.contains("\"subcommand\": \"project\""));
    assert!(manifest.contains("\"k\""));
}

#[test]
fn project_requires_exactly_one_input() {
    let out = run_fail(&["project"]);
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("--text") || err.contains("--in"));
}

#[test]
fn perturb_identity_at_zero_probability() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.tsv");
    write_dataset(&input, 10, 0);
    let output = dir.path().join("out.tsv");
    run_ok(&[
        "perturb",
        "--in",
        input.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
        "--p",
        "0",
    ]);
    assert_eq!(fs::read(&input).unwrap(), fs::read(&output).unwrap());
    assert!(dir.path().join("out.tsv.manifest.json").exists());
}

#[test]
fn perturb_is_deterministic_and_preserves_shape() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.tsv");
    write_dataset(&input, 10, 3);
    let out1 = dir.path().join("a.tsv");
    let out2 = dir.path().join("b.tsv");
    for out in [&out1, &out2] {
        run_ok(&[
            "perturb",
            "--in",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--p",
            "0.5",
            "--seed",
            "7",
        ]);
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());

    let original = fs::read_to_string(&input).unwrap();
    let perturbed = fs::read_to_string(&out1).unwrap();
    assert_eq!(original.lines().count(), perturbed.lines().count());
    for (o, p) in original.lines().zip(perturbed.lines()) {
        assert_eq!(
            o.split('\t').next(),
            p.split('\t').next(),
            "labels must pass through unchanged"
        );
    }
}

#[test]
fn perturb_rejects_malformed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.tsv");
    fs::write(&input, "ok\tfine\nnotab\n").unwrap();
    let out = run_fail(&[
        "perturb",
        "--in",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("x.tsv").to_str().unwrap(),
    ]);
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("line 2"), "stderr: {err}");
}

fn analyze_args<'a>(corpus: &'a str, out: Option<&'a str>) -> Vec<&'a str> {
    let mut args = vec![
        "analyze",
        "--corpus",
        corpus,
        "--k-list",
        "64,128",
        "--p-list",
        "5,10",
        "--words",
        "150",
        "--pairs",
        "1000",
        "--repeats",
        "2",
        "--seed",
        "3",
    ];
    if let Some(o) = out {
        args.extend_from_slice(&["--out", o]);
    }
    args
}

#[test]
fn analyze_emits_grid_records_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_corpus(&corpus);
    let records_path = dir.path().join("records.jsonl");
    let out = run_ok(&analyze_args(
        corpus.to_str().unwrap(),
        Some(records_path.to_str().unwrap()),
    ));
    let text = stdout(&out);

    let shift_lines: Vec<&str> = text
        .lines()
        .filter(|l| l.contains("\"type\":\"shift\""))
        .collect();
    assert_eq!(shift_lines.len(), 4, "2 K × 2 levels → 4 records");
    for line in &shift_lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let shift = v["mean_shift_bits"].as_f64().unwrap();
        let inter = v["mean_interword_bits"].as_f64().unwrap();
        let ratio = v["ratio"].as_f64().unwrap();
        assert!((ratio - shift / inter).abs() < 1e-12);
    }
    assert!(text.contains("avg. change in word projections (bits)"));
    assert_eq!(
        fs::read_to_string(&records_path).unwrap(),
        shift_lines.join("\n") + "\n"
    );
    assert!(dir.path().join("records.jsonl.manifest.json").exists());

    // Determinism and the `sweep` alias.
    let again = run_ok(&analyze_args(corpus.to_str().unwrap(), None));
    let mut alias_args = analyze_args(corpus.to_str().unwrap(), None);
    alias_args[0] = "sweep";
    let aliased = run_ok(&alias_args);
    assert_eq!(stdout(&again), stdout(&aliased));
    assert_eq!(text.lines().count(), stdout(&again).lines().count());
}

#[test]
fn analyze_default_grid_has_eight_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_corpus(&corpus);
    // Default --k-list 840,980,1120,1260 and --p-list 5,10.
    let out = run_ok(&[
        "analyze",
        "--corpus",
        corpus.to_str().unwrap(),
        "--words",
        "120",
        "--pairs",
        "400",
        "--repeats",
        "1",
    ]);
    let text = stdout(&out);
    assert_eq!(
        text.lines()
            .filter(|l| l.contains("\"type\":\"shift\""))
            .count(),
        8
    );
}

#[test]
fn analyze_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_corpus(&corpus);
    let base = analyze_args(corpus.to_str().unwrap(), None);
    let default_threads = run_ok(&base);
    let mut capped = vec!["--threads", "1"];
    capped.extend_from_slice(&base);
    let one_thread = run_ok(&capped);
    assert_eq!(default_threads.stdout, one_thread.stdout);
}

#[test]
fn analyze_zero_level_gives_zero_shift() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_corpus(&corpus);
    let out = run_ok(&[
        "analyze",
        "--corpus",
        corpus.to_str().unwrap(),
        "--k-list",
        "64",
        "--p-list",
        "0",
        "--words",
        "100",
        "--pairs",
        "500",
        "--repeats",
        "1",
    ]);
    let text = stdout(&out);
    let line = text
        .lines()
        .find(|l| l.contains("\"type\":\"shift\""))
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["mean_shift_bits"].as_f64().unwrap(), 0.0);
    assert_eq!(v["ratio"].as_f64().unwrap(), 0.0);
}

struct TrainedModel {
    _dir: tempfile::TempDir,
    model: PathBuf,
    test_tsv: PathBuf,
}

fn train_tiny(kind: &str) -> TrainedModel {
    let dir = tempfile::tempdir().unwrap();
    let train_tsv = dir.path().join("train.tsv");
    let test_tsv = dir.path().join("test.tsv");
    write_dataset(&train_tsv, 40, 0);
    write_dataset(&test_tsv, 8, 100);
    let model = dir.path().join("model.bin");
    run_ok(&[
        "train",
        "--model",
        kind,
        "--train",
        train_tsv.to_str().unwrap(),
        "--save",
        model.to_str().unwrap(),
        "--k",
        "128",
        "--dim",
        "8",
        "--hidden",
        "8",
        "--max-epochs",
        "5",
        "--seed",
        "5",
    ]);
    assert!(model.exists());
    assert!(dir.path().join("model.bin.manifest.json").exists());
    TrainedModel {
        _dir: dir,
        model,
        test_tsv,
    }
}

#[test]
fn train_evaluate_attack_pipeline_sgnn() {
    let trained = train_tiny("sgnn");
    let eval = run_ok(&[
        "evaluate",
        "--load",
        trained.model.to_str().unwrap(),
        "--test",
        trained.test_tsv.to_str().unwrap(),
    ]);
    let eval_text = stdout(&eval);
    assert!(eval_text.starts_with("accuracy "), "got: {eval_text}");
    // Loading and evaluating twice is bit-identical.
    let eval2 = run_ok(&[
        "evaluate",
        "--load",
        trained.model.to_str().unwrap(),
        "--test",
        trained.test_tsv.to_str().unwrap(),
    ]);
    assert_eq!(eval.stdout, eval2.stdout);

    let spec_file = trained._dir.path().join("drop_only.conf");
    fs::write(&spec_file, "ops = drop\np_perturb = 0.4\nn_edits = 1\n").unwrap();
    let attack = run_ok(&[
        "attack",
        "--load",
        trained.model.to_str().unwrap(),
        "--test",
        trained.test_tsv.to_str().unwrap(),
        "--p-list",
        "0,0.3",
        "--runs",
        "2",
        "--seed",
        "11",
        "--specs",
        spec_file.to_str().unwrap(),
    ]);
    let text = stdout(&attack);
    let rows: Vec<serde_json::Value> = text
        .lines()
        .filter(|l| l.contains("\"type\":\"attack\""))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["p"].as_f64().unwrap(), 0.0);
    assert_eq!(rows[0]["mean_drop"].as_f64().unwrap(), 0.0);
    assert_eq!(rows[0]["sd_drop"].as_f64().unwrap(), 0.0);
    assert!(rows[1]["p"].as_f64().unwrap() > 0.0);
    assert_eq!(rows[2]["ops"].as_str().unwrap(), "drop");
    assert_eq!(rows[2]["p"].as_f64().unwrap(), 0.4);
    assert!(text.contains("mean_drop"));
}

#[test]
fn train_evaluate_lookup_model() {
    let trained = train_tiny("lookup");
    let eval = run_ok(&[
        "evaluate",
        "--load",
        trained.model.to_str().unwrap(),
        "--test",
        trained.test_tsv.to_str().unwrap(),
    ]);
    assert!(stdout(&eval).contains("lookup model"));
}

#[test]
fn train_and_attack_are_byte_identical_across_runs() {
    let a = train_tiny("sgnn");
    let b = train_tiny("sgnn");
    assert_eq!(
        fs::read(&a.model).unwrap(),
        fs::read(&b.model).unwrap(),
        "identical flags and seed must produce identical model files"
    );
    let attack_args = |t: &TrainedModel| {
        vec![
            "attack".to_string(),
            "--load".into(),
            t.model.to_str().unwrap().into(),
            "--test".into(),
            t.test_tsv.to_str().unwrap().into(),
            "--p-list".into(),
            "0.3".into(),
            "--runs".into(),
            "2".into(),
            "--seed".into(),
            "9".into(),
        ]
    };
    let out_a = run_ok(
        &attack_args(&a)
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    let out_b = run_ok(
        &attack_args(&b)
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    assert_eq!(out_a.stdout, out_b.stdout);
}

#[test]
fn missing_files_fail_with_one_line_diagnostic() {
    let out = run_fail(&[
        "evaluate",
        "--load",
        "/nonexistent/m.bin",
        "--test",
        "/tmp/x",
    ]);
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.starts_with("error: "), "stderr: {err}");
    assert_eq!(out.status.code(), Some(1));
}
