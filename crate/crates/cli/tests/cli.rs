//! Contract tests for the command-line surface: exit codes, determinism,
//! file formats, and the distinct usage-error messages.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carpenter-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("carpenter-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn no_command_prints_usage_and_exits_2() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("USAGE"));
}

#[test]
fn unknown_command_and_flag_are_usage_errors() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown command"));

    let out = run(&["iterate", "--nope", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown flag"));
}

#[test]
fn iterate_canonical_seed_passes_and_reports_lambda() {
    let out = run(&[
        "iterate",
        "--k",
        "1",
        "--seed-matrix",
        "diag01",
        "--max-level",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("lambda = 0.5428932188134524 (5/4 - sqrt(2)/2)"));
    assert!(text.contains("PASS"));
    assert!(text.contains("\"lambda\": 0.5428932188134524"));
    assert!(text.contains("\"truncated\": true"));
}

#[test]
fn iterate_csv_has_the_mirror_columns() {
    let out = run(&[
        "iterate",
        "--k",
        "1",
        "--seed-matrix",
        "identity",
        "--max-level",
        "6",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("n,level,delta,ratio,diag_sup_err"));
    // The identity seed stops after one zero-distance step.
    assert!(text.contains("2,2,0,,0"));
}

#[test]
fn identical_flags_give_byte_identical_outputs() {
    let args = [
        "iterate",
        "--k",
        "2",
        "--seed-matrix",
        "rand-sa",
        "--rng-seed",
        "42",
        "--max-level",
        "9",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "stdout must be byte-identical");

    let file_a = tmp_path("det-a.json");
    let file_b = tmp_path("det-b.json");
    let mut with_out_a: Vec<&str> = args.to_vec();
    let out_a = file_a.to_str().unwrap();
    with_out_a.extend_from_slice(&["--out", out_a]);
    let mut with_out_b: Vec<&str> = args.to_vec();
    let out_b = file_b.to_str().unwrap();
    with_out_b.extend_from_slice(&["--out", out_b]);
    assert_eq!(run(&with_out_a).status.code(), Some(0));
    assert_eq!(run(&with_out_b).status.code(), Some(0));
    let bytes_a = std::fs::read(&file_a).unwrap();
    let bytes_b = std::fs::read(&file_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "trace files must be byte-identical");
    let _ = std::fs::remove_file(file_a);
    let _ = std::fs::remove_file(file_b);
}

#[test]
fn exact_check_reports_the_identity_count() {
    let out = run(&["exact-check", "--samples", "5", "--rng-seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("exact lambda = 5/4 - 1/2*sqrt2"));
    assert!(text.contains("PASS: 10 exact identities verified"));
}

#[test]
fn predict_diag_and_distance_and_contraction_pass() {
    let out = run(&[
        "predict-diag",
        "--k",
        "2",
        "--n",
        "5",
        "--seed-matrix",
        "rand-sa",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("PASS"));

    let out = run(&["distance", "--pairs", "3", "--k", "2", "--max-level", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));

    let out = run(&["contraction", "--samples", "9", "--max-level", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("lambda = 0.5428932188134524"));
    assert!(text.contains("PASS"));
}

#[test]
fn carpenter_synthesizes_and_writes_the_matrix_format() {
    let target = tmp_path("target.txt");
    std::fs::write(&target, "0.9\n0.7\n0.3\n0.1\n").unwrap();
    let matrix_out = tmp_path("p.txt");
    let out = run(&[
        "carpenter",
        "--target",
        target.to_str().unwrap(),
        "--out",
        matrix_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("rotations=2"));
    let text = std::fs::read_to_string(&matrix_out).unwrap();
    assert!(text.starts_with("DYADIC-MATRIX v1\nlevel 2\n"));
    let _ = std::fs::remove_file(target);
    let _ = std::fs::remove_file(matrix_out);
}

#[test]
fn carpenter_rejects_infeasible_targets_with_exit_2() {
    let target = tmp_path("bad-target.txt");
    std::fs::write(&target, "0.6\n0.6\n").unwrap();
    let out = run(&["carpenter", "--target", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("infeasible target"));
    let _ = std::fs::remove_file(target);
}

#[test]
fn malformed_matrix_files_are_usage_errors_with_line_info() {
    let bad = tmp_path("bad-matrix.txt");
    std::fs::write(&bad, "DYADIC-MATRIX v1\nlevel 1\n0,0 zz,0\n0,0 0,0\n").unwrap();
    let out = run(&[
        "iterate",
        "--k",
        "1",
        "--seed-matrix",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("malformed matrix file at line 3"));
    let _ = std::fs::remove_file(bad);
}

#[test]
fn matrix_files_round_trip_through_iterate() {
    // Write diag(0,1) by hand and check the flow matches the named seed.
    let seed_file = tmp_path("diag01.txt");
    std::fs::write(&seed_file, "DYADIC-MATRIX v1\nlevel 1\n0,0 0,0\n0,0 1,0\n").unwrap();
    let from_file = run(&[
        "iterate",
        "--k",
        "1",
        "--seed-matrix",
        seed_file.to_str().unwrap(),
        "--max-level",
        "7",
    ]);
    let from_name = run(&[
        "iterate",
        "--k",
        "1",
        "--seed-matrix",
        "diag01",
        "--max-level",
        "7",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    let file_text = stdout(&from_file);
    let name_text = stdout(&from_name);
    let tail = |s: &str| {
        s.lines()
            .skip(2)
            .map(String::from)
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(tail(&file_text), tail(&name_text));
    let _ = std::fs::remove_file(seed_file);
}

#[test]
fn circulant_writes_constant_diagonal_and_reports_gaps() {
    let out = run(&["circulant", "--n", "8", "--m", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("circulant: n=8 m=3 diagonal=0.375"));
    let diag_count = text
        .lines()
        .skip_while(|l| !l.starts_with("DYADIC-MATRIX"))
        .skip(2)
        .enumerate()
        .filter(|(i, l)| {
            l.split_whitespace()
                .nth(*i)
                .map(|tok| tok.starts_with("0.375,"))
                .unwrap_or(false)
        })
        .count();
    assert_eq!(diag_count, 8, "every diagonal entry reads 0.375");

    let out = run(&["circulant", "--n", "4", "--alpha", "0.7071067811865476"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("best reachable is 3/4"));

    let out = run(&["circulant", "--n", "4", "--m", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn strategy_emits_csv_and_json_reports() {
    let out = run(&[
        "strategy",
        "--g",
        "linear",
        "--k-min",
        "2",
        "--k-max",
        "5",
        "--heuristic",
        "phase-align",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("k,mass,fro_dist_to_embed_prev,r_k"));
    assert!(text.contains("limsup estimate"));

    let out = run(&[
        "strategy",
        "--g",
        "const:0.5",
        "--k-min",
        "2",
        "--k-max",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"g\": \"const:0.5\""));

    // A sample file defines g as a piecewise-constant profile.
    let samples = tmp_path("samples.txt");
    std::fs::write(&samples, "0\n0.25\n0.5\n1\n").unwrap();
    let out = run(&[
        "strategy",
        "--g",
        samples.to_str().unwrap(),
        "--k-min",
        "2",
        "--k-max",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("samples[4]"));
    let _ = std::fs::remove_file(samples);
}

#[test]
fn max_level_env_override_is_honored() {
    let out = bin()
        .args([
            "iterate",
            "--k",
            "1",
            "--seed-matrix",
            "diag01",
            "--max-level",
            "12",
        ])
        .env("CARPENTER_MAX_LEVEL", "12")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("\"level\": 12"));

    // Without the override, level 12 exceeds the default cap.
    let out = run(&[
        "iterate",
        "--k",
        "1",
        "--seed-matrix",
        "diag01",
        "--max-level",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("exceeds the configured maximum level"));

    // A lowered cap rejects runs that were fine under the default.
    let out = bin()
        .args([
            "iterate",
            "--k",
            "1",
            "--seed-matrix",
            "diag01",
            "--max-level",
            "8",
        ])
        .env("CARPENTER_MAX_LEVEL", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["iterate"])
        .env("CARPENTER_MAX_LEVEL", "banana")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_check_and_strategy_are_byte_deterministic() {
    let exact_args = ["exact-check", "--samples", "4", "--rng-seed", "9"];
    let a = run(&exact_args);
    let b = run(&exact_args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let strat_args = [
        "strategy",
        "--g",
        "square",
        "--k-min",
        "2",
        "--k-max",
        "5",
        "--heuristic",
        "phase-align",
    ];
    let a = run(&strat_args);
    let b = run(&strat_args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
