//! End-to-end tests of the `treedist` binary: output formats, exit
//! codes, and agreement between the subcommands.

use std::path::PathBuf;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treedist::generate::{random_binary_tree_on, synthetic_taxa};
use treedist::write_newick;

/// Two caterpillars over A..F with no shared splits; the geodesic
/// distance is about 2.65 and the class poset has four classes.
const WORKED_PAIR: &str = "\
(((((A:1,B:1):0.83,C:1):0.6,D:1):0.47,E:1):0.88,F:1);
(A:1,((B:1,C:1):0.7,(D:1,(E:1,F:1):0.15):0.87):0.47);
";

/// One internal edge each, crossing, unit lengths: distance exactly 2.
const UNIT_PAIR: &str = "\
((A:1,B:1):1,C:1,D:1);
(A:1,(B:1,C:1):1,D:1);
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treedist"))
}

fn write_input(content: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trees.nwk");
    std::fs::write(&path, content).unwrap();
    (dir, path)
}

fn run(content: &str, args: &[&str]) -> Output {
    let (_dir, path) = write_input(content);
    bin()
        .args(args)
        .arg("--input")
        .arg(&path)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "exit {:?}, stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn first_line_distance(content: &str, args: &[&str]) -> f64 {
    let out = stdout_of(&run(content, args));
    out.lines().next().expect("distance line").parse().unwrap()
}

#[test]
fn dist_identical_trees_is_zero() {
    let line = WORKED_PAIR.lines().next().unwrap();
    let two = format!("{line}\n{line}\n");
    let out = stdout_of(&run(&two, &["dist"]));
    assert_eq!(out, "0.000000000000\n");
}

#[test]
fn dist_unit_crossing_pair_is_exactly_two() {
    let out = stdout_of(&run(UNIT_PAIR, &["dist"]));
    assert_eq!(out, "2.000000000000\n");
}

#[test]
fn dist_worked_pair_across_algorithms() {
    let mut values = Vec::new();
    for algorithm in ["dynamic", "divide", "brute"] {
        let d = first_line_distance(WORKED_PAIR, &["dist", "--algorithm", algorithm]);
        assert!((d - 2.65).abs() <= 0.02, "{algorithm} gave {d}");
        values.push(d);
    }
    assert!((values[0] - values[1]).abs() <= 1e-9);
    assert!((values[1] - values[2]).abs() <= 1e-9);
}

#[test]
fn dist_verbose_reports_carrier_behind_comment_lines() {
    let out = stdout_of(&run(
        WORKED_PAIR,
        &["dist", "--verbose", "--algorithm", "dynamic"],
    ));
    let mut lines = out.lines();
    let distance: f64 = lines.next().unwrap().parse().unwrap();
    assert!((distance - 2.65).abs() <= 0.02);
    assert!(lines.clone().all(|l| l.starts_with("# ") || l.starts_with("#   ")));
    assert!(out.contains("# algorithm: Dynamic"));
    assert!(out.contains("# shared splits: 0"));
    assert!(out.contains("# leaf contribution: excluded"));
    assert!(out.contains("# carrier: 3 ratio(s)"));
    assert_eq!(out.matches("drop [").count(), 3);
}

#[test]
fn dist_leaves_flag_includes_pendant_edges() {
    // Pendant lengths match pairwise, so the distance is unchanged but
    // the contribution is reported.
    let base = first_line_distance(UNIT_PAIR, &["dist"]);
    let out = stdout_of(&run(UNIT_PAIR, &["dist", "--leaves", "--verbose"]));
    let with: f64 = out.lines().next().unwrap().parse().unwrap();
    assert!((with - base).abs() <= 1e-12);
    assert!(out.contains("# leaf contribution: 0.000000 (squared)"));
}

#[test]
fn dist_pair_selects_trees() {
    let line1 = WORKED_PAIR.lines().next().unwrap();
    let line2 = WORKED_PAIR.lines().nth(1).unwrap();
    let three = format!("{line1}\n{line2}\n{line1}\n");
    let d02 = first_line_distance(&three, &["dist", "--pair", "0", "2"]);
    assert_eq!(d02, 0.0);
    let d21 = first_line_distance(&three, &["dist", "--pair", "2", "1"]);
    assert!((d21 - 2.65).abs() <= 0.02);
}

#[test]
fn dist_default_length_fills_missing_lengths() {
    let no_lengths = "((A,B):1,C:1);\n((A,C):1,B:1);\n";
    let d = first_line_distance(no_lengths, &["dist", "--default-length", "1"]);
    assert_eq!(d, 2.0);
    // Without the flag the same file is a parse error.
    let out = run(no_lengths, &["dist"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes_for_bad_input() {
    // Unbalanced parentheses.
    let out = run("((A:1,B:1\n", &["dist"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    // Empty file and single tree both fall short of a pair.
    assert_eq!(run("", &["dist"]).status.code(), Some(1));
    let one = WORKED_PAIR.lines().next().unwrap();
    assert_eq!(run(one, &["dist"]).status.code(), Some(1));

    // Pair indices out of range or equal.
    assert_eq!(
        run(WORKED_PAIR, &["dist", "--pair", "0", "5"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(WORKED_PAIR, &["dist", "--pair", "1", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn exit_code_two_for_taxa_mismatch() {
    let mismatch = "(A:1,B:1,C:1);\n(A:1,B:1,X:1);\n";
    let out = run(mismatch, &["dist"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("X"), "stderr: {err}");
}

#[test]
fn exit_code_three_for_chain_cap() {
    // The worked pair has three maximal chains; a cap of two trips.
    let out = run(
        WORKED_PAIR,
        &["dist", "--algorithm", "brute", "--chain-cap", "2"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));

    let ok = run(
        WORKED_PAIR,
        &["dist", "--algorithm", "brute", "--chain-cap", "3"],
    );
    assert!(ok.status.success());
}

fn parse_delimited(out: &str, sep: char) -> Vec<Vec<f64>> {
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    let n = header.split(sep).skip(1).count();
    assert_eq!(
        header,
        (0..n).fold(String::new(), |acc, j| format!("{acc}{sep}{j}"))
    );
    let matrix: Vec<Vec<f64>> = lines
        .map(|line| {
            line.split(sep)
                .skip(1)
                .map(|cell| cell.parse().unwrap())
                .collect()
        })
        .collect();
    assert_eq!(matrix.len(), n);
    matrix
}

fn assert_symmetric_zero_diagonal(matrix: &[Vec<f64>]) {
    for (i, row) in matrix.iter().enumerate() {
        assert_eq!(row[i], 0.0);
        for (j, d) in row.iter().enumerate() {
            assert_eq!(*d, matrix[j][i], "asymmetry at ({i}, {j})");
            if i != j {
                assert!(*d > 0.0);
            }
        }
    }
}

#[test]
fn matrix_csv_matches_dist() {
    let line1 = WORKED_PAIR.lines().next().unwrap();
    let line2 = WORKED_PAIR.lines().nth(1).unwrap();
    let line3 = "(((((A:1,B:1):0.5,C:1):0.5,D:1):0.5,E:1):0.5,F:1);\n";
    let three = format!("{line1}\n{line2}\n{line3}");
    let out = stdout_of(&run(&three, &["matrix"]));
    let matrix = parse_delimited(&out, ',');
    assert_eq!(matrix.len(), 3);
    assert_symmetric_zero_diagonal(&matrix);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let d = first_line_distance(&three, &["dist", "--pair", &i.to_string(), &j.to_string()]);
        assert!((matrix[i][j] - d).abs() <= 1e-12);
    }
}

#[test]
fn matrix_output_formats_agree() {
    let csv = stdout_of(&run(WORKED_PAIR, &["matrix", "--output", "csv"]));
    let tsv = stdout_of(&run(WORKED_PAIR, &["matrix", "--output", "tsv"]));
    let json = stdout_of(&run(WORKED_PAIR, &["matrix", "--output", "json"]));

    let from_csv = parse_delimited(&csv, ',');
    let from_tsv = parse_delimited(&tsv, '\t');
    assert_eq!(from_csv, from_tsv);

    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["trees"], 2);
    let from_json = value["matrix"].as_array().unwrap();
    for (i, row) in from_json.iter().enumerate() {
        for (j, cell) in row.as_array().unwrap().iter().enumerate() {
            assert!((cell.as_f64().unwrap() - from_csv[i][j]).abs() <= 1e-12);
        }
    }
}

#[test]
fn matrix_algorithms_agree_on_random_trees() {
    let taxa = synthetic_taxa(8);
    let mut rng = ChaCha8Rng::seed_from_u64(0xc11);
    let mut file = String::new();
    for _ in 0..10 {
        let tree = random_binary_tree_on(&taxa, &mut rng);
        file.push_str(&write_newick(&tree));
        file.push('\n');
    }
    let mut matrices = Vec::new();
    for algorithm in ["brute", "dynamic", "divide"] {
        let out = stdout_of(&run(&file, &["matrix", "--algorithm", algorithm]));
        matrices.push(parse_delimited(&out, ','));
    }
    let (brute, others) = matrices.split_first().unwrap();
    assert_eq!(brute.len(), 10);
    for matrix in others {
        assert_eq!(matrix.len(), 10);
        for (row, brute_row) in matrix.iter().zip(brute) {
            for (d, b) in row.iter().zip(brute_row) {
                assert!((d - b).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn splits_dump_for_worked_pair() {
    let out = stdout_of(&run(WORKED_PAIR, &["splits"]));
    assert!(out.contains("tree 0: 4 split(s)"));
    assert!(out.contains("tree 1: 4 split(s)"));
    assert!(out.contains("  12|03456  0.830000"));
    assert!(out.contains("  56|01234  0.150000"));
    assert!(out.contains("shared: 0 split(s)"));
    assert!(out.contains("classes: 4"));
    assert_eq!(out.matches("(minimal)").count(), 2);
}

#[test]
fn splits_identical_trees_share_everything() {
    let line = WORKED_PAIR.lines().next().unwrap();
    let two = format!("{line}\n{line}\n");
    let out = stdout_of(&run(&two, &["splits"]));
    assert!(out.contains("shared: 4 split(s)"));
    assert!(out.contains("classes: 0"));
}

#[test]
fn splits_requires_exactly_two_without_pair() {
    let line = WORKED_PAIR.lines().next().unwrap();
    let three = format!("{line}\n{line}\n{line}\n");
    assert_eq!(run(&three, &["splits"]).status.code(), Some(1));
    assert!(run(&three, &["splits", "--pair", "0", "2"]).status.success());
}

#[test]
fn splits_dot_renders_the_class_poset() {
    let out = stdout_of(&run(WORKED_PAIR, &["splits", "--dot"]));
    assert!(out.starts_with("digraph incompatibility_poset {"));
    assert!(out.trim_end().ends_with('}'));
    assert_eq!(out.matches(" -> ").count(), 3);
}
