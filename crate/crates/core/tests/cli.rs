use std::path::Path;
use std::process::{Command, Output};

use shl_monge::grid::read_field;

fn cma(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cma"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("cma runs")
}

const COARSE: [&str; 4] = ["--set", "grid.h=0.25", "--set", "directions.frames=8"];

fn solve_in(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve"];
    args.extend_from_slice(&COARSE);
    args.extend_from_slice(extra);
    cma(dir, &args)
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve_in(dir.path(), &["--set", "grid.spacing=0.1"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_config_file_reports_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "n = 2\ngrid.h = -0.1\n").unwrap();
    let out = cma(dir.path(), &["--config", "bad.cfg", "solve"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.h"), "{err}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cma(dir.path(), &["--config", "nowhere.cfg", "solve"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cma(dir.path(), &["integrate"]).status.code(), Some(2));
}

#[test]
fn polydisc_is_refused_as_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve_in(dir.path(), &["--set", "domain.kind=polydisc"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_writes_a_readable_field_and_is_deterministic() {
    // same config, two working directories
    let (one, two) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&one, &two] {
        let out = solve_in(dir.path(), &["--set", "phi.kind=re_z1"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(one.path().join("out/solution.csv")).unwrap();
    let b = std::fs::read_to_string(two.path().join("out/solution.csv")).unwrap();
    assert!(a == b, "solution.csv differs between identical runs");

    let (field, header) = read_field(&one.path().join("out/solution.csv")).unwrap();
    assert!(header.config.iter().any(|l| l.contains("phi.kind = re_z1")), "{:?}", header.config);
    let g = &field.grid;
    for &i in &g.interior {
        assert!((field.values[i] - g.coords(i)[0]).abs() < 1e-9);
    }
}

#[test]
fn modulus_reads_a_solved_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve_in(dir.path(), &["--set", "output.dir=s", "--set", "phi.kind=re_z1"]);
    assert_eq!(out.status.code(), Some(0));
    let mut args = vec!["modulus", "--field", "s/solution.csv"];
    args.extend_from_slice(&COARSE);
    args.extend_from_slice(&["--set", "output.dir=m"]);
    let out = cma(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("m/modulus.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(!rows.is_empty());
    for r in &rows {
        // Re z1 is 1-Lipschitz
        assert!(r[1] <= r[0] + 1e-12 && r[1] <= r[2] + 1e-12, "{r:?}");
    }
}

#[test]
fn failing_verdict_exits_four() {
    // the identity profile alone cannot resolve a spread spectrum
    let dir = tempfile::tempdir().unwrap();
    let out = cma(dir.path(), &["verify", "gaveau", "--set", "directions.ladder=1"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("out/verdict.txt").exists());
}
