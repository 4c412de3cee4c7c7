//! End-to-end checks of the binary: every stage runs off the previous
//! stage's files, outputs carry the version/config/seed header, reruns
//! with one seed are byte-identical, and failures exit 2 (validation)
//! or 3 (I/O).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn micg() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_micg"));
    cmd.env_remove("MICG_SEED");
    cmd
}

fn catalog() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../micg-core/data/reference_catalog.json")
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn header_ok(path: &Path, seed: u64) {
    let text = fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap_or("");
    let (comment, rest) = if first.starts_with("<!--") {
        (
            first
                .trim_start_matches("<!--")
                .trim_end_matches("-->")
                .trim(),
            "svg",
        )
    } else {
        assert!(
            first.starts_with("# "),
            "{}: no comment header",
            path.display()
        );
        (first.trim_start_matches("# ").trim(), "csv")
    };
    let parts: Vec<&str> = comment.split_whitespace().collect();
    assert_eq!(parts[0], "micg", "{}: {first}", path.display());
    assert_eq!(parts[1], env!("CARGO_PKG_VERSION"));
    let config = parts[2].strip_prefix("config=").expect("config field");
    assert_eq!(config.len(), 12);
    assert!(config.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(parts[3], format!("seed={seed}"));
    if rest == "svg" {
        assert!(text.lines().nth(1).unwrap_or("").starts_with("<svg"));
    }
}

/// Generate a dataset into `dir` and return its path.
fn make_data(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let data = dir.join("d.csv");
    run_ok(micg().args([
        "simulate",
        "data",
        "--catalog",
        catalog().to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--n",
        &n.to_string(),
        "--rho",
        "0.4",
        "--sex-effect",
        "0.3",
        "--area-effect",
        "0.5",
        "--seed",
        &seed.to_string(),
    ]));
    data
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn pipeline_stages_chain_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = make_data(dir, 60, 3);
    header_ok(&data, 3);

    let matrix = dir.join("m.csv");
    run_ok(micg().args([
        "code",
        "--catalog",
        catalog().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        matrix.to_str().unwrap(),
    ]));
    header_ok(&matrix, 0);
    let matrix_text = fs::read_to_string(&matrix).unwrap();
    assert!(matrix_text.lines().nth(1).unwrap().starts_with("child_id,"));

    run_ok(micg().args([
        "index",
        "--catalog",
        catalog().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out-dir",
        dir.join("idx").to_str().unwrap(),
        "--group",
        "sex,area",
    ]));
    for name in [
        "results.csv",
        "weights.csv",
        "summary.csv",
        "frequency.csv",
        "profile.csv",
    ] {
        header_ok(&dir.join("idx").join(name), 0);
    }

    run_ok(micg().args([
        "robustness",
        "--catalog",
        catalog().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out-dir",
        dir.join("rob").to_str().unwrap(),
        "--schemes",
        "equal,pca",
    ]));
    header_ok(&dir.join("rob").join("concordance.csv"), 0);
    header_ok(&dir.join("rob").join("densities.csv"), 0);

    // charts read the index and frontier outputs back in
    let spider = dir.join("spider.svg");
    run_ok(micg().args([
        "chart",
        "spider",
        "--catalog",
        catalog().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        spider.to_str().unwrap(),
    ]));
    header_ok(&spider, 0);

    let density = dir.join("density.svg");
    run_ok(micg().args([
        "chart",
        "density",
        "--scores",
        dir.join("idx").join("results.csv").to_str().unwrap(),
        "--medians",
        "--out",
        density.to_str().unwrap(),
    ]));
    header_ok(&density, 0);
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = make_data(dir, 50, 5);

    let frontier = |out: &Path, seed_args: &[&str]| {
        let mut cmd = micg();
        cmd.args([
            "frontier",
            "--catalog",
            catalog().to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--chains",
            "2",
            "--iterations",
            "400",
            "--burn-in",
            "100",
        ]);
        cmd.args(seed_args);
        cmd
    };
    run_ok(&mut frontier(&dir.join("a"), &["--seed", "7"]));
    run_ok(&mut frontier(&dir.join("b"), &["--seed", "7"]));
    let mut env_run = frontier(&dir.join("c"), &[]);
    env_run.env("MICG_SEED", "7");
    run_ok(&mut env_run);

    for name in ["draws.csv", "opportunity.csv", "diagnostics.csv"] {
        let a = fs::read(dir.join("a").join(name)).unwrap();
        let b = fs::read(dir.join("b").join(name)).unwrap();
        let c = fs::read(dir.join("c").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert_eq!(a, c, "{name} differs when the seed comes from MICG_SEED");
    }
    header_ok(&dir.join("a").join("draws.csv"), 7);

    let scatter = dir.join("scatter.svg");
    run_ok(micg().args([
        "chart",
        "scatter",
        "--opportunity",
        dir.join("a").join("opportunity.csv").to_str().unwrap(),
        "--highlight-pct",
        "10",
        "--out",
        scatter.to_str().unwrap(),
    ]));
    header_ok(&scatter, 0);
}

#[test]
fn regress_fits_every_requested_quantile() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = make_data(dir, 60, 9);
    let out = dir.join("reg.csv");
    run_ok(micg().args([
        "regress",
        "--catalog",
        catalog().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--tau",
        "0.1",
        "--tau",
        "0.15",
    ]));
    header_ok(&out, 0);
    let text = fs::read_to_string(&out).unwrap();
    let count = |prefix: &str| text.lines().filter(|l| l.starts_with(prefix)).count();
    // one row per term: intercept, rural, female
    assert_eq!(count("ols,"), 3);
    assert_eq!(count("quantile,0.1,"), 3);
    assert_eq!(count("quantile,0.15,"), 3);
}

#[test]
fn flat_metric_geodesic_is_a_straight_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("geo.csv");
    run_ok(micg().args([
        "simulate",
        "geodesic",
        "--metric",
        "minkowski",
        "--x0",
        "0.5,0,-1",
        "--v0",
        "0.25,-0.5,1",
        "--h",
        "0.01",
        "--horizon",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]));
    header_ok(&out, 0);

    let rows = data_rows(&out);
    assert_eq!(rows.len(), 21);
    let (x0, v0) = ([0.5, 0.0, -1.0], [0.25, -0.5, 1.0]);
    for row in &rows {
        let t = row[0];
        for j in 0..3 {
            assert!(
                (row[1 + j] - (x0[j] + t * v0[j])).abs() < 1e-9,
                "position bends at t={t}"
            );
            assert_eq!(row[4 + j], v0[j], "velocity drifts at t={t}");
        }
    }
}

#[test]
fn validation_exits_two_and_missing_files_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = make_data(dir, 20, 1);

    let missing = micg()
        .args([
            "code",
            "--catalog",
            catalog().to_str().unwrap(),
            "--data",
            dir.join("absent.csv").to_str().unwrap(),
            "--out",
            dir.join("m.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("absent.csv"));

    let bad_tau = exit_code(micg().args([
        "regress",
        "--catalog",
        catalog().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.join("r.csv").to_str().unwrap(),
        "--tau",
        "1.5",
    ]));
    assert_eq!(bad_tau, 2);

    let custom_without_weights = exit_code(micg().args([
        "index",
        "--catalog",
        catalog().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out-dir",
        dir.join("idx").to_str().unwrap(),
        "--weights",
        "custom",
    ]));
    assert_eq!(custom_without_weights, 2);

    // clap usage errors share the validation exit code
    let unknown_flag = exit_code(micg().args(["index", "--no-such-flag"]));
    assert_eq!(unknown_flag, 2);
}
