use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn binreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn binreg_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binreg"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn write_csv(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn fit_balanced_gives_exact_zero() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(&dir, "bal.csv", "x,y\n0,1\n1,0\n2,0\n3,1\n");
    let out = binreg(&["fit", "--link", "logit", "--csv", &csv]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["alpha"], 0.0);
    assert_eq!(v["beta"], serde_json::json!([0.0]));
    assert_eq!(v["status"], "Converged");
    assert!(v["loglik"].as_f64().is_some());
    assert!(v["score_norm"].as_f64().is_some());
    assert!(v["iterations"].as_u64().is_some());
}

#[test]
fn fit_overlapping_has_positive_slope() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(&dir, "d.csv", "x,y\n1,0\n3,0\n2,1\n4,1\n");
    for link in ["logit", "probit", "cloglog", "cauchit"] {
        let out = binreg(&["fit", "--link", link, "--csv", &csv]);
        assert_eq!(out.status.code(), Some(0), "{link}");
        let v = json(&out);
        assert_eq!(v["status"], "Converged", "{link}");
        assert!(v["beta"][0].as_f64().unwrap() > 0.0, "{link}");
    }
}

#[test]
fn fit_refuses_separated_data_without_force() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(&dir, "sep.csv", "x,y\n1,0\n2,0\n3,1\n4,1\n");
    let out = binreg(&["fit", "--csv", &csv]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "Refused");
    assert!(v["alpha"].is_null() && v["beta"].is_null());
    assert!(!out.stderr.is_empty());

    let out = binreg(&["fit", "--csv", &csv, "--force"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "Diverged");
    assert!(v["beta"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn json_out_matches_stdout() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(&dir, "d.csv", "x,y\n1,0\n3,0\n2,1\n4,1\n");
    let target = dir.path().join("fit.json");
    let out = binreg(&["fit", "--csv", &csv, "--json-out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&target).unwrap(), out.stdout);
}

#[test]
fn overlap_verdicts_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let sep = write_csv(&dir, "sep.csv", "x,y\n1,0\n2,0\n3,1\n4,1\n");
    let out = binreg(&["overlap", "--csv", &sep]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["verdict"], "Separated");
    assert_eq!(v["direction_hint"], 1);

    let ov = write_csv(&dir, "ov.csv", "x,y\n1,0\n3,0\n2,1\n4,1\n");
    let out = binreg(&["overlap", "--csv", &ov]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "Overlap");
    assert!(v["margin"].as_f64().unwrap() > 0.0);

    let out = binreg(&[
        "overlap",
        "--csv",
        &write_csv(&dir, "s.csv", "x,y\n1,0\n1,1\n"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["verdict"], "DegenerateAllEqual");
}

#[test]
fn scalar_overlap_reports_bounds() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(&dir, "d.csv", "y,x\n0,1\n0,3\n1,2\n1,4\n");
    let v = json(&binreg(&["overlap", "--csv", &csv]));
    assert_eq!(v["method"], "ConeLP");
    let b = &v["bounds"];
    assert_eq!(b["l0"], 1.0);
    assert_eq!(b["u0"], 3.0);
    assert_eq!(b["l1"], 2.0);
    assert_eq!(b["u1"], 4.0);
}

#[test]
fn input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("nolabel.csv", "x,z\n1,0\n"),
        ("nonbinary.csv", "x,y\n1,0\n2,2\n"),
        ("text.csv", "x,y\n1,0\nabc,1\n"),
        ("onegroup.csv", "x,y\n1,1\n2,1\n"),
        ("empty.csv", "x,y\n"),
    ];
    for (name, body) in cases {
        let csv = write_csv(&dir, name, body);
        let out = binreg(&["fit", "--csv", &csv]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
        assert!(!out.stderr.is_empty(), "{name}");
    }
    let out = binreg(&[
        "fit",
        "--csv",
        dir.path().join("missing.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_are_nonzero() {
    for args in [
        &["fit", "--csv", "x.csv", "--link", "nope"][..],
        &["fit"][..],
        &["verify", "--theorem", "bogus"][..],
        &["--unknown"][..],
    ] {
        let out = binreg(args);
        assert_ne!(out.status.code(), Some(0), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(binreg(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_all_small_run_passes() {
    let out = binreg(&[
        "verify",
        "--theorem",
        "all",
        "--trials",
        "200",
        "--seed",
        "42",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["failures"], 0);
    assert_eq!(
        v["passes"],
        v["trials"].as_u64().unwrap() - v["skipped"].as_u64().unwrap()
    );
    assert!(v["worst_slack"].as_f64().unwrap() > 0.0);
    // sign on d=1 plus zero and angle on d=1..3, for three links
    assert_eq!(v["suites"].as_array().unwrap().len(), 3 * (1 + 3 + 3));
}

#[test]
fn verify_output_is_byte_identical_across_thread_counts() {
    let args = [
        "verify",
        "--theorem",
        "angle",
        "--dims",
        "2",
        "--trials",
        "150",
        "--seed",
        "7",
    ];
    let one = binreg_env(&args, "BINREG_THREADS", "1");
    let four = binreg_env(&args, "BINREG_THREADS", "4");
    let again = binreg_env(&args, "BINREG_THREADS", "4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(four.stdout, again.stdout);

    let other = binreg_env(
        &[
            "verify",
            "--theorem",
            "angle",
            "--dims",
            "2",
            "--trials",
            "150",
            "--seed",
            "8",
        ],
        "BINREG_THREADS",
        "4",
    );
    assert_ne!(one.stdout, other.stdout);
}

#[test]
fn bad_thread_count_is_input_error() {
    let out = binreg_env(&["verify", "--trials", "2"], "BINREG_THREADS", "zero");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_uncertified_link_never_fails_the_run() {
    let out = binreg(&[
        "verify", "--link", "cauchit", "--trials", "30", "--seed", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["certified"] == false));
}

#[test]
fn simulate_round_trips_through_overlap_and_fit() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("sim.csv");
    let p = path.to_str().unwrap();
    for (kind, code) in [("overlapping", 0), ("separated", 2), ("balanced", 0)] {
        let out = binreg(&[
            "simulate", "--kind", kind, "--n", "25", "--d", "2", "--seed", "5", "--out", p,
        ]);
        assert_eq!(out.status.code(), Some(0), "{kind}");
        assert!(Path::new(p).exists());
        let out = binreg(&["overlap", "--csv", p]);
        assert_eq!(out.status.code(), Some(code), "{kind}");
    }
    let a = binreg(&[
        "simulate", "--kind", "gaussian", "--n", "30", "--d", "3", "--seed", "9",
    ]);
    let b = binreg(&[
        "simulate", "--kind", "gaussian", "--n", "30", "--d", "3", "--seed", "9",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 31);
}

#[test]
fn plain_output() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(&dir, "d.csv", "x,y\n1,0\n3,0\n2,1\n4,1\n");
    let out = binreg(&["--output", "plain", "fit", "--csv", &csv]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("status: Converged\n"));
    assert!(serde_json::from_str::<Value>(&text).is_err());
}
