use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polyomega(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyomega"))
        .args(args)
        .env("POLYOMEGA_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn strict_validate_names_fixed_divisor() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["validate", "--strict", "--system", "0,1;1,1;2,1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(
        err.starts_with("error: ") && err.contains("fixed prime divisor 2"),
        "{err}"
    );
}

#[test]
fn validate_warns_on_product_fixed_primes() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["validate", "--system", "0,1;1,1"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("betaD = 1"));
    assert!(out.contains("warning: Q(n) is divisible by 2 for every n"));
}

#[test]
fn invalid_inputs_fail_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["window", "--x", "ten"][..],
        &["validate", "--system", "0,0,1"],
        &["window", "--set", "colour=red"],
        &["verify", "--y", "17"],
        &["window", "--alpha", "1.5"],
    ] {
        let o = polyomega(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error: "), "{err}");
    }
    assert_eq!(fs::read_dir(dir.path()).map(|d| d.count()).unwrap_or(0), 0);
}

#[test]
fn empty_window_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["window", "--y", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(body(&csv), vec!["k_1,k_2,count"]);
    for key in [
        "system = 0,1;1,1",
        "x = 100000",
        "y = 0",
        "epsilon = ",
        "alpha = 0.5",
        "config_sha256 = ",
    ] {
        assert!(csv.contains(&format!("# {key}")), "missing {key}");
    }
}

#[test]
fn histogram_is_sorted_and_matches_hand_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["window", "--x", "10", "--y", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    let rows: Vec<Vec<u64>> = body(&csv)[1..]
        .iter()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let keys: Vec<&[u64]> = rows.iter().map(|r| &r[..2]).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // n = 14 (14, 15) and n = 20 (20, 21).
    assert!(rows.contains(&vec![2, 2, 2]));
    assert_eq!(rows.iter().map(|r| r[2]).sum::<u64>(), 10);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["window", "--x", "1000000", "--y", "20000", "--records"];
    assert!(polyomega(a.path(), &[&args[..], &["--threads", "1"]].concat())
        .status
        .success());
    assert!(polyomega(b.path(), &[&args[..], &["--threads", "3"]].concat())
        .status
        .success());
    for f in ["histogram.csv", "records.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_then_set_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# experiment\nsystem = 1,0,1\nx = 500\nz = 7\n").unwrap();
    let o = polyomega(
        dir.path(),
        &[
            "config",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "x=600",
            "--set",
            "z=9",
            "--z",
            "11",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for line in ["system = 1,0,1", "x = 600", "z = 11", "level = 11", "K = 1", "d = 1"] {
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
    // Only y keeps its symbolic rule; everything else is resolved.
    assert_eq!(text.matches("auto").count(), 1, "{text}");
    assert!(text.lines().any(|l| l == "y = auto"));
}

#[test]
fn rho_table_matches_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["rho", "--system", "1,0,1", "--set", "m_max=130"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("rho.csv")).unwrap();
    let rows = body(&csv);
    assert_eq!(rows[0], "modulus,count");
    for line in &rows[1..] {
        let (m, c) = line.split_once(',').unwrap();
        let m: u64 = m.parse().unwrap();
        let want = (0..m).filter(|r| (r * r + 1) % m == 0).count();
        assert_eq!(c.parse::<usize>().unwrap(), want, "m = {m}");
    }
    assert_eq!(rows.len(), 131);
}

#[test]
fn mertens_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["mertens", "--system", "0,1", "--set", "x_max=1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("mertens.csv")).unwrap();
    let rows = body(&csv);
    assert_eq!(rows[0], "x,S_1,S_1_minus_loglog,shifted_1");
    assert_eq!(rows.last().unwrap().split(',').next(), Some("1000"));
    assert!(csv.contains("# M_j = "));
}

#[test]
fn sieve_single_and_study() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(
        dir.path(),
        &["sieve", "--system", "0,1", "--x", "0", "--y", "100", "--z", "2"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sieve.csv")).unwrap();
    let row: Vec<&str> = body(&csv)[1].split(',').collect();
    assert_eq!(row[9], "50");
    assert!(row[8].parse::<f64>().unwrap() >= 50.0);
    let lambda = fs::read_to_string(dir.path().join("lambda.csv")).unwrap();
    assert_eq!(body(&lambda), vec!["d,lambda", "1,1", "2,-1"]);

    let o = polyomega(
        dir.path(),
        &[
            "sieve",
            "--study",
            "--x",
            "5000",
            "--y",
            "2000",
            "--set",
            "instances=12",
            "--seed",
            "3",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sieve_study.csv")).unwrap();
    let rows = body(&csv);
    assert_eq!(rows.len(), 13);
    assert!(rows[1..].iter().all(|r| r.ends_with(",false")));
}

#[test]
fn audit_passes_on_consecutive_integers() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["audit", "--x", "10000", "--set", "limit=2000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("audit.json")).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["window"]["classes"]["violation_count"], 0);
    assert_eq!(doc["product_fixed_primes"], serde_json::json!([2]));
    assert!(!dir.path().join("audit.FAILED").exists());
}

#[test]
fn verify_reports_one_entry_per_start() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyomega(dir.path(), &["verify", "--xs", "1000,10000,100000", "--y", "full"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(doc["headline"].as_array().unwrap().len(), 3);
    assert_eq!(doc["entries"][2]["x"], 100000);
    let table = fs::read_to_string(dir.path().join("verify_table.csv")).unwrap();
    assert_eq!(body(&table)[0], "x,k_1,k_2,count,rhs,ratio");
}
