//! End-to-end tests of the command-line binary: exit codes, output schemas,
//! and byte-level determinism.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_padic-flats"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_lines(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid JSON line"))
        .collect()
}

#[test]
fn expected_flats_exact_cubic() {
    let out = run(&[
        "expected-flats",
        "--p", "2",
        "--n", "3",
        "--k", "1",
        "--degrees", "3",
        "--method", "exact",
        "--precision", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 1);
    let rec = &lines[0];
    assert_eq!(rec["reference"], "35/31");
    assert_eq!(rec["pass"], true);
    assert_eq!(rec["grassmannian_factor"], "35/16");
    assert_eq!(rec["method"], "exact");
}

#[test]
fn expected_flats_invalid_configs_exit_2_with_no_output() {
    // Inadmissible profile: a single quadric does not cut lines in 3-space
    // down to isolated points on the flat side.
    let out = run(&["expected-flats", "--p", "2", "--n", "3", "--k", "1", "--degrees", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty(), "no partial output on invalid config");
    assert!(!out.stderr.is_empty());

    let out = run(&["expected-flats", "--p", "4", "--n", "3", "--k", "1", "--degrees", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn expected_flats_guard_exit_3() {
    let out = run(&[
        "expected-flats",
        "--p", "7",
        "--n", "3",
        "--k", "1",
        "--degrees", "3",
        "--method", "exact",
        "--precision", "9",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn guard_env_var_is_honored_and_flag_wins() {
    // m = 2 needs 2^12 tuples; an env guard of 100 forces exit 3.
    let out = bin()
        .args(["expected-flats", "--p", "2", "--n", "3", "--k", "1", "--degrees", "3"])
        .env("PADIC_FLATS_GUARD", "100")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(3));

    // The explicit flag overrides the environment.
    let out = bin()
        .args([
            "expected-flats",
            "--p", "2",
            "--n", "3",
            "--k", "1",
            "--degrees", "3",
            "--guard", "100000000",
        ])
        .env("PADIC_FLATS_GUARD", "100")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0));

    let out = bin()
        .args(["expected-flats", "--p", "2", "--n", "3", "--k", "1", "--degrees", "3"])
        .env("PADIC_FLATS_GUARD", "not-a-number")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_counts_suite_passes() {
    let out = run(&["verify", "--suite", "counts", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert!(lines.len() >= 7);
    for rec in &lines {
        assert_eq!(rec["pass"], true, "identity failed: {rec}");
        assert!(rec["lemma"].is_string());
        assert!(rec["brute"].is_string());
        assert!(rec["formula"].is_string());
    }
}

#[test]
fn verify_rejects_unknown_suite_and_composite_prime() {
    let out = run(&["verify", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["verify", "--suite", "counts", "--p", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn scan_csv_and_prime_validation() {
    let out = run(&["scan", "--primes", "2,3,5..12"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,cubic,cubic_decimal,quadrics,lower_bound,limsup_bound,limsup_decimal"
    );
    let rows: Vec<&str> = lines.collect();
    // 2, 3, then the primes in 5..=12: 5, 7, 11.
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("2,35/31,"));
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("1/1")));

    let out = run(&["scan", "--primes", "2,9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty(), "no partial output on invalid list");
}

#[test]
fn scan_json_rows() {
    let out = run(&["scan", "--primes", "2,3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["cubic"], "35/31");
    assert_eq!(lines[1]["p"], 3);
}

#[test]
fn volkenborn_exit_codes_by_prime() {
    // At p = 2 the strict per-level distance bound fails.
    let out = run(&["volkenborn", "--p", "2", "--levels", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let lines = stdout_lines(&out);
    assert_eq!(lines[0]["pass"], false);
    assert_eq!(lines[0]["partials"][0], "1/2");

    // At p = 3 the default target -1/9 is not 3-integral: invalid config.
    let out = run(&["volkenborn", "--p", "3", "--levels", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    // At p = 5 the target is a 5-adic integer and level 1 is within reach.
    let out = run(&["volkenborn", "--p", "5", "--levels", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert_eq!(lines[0]["pass"], true);
    assert_eq!(lines[0]["partials"][0], "56/1");
}

#[test]
fn volkenborn_coordinate_integrand() {
    // Partial sums of the identity function approach -1/2 2-adically.
    let out = run(&[
        "volkenborn",
        "--p", "2",
        "--levels", "3",
        "--integrand", "coordinate",
        "--target", "-1/2",
    ]);
    // -1/2 has 2 in the denominator: invalid target for p = 2.
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "volkenborn",
        "--p", "3",
        "--levels", "2",
        "--integrand", "coordinate",
        "--target", "-1/2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert_eq!(lines[0]["integrand"], "coordinate");
    assert_eq!(lines[0]["pass"], true);
}

#[test]
fn template_dump_emits_schema() {
    let out = run(&["template-dump", "--n", "3", "--k", "1", "--degrees", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert_eq!(lines[0]["var_count"], 6);
    assert_eq!(lines[0]["size"], 4);
    assert_eq!(lines[0]["variables"][0], "x1_2010");

    let out = run(&["template-dump", "--n", "3", "--k", "1", "--degrees", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_rejected_outside_scan() {
    let out = run(&[
        "expected-flats",
        "--p", "2", "--n", "3", "--k", "1", "--degrees", "3",
        "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn identical_configs_are_byte_identical_across_thread_counts() {
    let args = [
        "expected-flats",
        "--p", "3",
        "--n", "3",
        "--k", "1",
        "--degrees", "3",
        "--method", "mc",
        "--samples", "5000",
        "--seed", "12345",
        "--precision", "6",
    ];
    let a = run(&args);
    let b = bin().args(args).arg("--threads").arg("1").output().unwrap();
    let c = bin().args(args).arg("--threads").arg("5").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let v1 = run(&["verify", "--suite", "jacobian", "--p", "2"]);
    let v2 = run(&["verify", "--suite", "jacobian", "--p", "2"]);
    assert_eq!(v1.stdout, v2.stdout);
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("padic-flats-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scan.csv");
    let out = run(&["scan", "--primes", "2,3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let body = std::fs::read_to_string(&path).unwrap();
    assert!(body.starts_with("p,cubic,"));
    assert_eq!(body.lines().count(), 3);
    std::fs::remove_dir_all(&dir).ok();
}
