use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_renyi-lab"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_stdout(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn maximally_mixed_entropy_is_ln4() {
    let o = run(&["entropy", "--density", path(&fixture("mixed4.json")), "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o)["value"].as_f64().unwrap();
    assert!((v - 1.386294).abs() < 5e-7, "{v}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.386294"));
}

#[test]
fn segal_and_relative_entropy_flags() {
    let h = fixture("hfix.json");
    let k = fixture("mixed4.json");
    let o = run(&["entropy", "--density", path(&h), "--alpha", "2", "--segal", "--relative", path(&h)]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert!(v["relative"].as_f64().unwrap().abs() < 1e-12);
    // τ(h ln h) is negative for a state with two nonzero eigenvalues.
    assert!(v["segal"].as_f64().unwrap() < 0.0);
    // Densities on different algebras are an input error.
    let o = run(&["entropy", "--density", path(&h), "--alpha", "2", "--relative", path(&k)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pinching_fixture_is_not_preserved() {
    let o = run(&[
        "preservation-test",
        "--channel",
        path(&fixture("pinch2.json")),
        "--density",
        path(&fixture("hfix.json")),
        "--alpha",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert_eq!(v["verdict"], "not-preserved");
    let ds = v["delta_s"].as_f64().unwrap();
    assert!((ds - 0.12921).abs() < 1e-3, "{ds}");
    assert_eq!(v["tolerances"]["entropy"].as_f64(), Some(1e-10));
}

#[test]
fn classify_needs_an_algebra_for_bare_builtins() {
    let pinch = fixture("pinch2.json");
    let o = run(&["channel-classify", "--channel", path(&pinch)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["channel-classify", "--channel", path(&pinch), "--algebra", path(&fixture("m2.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert_eq!(v["completely_positive"], true);
    assert_eq!(v["jordan_multiplicative"], false);
}

#[test]
fn generate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&["generate", "density", "--dims", "2", "--seed", "1", "--output", path(p)]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = run(&["generate", "density", "--dims", "2", "--seed", "2", "--output", path(&b)]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn generated_unitary_channel_is_jordan() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.json");
    let o = run(&[
        "generate",
        "channel",
        "--dims",
        "2,2",
        "--family",
        "haar_unitary_conjugation",
        "--seed",
        "5",
        "--output",
        path(&c),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["channel-classify", "--channel", path(&c)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_stdout(&o)["jordan_multiplicative"], true);
}

#[test]
fn generated_degenerate_density_has_a_repeated_eigenvalue() {
    let o = run(&["generate", "density", "--dims", "3", "--seed", "4", "--degenerate"]);
    assert_eq!(o.status.code(), Some(0));
    let h = renyi_lab::io::operator_from_str(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let h = renyi_lab::Hermitian::new(h, 1e-12).unwrap();
    let spec = renyi_lab::spectral_decompose(&h, 1e-8).unwrap();
    assert!(spec.len() < 3);
}

#[test]
fn full_suite_seed_7_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("replay.json");
    let o = run(&[
        "verify-suite",
        "--suite",
        "all",
        "--instances",
        "100",
        "--seed",
        "7",
        "--replay-out",
        path(&replay),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let reports = json_stdout(&o);
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for r in reports {
        assert!(r["violations"].as_array().unwrap().is_empty());
        assert_eq!(r["tolerances"]["order"].as_f64(), Some(1e-8));
    }
    assert!(!replay.exists());
}

#[test]
fn suite_output_is_deterministic() {
    let args = ["verify-suite", "--suite", "preservation", "--instances", "30", "--seed", "11", "--dims", "2,2+2"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn injected_violation_exits_1_with_a_replay_file() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("replay.json");
    let o = run(&[
        "verify-suite",
        "--suite",
        "monotone",
        "--instances",
        "10",
        "--inject-violation",
        "--replay-out",
        path(&replay),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&replay).unwrap()).unwrap();
    let violations = file["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert!(violations[0]["instance"]["density"].is_object());

    let o = run(&["verify-suite", "--replay", path(&replay)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_stdout(&o).as_array().unwrap().len(), 1);
}

#[test]
fn convergence_demo_emits_a_trace_and_table() {
    let o = run(&["convergence-demo", "--density", path(&fixture("hfix.json")), "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_stdout(&o);
    assert_eq!(v["stages"].as_array().unwrap().len(), 4);
    assert_eq!(v["monotone_flag"], true);
    let table = String::from_utf8_lossy(&o.stderr);
    assert!(table.contains("tail bound"));
}

#[test]
fn text_format_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.txt");
    let o = run(&[
        "entropy",
        "--density",
        path(&fixture("mixed4.json")),
        "--alpha",
        "2",
        "--format",
        "text",
        "--output",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "S_2 = 1.386294\n");
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(run(&["entropy", "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        run(&["entropy", "--density", path(&fixture("mixed4.json")), "--alpha", "1"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["entropy", "--density", path(&bad), "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify-suite", "--dims", "2,x"]).status.code(),
        Some(2)
    );
}
