use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gptcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gptcast")).args(args).output().expect("binary runs")
}

fn demo_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demos").join(format!("{name}.toml"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn run_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let scenario = demo_file("gbit-adjacent-pair");
    let out = gptcast(&["run", path_str(&scenario), "--report", path_str(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict:   yes"));

    let out = gptcast(&["verify", path_str(&report)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("report verified"));
}

#[test]
fn tampered_report_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let scenario = demo_file("gbit-adjacent-pair");
    assert!(gptcast(&["run", path_str(&scenario), "--report", path_str(&report)]).status.success());

    let mut json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    json["result"]["witness"]["matrix"][0][2] = "2".into();
    std::fs::write(&report, serde_json::to_vec(&json).unwrap()).unwrap();
    let out = gptcast(&["verify", path_str(&report)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn no_instance_report_carries_a_verifiable_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = gptcast(&["demo", "pentagon-vertices", "--report", path_str(&report)]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["result"]["verdict"], "no");
    assert!(json["result"]["certificate"].is_object());
    assert!(gptcast(&["verify", path_str(&report)]).status.success());
}

#[test]
fn zero_denominator_is_rejected_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.toml");
    std::fs::write(
        &scenario,
        "task = \"clone\"\ncomposite = \"max\"\n[space]\nbuiltin = \"square\"\n[states]\nvectors = [[\"1/0\", \"1\", \"1\"]]\n",
    )
    .unwrap();
    let out = gptcast(&["run", path_str(&scenario)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("states.vectors[0][0]") && err.contains("zero denominator"), "{err}");
}

#[test]
fn demo_listing_names_every_demo() {
    let out = gptcast(&["demo"]);
    assert!(out.status.success());
    let listing = String::from_utf8_lossy(&out.stdout);
    for demo in gptcast_cli::demos::DEMOS {
        assert!(listing.contains(demo.name), "{} missing", demo.name);
    }
}
