//! The bknap binary: exit codes and output stability.

use std::path::Path;
use std::process::{Command, Output};

fn bknap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bknap")).args(args).output().unwrap()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha": 0.025, "unknown_field": 1}"#).unwrap();
    assert_eq!(bknap(&["profile", "--config", &s(&bad)]).status.code(), Some(2));
    assert_eq!(bknap(&["pvalue", "--design", "5,5", "--test", "fisher"]).status.code(), Some(2));
    assert_eq!(bknap(&["construct", "--design", "5,5", "--alpha", "2"]).status.code(), Some(2));
    assert_eq!(bknap(&["profile", "--config", &s(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

#[test]
fn node_limit_exits_3_with_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = bknap(&[
        "construct",
        "--design",
        "10,10",
        "--test",
        "apk",
        "--node-limit",
        "1",
        "--output-dir",
        &s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("region_apk_10_10.csv").exists());
}

#[test]
fn empty_roster_profile_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = bknap(&[
        "profile",
        "--design",
        "3,3",
        "--output-dir",
        &s(dir.path()),
        "--cache-dir",
        &s(&dir.path().join("c")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("type1_3_3.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("theta_C"));
}

#[test]
fn outputs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"designs": [{{"n_c": 6, "n_d": 6}}], "tests": [{{"test": "fisher"}}, {{"test": "apk"}}, {{"test": "mpk"}}],
                "profile_step": 0.01, "svg": true, "cache_dir": {:?}}}"#,
            s(&dir.path().join("cache"))
        ),
    )
    .unwrap();
    let run = |sub: &str, out: &Path| {
        let o = bknap(&[sub, "--config", &s(&cfg), "--output-dir", &s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for sub in ["profile", "compare"] {
        run(sub, &a);
        run(sub, &b);
    }
    for f in ["type1_6_6.csv", "type1_6_6.svg", "compare_6_6.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let svg = std::fs::read_to_string(a.join("type1_6_6.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray"));
}

#[test]
fn pvalue_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = bknap(&["pvalue", "--design", "148,132", "--observed", "140,131", "--test", "fisher"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "FE\t0.027145");
    let mps = dir.path().join("m.mps");
    let out = bknap(&["export-mps", "--design", "3,3", "--test", "mpk", "--out", &s(&mps)]);
    assert_eq!(out.status.code(), Some(0));
    let back = binomial_knapsack::ilp::mps::read_mps(&mps).unwrap();
    assert_eq!(back.binary_count, 16);
    assert!(back.continuous.is_some());
}
