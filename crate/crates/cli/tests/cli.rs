use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn korgforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_korgforge")).args(args).env_remove("KORGFORGE_STATE_BUDGET").output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_relay_model() {
    let out = korgforge(&["check", path(&model("fig5.tm"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}

#[test]
fn check_rejects_violated_property() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(model("fig5.tm")).unwrap().replace("property <>[]l", "property []l");
    let tm = dir.path().join("bad.tm");
    fs::write(&tm, text).unwrap();
    let out = korgforge(&["check", path(&tm)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("failed:"));
}

#[test]
fn synth_relay_writes_one_valid_attacker() {
    let dir = tempfile::tempdir().unwrap();
    let out = korgforge(&["synth", path(&model("fig5.tm")), "--limit", "1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let attacker = dir.path().join("attacker-0.json");
    assert!(attacker.exists());
    assert!(!dir.path().join("attacker-1.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("A0: [m!] ([m!])^w; A1: [k!] ([n?])^w"), "{stdout}");

    let v = korgforge(&["validate", path(&model("fig5.tm")), path(&attacker)]);
    assert_eq!(v.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(report["valid"], true);
}

#[test]
fn synth_tcp_recovery_emits_ack_first_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = korgforge(&[
        "synth",
        path(&model("tcp_phi2.tm")),
        "--recovery",
        "--limit",
        "10",
        "--fmt",
        "guarded-text",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bodies: Vec<String> = (0..10)
        .filter_map(|k| fs::read_to_string(dir.path().join(format!("attacker-{k}.txt"))).ok())
        .collect();
    assert!(!bodies.is_empty());
    let plan_starts = |b: &String| b.lines().find(|l| !l.starts_with("/*")).is_some_and(|l| l == "Nto1 ! ACK;");
    assert!(bodies.iter().any(plan_starts), "{bodies:#?}");
}

#[test]
fn synth_without_attackers_exits_3() {
    // nothing the helper can send affects the target
    let dir = tempfile::tempdir().unwrap();
    let tm = dir.path().join("safe.tm");
    fs::write(
        &tm,
        "process P {\n  props ok\n  init p0\n  state p0 : ok\n  p0 --x!--> p0\n}\n\n\
         process Q {\n  q0 --y!--> q0\n}\n\ntarget P\nvulnerable Q\nproperty []ok\n",
    )
    .unwrap();
    let out = korgforge(&["synth", path(&tm), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("attacker-0.json").exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(korgforge(&["synth"]).status.code(), Some(2));
    assert_eq!(korgforge(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(korgforge(&["export", "x.tm", "--fmt", "svg"]).status.code(), Some(2));
}

#[test]
fn missing_file_is_an_error() {
    assert_eq!(korgforge(&["check", "/nonexistent/model.tm"]).status.code(), Some(1));
}

#[test]
fn export_renders_dot() {
    let out = korgforge(&["export", path(&model("fig5.tm")), "--fmt", "dot"]);
    assert_eq!(out.status.code(), Some(0));
    let dot = String::from_utf8_lossy(&out.stdout);
    assert!(dot.starts_with("digraph \"threat_model\""));

    let dir = tempfile::tempdir().unwrap();
    korgforge(&["synth", path(&model("fig5.tm")), "--limit", "1", "--out", path(dir.path())]);
    let out = korgforge(&["export", path(&dir.path().join("attacker-0.json")), "--fmt", "dot"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("A1 replaces Q1"));
}

#[test]
fn mc_prints_counterexamples() {
    let out = korgforge(&["mc", path(&model("fig5.tm"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("violated\n# lasso\n"), "{text}");
    assert!(text.contains("--- cycle ---"));
}

#[test]
fn state_budget_is_enforced() {
    let out = Command::new(env!("CARGO_BIN_EXE_korgforge"))
        .args(["synth", path(&model("tcp_phi1.tm")), "--out", "/nonexistent"])
        .env("KORGFORGE_STATE_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let run = |fmt: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = korgforge(&[
            "synth",
            path(&model("tcp_phi1.tm")),
            "--limit",
            "5",
            "--fmt",
            fmt,
            "--out",
            path(dir.path()),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        (out.stdout, files)
    };
    for fmt in ["json", "dot", "guarded-text"] {
        assert_eq!(run(fmt), run(fmt), "{fmt}");
    }
}
