use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/corpus")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ponziscan")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    corpus().join(name).to_string_lossy().into_owned()
}

#[test]
fn scan_writes_report_and_signals_findings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["scan", corpus().to_str().unwrap(), "--format", "json", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schemaVersion"], 1);
    assert_eq!(report["totalFiles"], 10);
    assert_eq!(report["countsByClass"]["Tree"], 2);
}

#[test]
fn scan_of_clean_file_exits_zero() {
    let o = run(&["scan", &fixture("simple_token.sol"), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "Unknown,1"));
}

#[test]
fn classify_prints_class_and_rationale() {
    let o = run(&["classify", &fixture("etheramid.sol")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("Tree"));
    assert!(text.contains("payout_parent_walk at "));
}

#[test]
fn findings_exit_codes() {
    assert_eq!(run(&["findings", &fixture("ponzi_scheme.sol")]).status.code(), Some(1));
    let o = run(&["findings", &fixture("simple_token.sol"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "[]");
    assert_eq!(run(&["findings", &fixture("broken_unbalanced.sol")]).status.code(), Some(2));
}

#[test]
fn simulate_transfer_script() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("t.txt");
    std::fs::write(&script, "deposit A 1ether\ndeposit B 2ether\ndeposit C 4ether\n").unwrap();
    let o = run(&["simulate", "transfer", "--script", script.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rois: Vec<&str> = v["roi"].as_array().unwrap().iter().map(|r| r["roi"].as_str().unwrap()).collect();
    assert_eq!(rois, ["2", "2", "0"]);

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["simulate", "--scheme", "transfer", "--script", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("Deposit"));
}

#[test]
fn faithful_bug_flag_changes_chain_recipients() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("c.txt");
    let lines: String = (0..8).map(|i| format!("deposit d{i} 1ether\n")).collect();
    std::fs::write(&script, lines).unwrap();
    let payees = |flag: &str| {
        let o = run(&[
            "simulate",
            "chain",
            "--script",
            script.to_str().unwrap(),
            "--faithful-bugs",
            flag,
            "--format",
            "json",
        ]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["trace"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["kind"] == "Payout")
            .map(|e| e["actor"].as_str().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert!(payees("on").iter().all(|p| p == "d0"));
    assert_eq!(payees("off")[..2], ["d0", "d1"]);
}

#[test]
fn fomo3d_threshold_flag() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("r.txt");
    std::fs::write(&script, "buy A 0.5ether\n").unwrap();
    let tracker = |extra: &[&str]| {
        let mut args = vec!["fomo3d", "--script", script.to_str().unwrap(), "--format", "json"];
        args.extend_from_slice(extra);
        let v: serde_json::Value = serde_json::from_str(&stdout(&run(&args))).unwrap();
        v["state"]["airDropTracker"].as_u64().unwrap()
    };
    assert!(tracker(&[]) <= 1);
    assert_eq!(tracker(&["--airdrop-threshold", "1ether"]), 0);
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["scan", "x", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "pyramid"]).status.code(), Some(2));
    let o = run(&["scan", "/definitely/not/here"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty() && !o.stderr.is_empty());
    assert_eq!(run(&["classify", "/definitely/not/here.sol"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn report_re_renders_saved_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    run(&["scan", corpus().to_str().unwrap(), "-o", json.to_str().unwrap()]);
    let direct = run(&["scan", corpus().to_str().unwrap(), "--format", "text"]);
    let rendered = run(&["report", json.to_str().unwrap(), "--format", "text"]);
    assert_eq!(rendered.status.code(), Some(0));
    assert_eq!(rendered.stdout, direct.stdout);
}
