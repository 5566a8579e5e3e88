use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dscl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dscl")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TRUTH: &str = r#"{"id":"q1","tool_calls":[{"name":"get_weather","parameters":{"city":"Paris"}}]}
{"id":"q2","tool_calls":[]}
"#;

const GOOD: &str = "<think>ok</think>\n<tool_call>\n{\"name\":\"get_weather\",\"parameters\":{\"city\":\"Paris\"}}\n</tool_call>";

#[test]
fn score_perfect_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.jsonl");
    let preds = dir.path().join("preds.jsonl");
    let out = dir.path().join("scores.jsonl");
    fs::write(&truth, TRUTH).unwrap();
    let line = serde_json::json!({"id": "q1", "raw_response": GOOD});
    fs::write(&preds, format!("{line}\n")).unwrap();

    let o = dscl(&["score", "--predictions", p(&preds), "--truth", p(&truth), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<Value> = fs::read_to_string(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["id"], "q1");
    assert_eq!(rows[0]["total"], 4.0);
    // The truth-only id is reported but is not an error.
    assert!(stderr(&o).contains("q2"));

    let o = dscl(&["score", "--predictions", p(&preds), "--truth", p(&truth), "--out", p(&out), "--scheme", "stage3"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn score_empty_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.jsonl");
    let preds = dir.path().join("preds.jsonl");
    let out = dir.path().join("scores.jsonl");
    fs::write(&truth, TRUTH).unwrap();
    fs::write(&preds, "").unwrap();
    let o = dscl(&["score", "--predictions", p(&preds), "--truth", p(&truth), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn score_unmatched_id() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.jsonl");
    let preds = dir.path().join("preds.jsonl");
    let out = dir.path().join("scores.jsonl");
    fs::write(&truth, TRUTH).unwrap();
    let line = serde_json::json!({"id": "ghost", "raw_response": GOOD});
    fs::write(&preds, format!("{line}\n")).unwrap();
    let o = dscl(&["score", "--predictions", p(&preds), "--truth", p(&truth), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("UNMATCHED_IDS") && err.contains("ghost"), "{err}");
}

#[test]
fn score_malformed_truth() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.jsonl");
    let preds = dir.path().join("preds.jsonl");
    fs::write(&truth, "{\"id\": \"q1\", \"tool_calls\": [}\n").unwrap();
    fs::write(&preds, "").unwrap();
    let o = dscl(&["score", "--predictions", p(&preds), "--truth", p(&truth), "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("SCHEMA_ERROR"));
}

#[test]
fn simulate_writes_run_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "epochs = 3\nbatch_size = 25\nlearning_rate = 0.5\nseed = 5\nsampler_mode = \"DSCL\"\n").unwrap();
    let out = dir.path().join("run");
    let o = dscl(&["simulate", "--config", p(&cfg), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in dscl_core::sim::RUN_FILES {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let manifest = dscl_core::sim::read_manifest(&out).unwrap();
    assert_eq!(manifest.seed, 5);
}

#[test]
fn simulate_rejects_misspelled_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "sampler_mode = \"DSLC\"\n").unwrap();
    let o = dscl(&["simulate", "--config", p(&cfg), "--out-dir", p(&dir.path().join("run"))]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("CONFIG_ERROR") && err.contains("sampler_mode"), "{err}");
}

#[test]
fn analyze_history() {
    let dir = tempfile::tempdir().unwrap();
    let history = dir.path().join("history.jsonl");
    let perfect = dscl_core::reward::SubRewards::perfect(dscl_core::reward::RewardBounds::new(2, 1));
    let group = dscl_core::stats::RolloutGroup {
        datum_id: "only".into(),
        epoch: 1,
        rewards: vec![4.0; 4],
        sub_rewards: vec![perfect; 4],
        metadata: dscl_core::stats::DatumMetadata { num_tools: 2, num_params: 1, num_turns: 1 },
    };
    fs::write(&history, format!("{}\n", serde_json::to_string(&group).unwrap())).unwrap();

    let out = dir.path().join("scatter.csv");
    let o = dscl(&["analyze", "--history", p(&history), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);

    let o = dscl(&["analyze", "--history", p(&history), "--out", p(&out), "--group-by", "num-tools"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",2")), "{text}");
}

#[test]
fn analyze_missing_and_empty_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scatter.csv");
    let o = dscl(&["analyze", "--history", p(&dir.path().join("nope.jsonl")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("IO_ERROR"));

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = dscl(&["analyze", "--history", p(&empty), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("EMPTY_HISTORY"));
}

#[test]
fn usage_errors() {
    assert_eq!(dscl(&["score", "--bogus"]).status.code(), Some(2));
    assert_eq!(dscl(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(dscl(&["analyze", "--history", "h", "--out", "o", "--group-by", "colour"]).status.code(), Some(2));
    assert_eq!(dscl(&["--help"]).status.code(), Some(0));
}
