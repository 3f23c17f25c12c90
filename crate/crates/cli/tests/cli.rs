use std::path::Path;
use std::process::{Command, Output};

use simpeval_core::dataset::{Dataset, SimplificationInstance};

fn simpeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simpeval")).args(args).env_remove("SIMPEVAL_STORE").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_fixture(dir: &Path, name: &str, seed: usize) -> String {
    let mut v = Vec::new();
    for g in 0..6 {
        let c = format!("The committee postponed decision number {} until the following week.", g + seed);
        let outputs = [
            ("good", "The committee delayed the decision.", 80.0 + g as f64),
            ("copy", c.as_str(), 50.0 - g as f64),
            ("bad", "week the until decision.", 10.0 + g as f64),
        ];
        for (rank, (sys, out, raw)) in outputs.into_iter().enumerate() {
            v.push(
                SimplificationInstance::new(&format!("{name}-{g}-{sys}"), &c, out, &["The group delayed it."])
                    .with_system(sys)
                    .with_rating("a", raw, rank as u32 + 1)
                    .with_rating("b", raw * 0.9 + 3.0, rank as u32 + 1),
            );
        }
    }
    let path = dir.join(format!("{name}.jsonl"));
    std::fs::write(&path, Dataset::new(v).unwrap().to_jsonl()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(simpeval(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(simpeval(&["score", "--metric", "sari"]).status.code(), Some(1));
    assert_eq!(simpeval(&["--help"]).status.code(), Some(0));
    let missing = simpeval(&["score", "--data", "/nonexistent/x.jsonl", "--metric", "sari"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}

#[test]
fn invalid_data_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.jsonl");
    std::fs::write(&p, "{\"id\": 3}\n").unwrap();
    assert_eq!(simpeval(&["score", "--data", p.to_str().unwrap(), "--metric", "fkgl"]).status.code(), Some(1));
}

#[test]
fn score_writes_one_line_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path(), "d", 0);
    for metric in ["sari", "bleu", "fkgl"] {
        let out = stdout(&simpeval(&["score", "--data", &data, "--metric", metric]));
        let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 18);
        assert_eq!(lines[0]["id"], "d-0-good");
        assert!(lines.iter().all(|l| l["score"].is_f64()));
    }
    let refs = dir.path().join("refs.jsonl");
    std::fs::write(&refs, "{\"id\":\"d-0-good\",\"references\":[\"The committee delayed the decision.\"]}\n").unwrap();
    let out = stdout(&simpeval(&["score", "--data", &data, "--metric", "sari", "--refs", refs.to_str().unwrap()]));
    let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(first["score"], 100.0);
    std::fs::write(&refs, "{\"id\":\"nope\",\"references\":[\"x\"]}\n").unwrap();
    let unknown = simpeval(&["score", "--data", &data, "--metric", "sari", "--refs", refs.to_str().unwrap()]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn train_is_reproducible_and_model_scores() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_fixture(dir.path(), "t", 0);
    let val = write_fixture(dir.path(), "v", 100);
    let model = |name: &str| {
        let out = dir.path().join(name);
        let o = simpeval(&["train", "--data", &train, "--val", &val, "--out", out.to_str().unwrap(), "--epochs", "3", "--k", "1"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(String::from_utf8_lossy(&o.stderr).lines().filter(|l| l.starts_with("epoch")).count(), 3);
        std::fs::read(out).unwrap()
    };
    let (m1, m2) = (model("m1.json"), model("m2.json"));
    assert_eq!(m1, m2);
    let path = dir.path().join("m1.json");
    let out = stdout(&simpeval(&["score", "--data", &val, "--metric", "lens", "--model", path.to_str().unwrap()]));
    assert_eq!(out.lines().count(), 18);
    assert_eq!(simpeval(&["score", "--data", &val, "--metric", "lens"]).status.code(), Some(1));
}

#[test]
fn meta_eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path(), "d", 0);
    let scores = dir.path().join("scores.jsonl");
    std::fs::write(&scores, stdout(&simpeval(&["score", "--data", &data, "--metric", "sari"]))).unwrap();
    let s = scores.to_str().unwrap();

    let out = stdout(&simpeval(&["meta-eval", "--data", &data, "--scores", s, "--bootstrap", "200"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["tau_para", "tau_spl", "tau_all", "concordant", "discordant", "ci"] {
        assert!(v.get(key).is_some(), "missing {key} in {out}");
    }
    assert_eq!(v["ci"].as_array().unwrap().len(), 2);

    let table = stdout(&simpeval(&["meta-eval", "--data", &data, "--scores", s, "--table"]));
    assert!(table.contains("all"));

    let p = stdout(&simpeval(&["meta-eval", "--data", &data, "--scores", s, "--pearson"]));
    let v: serde_json::Value = serde_json::from_str(&p).unwrap();
    assert_eq!(v["n"], 18);
    assert!(v["pearson"].as_f64().unwrap().abs() <= 1.0);

    std::fs::write(&scores, "{\"id\":\"ghost\",\"score\":1}\n").unwrap();
    assert_eq!(simpeval(&["meta-eval", "--data", &data, "--scores", s]).status.code(), Some(1));
}

#[test]
fn probe_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path(), "d", 0);
    let a = stdout(&simpeval(&["probe", "--data", &data, "--kind", "scramble", "--seed", "4"]));
    let b = stdout(&simpeval(&["probe", "--data", &data, "--kind", "scramble", "--seed", "4"]));
    assert_eq!(a, b);
    let probes = Dataset::parse(&a).unwrap();
    assert_eq!(probes.len(), 6, "one probe per original");
    assert!(probes.instances.iter().all(|i| i.system == "probe-scramble"));

    let out = stdout(&simpeval(&["agreement", "--data", &data]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["alpha"].as_f64().unwrap() > 0.9);
    assert_eq!(simpeval(&["agreement"]).status.code(), Some(1));
}
