use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use simpeval_core::dataset::{Dataset, SimplificationInstance};
use simpeval_service::{replay_log, router, Store};
use tower::ServiceExt;

fn write_dataset(dir: &Path, name: &str, d: &Dataset) -> String {
    let path = dir.join(name);
    std::fs::write(&path, d.to_jsonl()).unwrap();
    path.display().to_string()
}

fn tutorial_dataset() -> Dataset {
    let mut v = Vec::new();
    for p in 0..10 {
        let orig = format!("Tutorial original {p} has several words in it.");
        v.push(SimplificationInstance::new(&format!("t{p}a"), &orig, "Good short one.", &["r"]).with_rating("gold", 90.0, 1));
        v.push(SimplificationInstance::new(&format!("t{p}b"), &orig, "Bad one.", &["r"]).with_rating("gold", 10.0, 2));
    }
    Dataset::new(v).unwrap()
}

fn work_dataset() -> Dataset {
    let c1 = "The committee postponed the decision until next week.";
    let c2 = "Heavy rain flooded several streets in the old town.";
    Dataset::new(vec![
        SimplificationInstance::new("o1", c1, "The committee delayed the decision.", &["The group waited."]).with_system("s1"),
        SimplificationInstance::new("o2", c1, "The committee postponed it. They will decide next week.", &["The group waited."])
            .with_system("s2"),
        SimplificationInstance::new("o3", c1, "The committee postponed the decision.", &["The group waited."]).with_system("s3"),
        SimplificationInstance::new("o4", c2, "Rain flooded streets.", &["Streets flooded."]).with_system("s1"),
        SimplificationInstance::new("o5", c2, "Heavy rain flooded several streets in the old town.", &["Streets flooded."])
            .with_system("s2"),
    ])
    .unwrap()
}

struct Harness {
    dir: tempfile::TempDir,
    store: Arc<Store>,
}

impl Harness {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path().join("store")).unwrap());
        Harness { dir, store }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, String) {
        let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
        let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
        let res = router(self.store.clone()).oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let text = String::from_utf8(bytes.to_vec()).unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::Null), text)
    }

    async fn create(&self, name: &str, d: &Dataset) -> (StatusCode, Value) {
        let path = write_dataset(self.dir.path(), &format!("{name}.jsonl"), d);
        let (s, v, _) = self.call("POST", "/projects", Some(json!({"name": name, "dataset": path}))).await;
        (s, v)
    }

    async fn qualify(&self, annotator: &str, correct: usize) -> Value {
        let mut answers = serde_json::Map::new();
        for p in 0..10 {
            let (a, b) = if p < correct { (80, 20) } else { (20, 80) };
            answers.insert(format!("t{p}a"), json!(a));
            answers.insert(format!("t{p}b"), json!(b));
        }
        let (s, v, _) = self.call("POST", &format!("/annotators/{annotator}/tutorial"), Some(json!({"answers": answers}))).await;
        assert_eq!(s, StatusCode::OK);
        v
    }
}

fn submission(annotator: &str, rows: &[(&str, f64, u32)]) -> Value {
    json!({
        "annotator": annotator,
        "ratings": rows.iter().map(|(o, r, k)| json!({"output": o, "raw": r, "rank": k})).collect::<Vec<_>>(),
    })
}

#[tokio::test]
async fn full_annotation_round() {
    let h = Harness::new();
    assert_eq!(h.create("tutorial", &tutorial_dataset()).await.0, StatusCode::CREATED);
    let (s, v) = h.create("work", &work_dataset()).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["id"], "work");

    let (s, v, _) = h.call("GET", "/projects/work/next-task?annotator=ann", None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    assert_eq!(v["error"], "not-qualified");

    assert_eq!(h.qualify("ann", 10).await["qualified"], true);
    let (s, v, _) = h.call("GET", "/projects/work/next-task?annotator=ann", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["done"], false);
    assert_eq!(v["task"]["task"], 1);
    let cats: Vec<&str> = v["task"]["groups"].as_array().unwrap().iter().map(|g| g["category"].as_str().unwrap()).collect();
    assert_eq!(cats, ["paraphrase", "split", "deletion"]);

    let mut sub = submission("ann", &[("o1", 70.0, 2), ("o2", 90.0, 1), ("o3", 40.0, 3)]);
    sub["category_moves"] = json!({"o3": "paraphrase"});
    let (s, v, _) = h.call("POST", "/projects/work/tasks/1/submission", Some(sub)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["version"], 1);

    let (_, v, _) = h.call("GET", "/projects/work/next-task?annotator=ann", None).await;
    assert_eq!(v["task"]["task"], 2);
    let sub = submission("ann", &[("o4", 60.0, 2), ("o5", 65.0, 1)]);
    let (s, _, _) = h.call("POST", "/projects/work/tasks/2/submission", Some(sub)).await;
    assert_eq!(s, StatusCode::OK);
    let (_, v, _) = h.call("GET", "/projects/work/next-task?annotator=ann", None).await;
    assert_eq!(v, json!({"done": true}));

    let (s, _, text) = h.call("GET", "/projects/work/export", None).await;
    assert_eq!(s, StatusCode::OK);
    let d = Dataset::parse(&text).unwrap();
    assert_eq!(d.len(), 5);
    assert_eq!(d.instances.iter().map(|i| i.ratings.len()).sum::<usize>(), 5);
    assert_eq!(d.get("o3").unwrap().category.unwrap().as_str(), "paraphrase");
}

#[tokio::test]
async fn invalid_submissions_name_offenders() {
    let h = Harness::new();
    h.create("tutorial", &tutorial_dataset()).await;
    h.create("work", &work_dataset()).await;
    h.qualify("ann", 10).await;

    let sub = submission("ann", &[("o1", 101.0, 1), ("o2", 50.0, 2), ("o3", 50.0, 3)]);
    let (s, v, _) = h.call("POST", "/projects/work/tasks/1/submission", Some(sub)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "invalid-submission");
    assert!(v["detail"].as_str().unwrap().contains("o1.raw"));
    assert_eq!(v["offenders"][0]["output"], "o1");

    let sub = submission("ann", &[("o1", 10.0, 1), ("o2", 50.0, 1), ("o3", 50.0, 2)]);
    let (s, v, _) = h.call("POST", "/projects/work/tasks/1/submission", Some(sub)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let offenders: Vec<&str> = v["offenders"].as_array().unwrap().iter().map(|o| o["output"].as_str().unwrap()).collect();
    assert!(offenders.contains(&"o1") && offenders.contains(&"o2"));

    let (s, v, _) = h.call("GET", "/projects/work/export", None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "empty-export");
}

#[tokio::test]
async fn tutorial_gate_is_strict() {
    let h = Harness::new();
    let (s, v, _) = h.call("POST", "/annotators/a/tutorial", Some(json!({"answers": {}}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("no-gold")));
    h.create("tutorial", &tutorial_dataset()).await;
    let fail = h.qualify("a", 8).await;
    assert_eq!((fail["score"].as_f64(), fail["qualified"].as_bool()), (Some(80.0), Some(false)));
    let pass = h.qualify("a", 9).await;
    assert_eq!((pass["score"].as_f64(), pass["qualified"].as_bool()), (Some(90.0), Some(true)));
}

#[tokio::test]
async fn project_creation_errors() {
    let h = Harness::new();
    assert_eq!(h.create("work", &work_dataset()).await.0, StatusCode::CREATED);
    let (s, v) = h.create("work", &work_dataset()).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("name-conflict")));
    let (s, v) = h.create("empty", &Dataset::default()).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("empty-project")));
    let (s, v, _) = h.call("GET", "/projects/nope/agreement", None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("not-found")));
    let (s, v, _) = h.call("POST", "/projects", Some(json!({"name": 3}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["detail"].is_string());
}

#[tokio::test]
async fn agreement_of_reversed_annotators() {
    let h = Harness::new();
    h.create("tutorial", &tutorial_dataset()).await;
    let c = "One original sentence with four outputs to rate.";
    let d = Dataset::new((1..=4).map(|i| SimplificationInstance::new(&format!("x{i}"), c, &format!("Output {i}."), &["r"])).collect())
        .unwrap();
    h.create("rev", &d).await;
    h.qualify("a", 10).await;
    h.qualify("b", 10).await;
    let (s, v, _) = h.call("GET", "/projects/rev/agreement", None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{v}");

    let a = submission("a", &[("x1", 10.0, 4), ("x2", 20.0, 3), ("x3", 30.0, 2), ("x4", 40.0, 1)]);
    h.call("POST", "/projects/rev/tasks/1/submission", Some(a)).await;
    let (_, v, _) = h.call("GET", "/projects/rev/agreement", None).await;
    assert_eq!(v["error"], "invalid-data");

    let b = submission("b", &[("x1", 40.0, 1), ("x2", 30.0, 2), ("x3", 20.0, 3), ("x4", 10.0, 4)]);
    h.call("POST", "/projects/rev/tasks/1/submission", Some(b)).await;
    let (s, v, _) = h.call("GET", "/projects/rev/agreement", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!((v["alpha"].as_f64().unwrap() + 0.75).abs() < 1e-12);
    assert_eq!(v["raters"], 2);
}

#[tokio::test]
async fn replay_reproduces_snapshot_and_survives_restart() {
    let h = Harness::new();
    h.create("tutorial", &tutorial_dataset()).await;
    h.create("work", &work_dataset()).await;
    h.qualify("ann", 10).await;
    h.qualify("bob", 10).await;
    for (who, raw) in [("ann", 33.3), ("bob", 71.25), ("ann", 12.5)] {
        let sub = submission(who, &[("o1", raw, 2), ("o2", 0.1 + 0.2, 1), ("o3", 100.0, 3)]);
        let (s, _, _) = h.call("POST", "/projects/work/tasks/1/submission", Some(sub)).await;
        assert_eq!(s, StatusCode::OK);
    }
    let (s, _, _) = h
        .call("POST", "/projects/work/tasks/2/progress", Some(json!({"annotator": "bob", "status": "step1-done"})))
        .await;
    assert_eq!(s, StatusCode::NO_CONTENT);

    let on_disk = std::fs::read_to_string(h.store.snapshot_path("work")).unwrap();
    let replayed = replay_log(&h.store.log_path("work")).unwrap().snapshot_json();
    assert_eq!(on_disk, replayed);

    let export_before = h.store.export("work").unwrap().to_jsonl();
    let reopened = Store::open(h.store.root()).unwrap();
    assert_eq!(reopened.export("work").unwrap().to_jsonl(), export_before);
    assert!(reopened.profile("bob").unwrap().qualified);
    assert_eq!(reopened.state("work").unwrap().submissions["ann"][&1].version, 2);
    // ann's second submission supersedes the first
    assert_eq!(export_before.matches("\"annotator\":\"ann\"").count(), 3);
}
