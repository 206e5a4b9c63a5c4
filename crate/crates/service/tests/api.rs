use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use mlal_core::data::{generate_synthetic, SyntheticConfig};
use mlal_core::engine::{history_csv, load_checkpoint_file, AlState, ExperimentConfig};
use mlal_core::nn::TrainConfig;
use mlal_core::query::{QuerySpec, Uncertainty};
use mlal_core::{DatasetOrigin, DatasetPool};
use mlal_service::{router, Engine};

fn pool() -> DatasetPool {
    generate_synthetic(&SyntheticConfig {
        pool_size: 60,
        val_size: 5,
        test_size: 30,
        seed: 3,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

fn config(iterations: usize) -> ExperimentConfig {
    ExperimentConfig {
        query: QuerySpec {
            uncertainty: Uncertainty::GradientMagnitude,
            budget: 5,
            ..QuerySpec::default()
        },
        train: TrainConfig::scaled(10),
        initial_labeled: 10,
        max_iterations: iterations,
        oracle: false,
        ..ExperimentConfig::default()
    }
    .with_seed(2)
}

fn app_with(
    pool: DatasetPool,
    iterations: usize,
    checkpoint: Option<std::path::PathBuf>,
) -> Router {
    let state = AlState::start(config(iterations), pool).unwrap();
    router(Some(Engine::spawn(state, "test-session", checkpoint)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value: Value =
        serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("non-JSON body {bytes:?}: {e}"));
    assert!(value.get("status").is_some(), "missing status in {value}");
    (status, value)
}

fn ids(batch: &Value) -> Vec<String> {
    batch["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["id"].as_str().unwrap().to_owned())
        .collect()
}

#[tokio::test]
async fn without_experiment() {
    let app = router(None);
    let (code, body) = call(&app, "GET", "/api/session", None).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
    assert_eq!(body["status"], "error");
    let (code, body) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(body["history"], json!([]));
    let (code, _) = call(&app, "GET", "/api/nothing", None).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn labeling_loop() {
    let dir = tempfile::tempdir().unwrap();
    let checkpoint = dir.path().join("state.json");
    let app = app_with(pool(), 3, Some(checkpoint.clone()));

    let (_, session) = call(&app, "GET", "/api/session", None).await;
    assert_eq!(session["iteration"], 1);
    assert_eq!(session["budget"], 5);
    assert_eq!(session["num_classes"], 5);
    assert_eq!(session["class_names"].as_array().unwrap().len(), 5);
    assert_eq!(session["labeled_count"], 10);
    assert_eq!(session["unlabeled_count"], 50);
    let (_, progress) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(progress["history"], json!([]));

    let (code, batch) = call(&app, "GET", "/api/batch", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(batch["status"], "ok");
    let batch_ids = ids(&batch);
    assert_eq!(batch_ids.len(), 5);
    for item in batch["items"].as_array().unwrap() {
        assert_eq!(item["already_received"], false);
        assert_eq!(item["features"].as_array().unwrap().len(), 16);
        assert!(item["thumbnail"]
            .as_str()
            .unwrap()
            .starts_with("iVBORw0KGgo"));
    }
    let (_, again) = call(&app, "GET", "/api/batch", None).await;
    assert_eq!(ids(&again), batch_ids);

    let (code, ack) = call(
        &app,
        "POST",
        "/api/labels",
        Some(json!({ batch_ids[0].clone(): [1, 0, 0, 0, 0] })),
    )
    .await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(ack["remaining"], 4);
    assert_eq!(ack["resolved"], false);
    let (_, ack) = call(
        &app,
        "POST",
        "/api/labels",
        Some(json!({ batch_ids[1].clone(): [0, 1, 1, 0, 0] })),
    )
    .await;
    assert_eq!(ack["remaining"], 3);

    let (_, batch) = call(&app, "GET", "/api/batch", None).await;
    let flags: Vec<bool> = batch["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["already_received"].as_bool().unwrap())
        .collect();
    assert_eq!(flags.iter().filter(|&&f| f).count(), 2);
    assert_eq!(batch["remaining"], 3);

    let (code, rejected) = call(
        &app,
        "POST",
        "/api/labels",
        Some(json!({ batch_ids[2].clone(): [0, 0, 0, 0, 0] })),
    )
    .await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(rejected["status"], "error");
    assert_eq!(rejected["errors"][0]["id"], batch_ids[2].as_str());
    assert!(rejected["errors"][0]["reason"]
        .as_str()
        .unwrap()
        .contains("at least one"));
    assert_eq!(rejected["remaining"], 3);

    let (code, rejected) = call(
        &app,
        "POST",
        "/api/labels",
        Some(json!({ "stranger": [1, 0, 0, 0, 0], batch_ids[2].clone(): [1, 0, 0, 0, 0, 1] })),
    )
    .await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(rejected["errors"].as_array().unwrap().len(), 2);
    let (code, _) = call(
        &app,
        "POST",
        "/api/labels",
        Some(json!({ batch_ids[0].clone(): [1, 0, 0, 0, 0] })),
    )
    .await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);

    let rest: serde_json::Map<String, Value> = batch_ids[2..]
        .iter()
        .map(|id| (id.clone(), json!([0, 0, 1, 0, 0])))
        .collect();
    let (code, ack) = call(&app, "POST", "/api/labels", Some(Value::Object(rest))).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(ack["remaining"], 0);
    assert_eq!(ack["resolved"], true);
    assert_eq!(ack["iteration"], 2);

    let (_, session) = call(&app, "GET", "/api/session", None).await;
    assert_eq!(session["iteration"], 2);
    assert_eq!(session["labeled_count"], 15);
    let (_, progress) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(progress["history"].as_array().unwrap().len(), 1);

    let (_, next) = call(&app, "GET", "/api/batch", None).await;
    assert_eq!(next["iteration"], 2);
    assert!(ids(&next).iter().all(|id| !batch_ids.contains(id)));
    let (_, progress) = call(&app, "GET", "/api/progress", None).await;
    let rows = progress["history"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1]["num_labeled"].as_u64() > rows[0]["num_labeled"].as_u64());

    // progress values are the history file's values
    let saved = load_checkpoint_file(&checkpoint).unwrap();
    let csv = history_csv(&saved.history);
    for (line, row) in csv.lines().skip(1).zip(rows) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(
            f[0].parse::<u64>().unwrap(),
            row["iteration"].as_u64().unwrap()
        );
        assert_eq!(
            f[1].parse::<u64>().unwrap(),
            row["num_labeled"].as_u64().unwrap()
        );
        assert_eq!(
            f[2].parse::<f64>().unwrap(),
            row["micro_f1"].as_f64().unwrap()
        );
        assert_eq!(
            f[3].parse::<f64>().unwrap(),
            row["macro_f1"].as_f64().unwrap()
        );
    }
    assert!(saved.pending.is_some());
}

#[tokio::test]
async fn experiment_completes() {
    let app = app_with(pool(), 1, None);
    let (_, batch) = call(&app, "GET", "/api/batch", None).await;
    let all: serde_json::Map<String, Value> = ids(&batch)
        .into_iter()
        .map(|id| (id, json!([1, 1, 0, 0, 0])))
        .collect();
    let (_, ack) = call(&app, "POST", "/api/labels", Some(Value::Object(all))).await;
    assert_eq!(ack["resolved"], true);
    let (code, done) = call(&app, "GET", "/api/batch", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(done["status"], "complete");
    let (_, session) = call(&app, "GET", "/api/session", None).await;
    assert_eq!(session["finished"], true);
    let (code, body) = call(
        &app,
        "POST",
        "/api/labels",
        Some(json!({ "s0001": [1, 0, 0, 0, 0] })),
    )
    .await;
    assert_eq!(code, StatusCode::CONFLICT);
    assert_eq!(body["status"], "error");
}

#[tokio::test]
async fn malformed_submission() {
    let app = app_with(pool(), 2, None);
    call(&app, "GET", "/api/batch", None).await;
    let request = Request::builder()
        .method("POST")
        .uri("/api/labels")
        .body(Body::from("{not json"))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::BAD_REQUEST);
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(body["status"], "error");
    let (code, _) = call(&app, "POST", "/api/labels", Some(json!({ "x": [300] }))).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let id = ids(&call(&app, "GET", "/api/batch", None).await.1)[0].clone();
    let (code, body) = call(
        &app,
        "POST",
        "/api/labels",
        Some(json!({ id: [2, 0, 0, 0, 0] })),
    )
    .await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["remaining"], 5);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_submissions_first_wins() {
    let app = app_with(pool(), 2, None);
    let (_, batch) = call(&app, "GET", "/api/batch", None).await;
    let id = ids(&batch)[0].clone();
    let body = json!({ id: [0, 0, 0, 1, 0] });
    let (a, b) = tokio::join!(
        call(&app, "POST", "/api/labels", Some(body.clone())),
        call(&app, "POST", "/api/labels", Some(body))
    );
    let mut codes = [a.0, b.0];
    codes.sort();
    assert_eq!(codes, [StatusCode::OK, StatusCode::UNPROCESSABLE_ENTITY]);
    let (_, batch) = call(&app, "GET", "/api/batch", None).await;
    assert_eq!(batch["remaining"], 4);
}

#[tokio::test]
async fn csv_datasets_send_features_only() {
    let app = app_with(pool().with_origin(DatasetOrigin::Csv), 2, None);
    let (_, batch) = call(&app, "GET", "/api/batch", None).await;
    for item in batch["items"].as_array().unwrap() {
        assert!(item.get("thumbnail").is_none());
        assert_eq!(item["features"].as_array().unwrap().len(), 16);
    }
}
