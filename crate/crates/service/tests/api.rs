use std::net::SocketAddr;

use serde_json::{json, Value};

async fn spawn_server() -> String {
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    let bound = starsketch_service::spawn(addr).await.unwrap();
    format!("http://{bound}")
}

#[tokio::test]
async fn health_and_pipeline() {
    let base = spawn_server().await;
    let http = reqwest::Client::new();

    let health: Value = http
        .get(format!("{base}/health"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(health["status"], "ok");

    // standardize a 2x2 square and discretize with center rays only
    let outline: Value = http
        .post(format!("{base}/geometry/standardize"))
        .json(&json!({ "points": [[0, 0], [2, 0], [2, 2], [0, 2]] }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(outline["centroid"], json!([1.0, 1.0]));

    let star: Value = http
        .post(format!("{base}/geometry/discretize"))
        .json(&json!({ "outline": outline, "m": 4, "extra_rays": 0 }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let values: Vec<f64> = serde_json::from_value(star["values"].clone()).unwrap();
    assert_eq!(values.len(), 4);
    for v in values {
        assert!((v - 1.0).abs() < 1e-12);
    }

    // sketch of a constant function is all ones
    let sketch: Value = http
        .post(format!("{base}/sketch"))
        .json(&json!({ "values": [0.5, 0.5, 0.5] }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let values: Vec<f64> = serde_json::from_value(sketch["values"].clone()).unwrap();
    for v in values {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[tokio::test]
async fn error_envelope_kinds() {
    let base = spawn_server().await;
    let http = reqwest::Client::new();

    // collinear polygon -> numerical rejection
    let resp = http
        .post(format!("{base}/geometry/standardize"))
        .json(&json!({ "points": [[0, 0], [1, 0], [2, 0]] }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["kind"], "numerical");

    // too few points -> invalid input
    let resp = http
        .post(format!("{base}/geometry/standardize"))
        .json(&json!({ "points": [[0, 0], [1, 0]] }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["kind"], "invalid_input");

    // unknown index -> 404
    let resp = http.get(format!("{base}/index/nope")).send().await.unwrap();
    assert_eq!(resp.status(), 404);
}

#[tokio::test]
async fn index_store_and_query() {
    let base = spawn_server().await;
    let http = reqwest::Client::new();

    let mut entries = Vec::new();
    for i in 0..5 {
        let sketch: Value = http
            .post(format!("{base}/sketch"))
            .json(&json!({ "values": [0.1 * (i + 1) as f64, 0.5, 0.9, 0.4] }))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        entries.push(json!([format!("s{i}"), sketch]));
    }
    let phi = entries[0][1]["phi"].clone();
    let stored: Value = http
        .put(format!("{base}/index/demo"))
        .json(&json!({ "m": 4, "phi": phi, "entries": entries }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(stored["stored"], 5);

    let query = entries[2][1].clone();
    let ranked: Vec<(String, f64)> = http
        .post(format!("{base}/index/demo/knn"))
        .json(&json!({ "query": query, "k": 2 }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(ranked[0].0, "s2");
    assert!(ranked[0].1 < 1e-12);

    let clusters: Value = http
        .post(format!("{base}/index/demo/kmeans"))
        .json(&json!({ "k": 5, "seed": 0 }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(clusters["inertia"].as_f64().unwrap() < 1e-18);
}
