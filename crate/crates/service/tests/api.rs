use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use webselect_core::fixtures::abc_network_json;
use webselect_core::ingestion::{generate_synthetic, SyntheticConfig};
use webselect_core::{demographic_filter, optimize, overlap_matrix, parse_network_file, serialize_network};
use webselect_core::{CampaignSpec, GenerationStats, OptimizationResult};
use webselect_service::{router, AppState, JobRecord, JobState, ServiceConfig};

fn app() -> (AppState, Router) {
    let state = AppState::new(&ServiceConfig::default()).unwrap();
    (state.clone(), router(state))
}

async fn call(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call_json(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn submit(app: &Router, spec: Value) -> String {
    let (status, body) = call_json(app, Method::POST, "/jobs", spec.to_string()).await;
    assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    body["job_id"].as_str().unwrap().to_string()
}

/// Reads the whole NDJSON stream (it ends with the job).
async fn stream(app: &Router, id: &str) -> (Vec<GenerationStats>, Value) {
    let (status, bytes) = call(app, Method::GET, &format!("/jobs/{id}/stream"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(bytes).unwrap();
    let mut lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let terminal = lines.pop().unwrap();
    assert_eq!(terminal["done"], json!(true));
    let gens = lines.into_iter().map(|v| serde_json::from_value(v).unwrap()).collect();
    (gens, terminal)
}

async fn record(app: &Router, id: &str) -> JobRecord {
    let (status, bytes) = call(app, Method::GET, &format!("/jobs/{id}"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_slice(&bytes).unwrap()
}

fn abc_spec(seed: u64) -> Value {
    json!({"budget_usd": 100.0, "num_sites": 2, "objective_mode": "unique-reach", "seed": seed})
}

#[tokio::test]
async fn network_load_and_inspect() {
    let (_, app) = app();
    let (status, body) = call_json(&app, Method::GET, "/network", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "no network loaded");

    let (status, body) = call_json(&app, Method::PUT, "/network", abc_network_json()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["node_count"], 3);
    assert_eq!(body["edge_count"], 6);

    let (status, body) = call_json(&app, Method::GET, "/network", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(body["edges"].as_array().unwrap().len(), 6);
    assert_eq!(body["buckets"]["age"], json!(["18-24", "25-34"]));
    assert_eq!(body["buckets"]["income"], json!(["0-30k", "100k+"]));
    assert_eq!(body["nodes"][0]["cpm_usd"], json!(5.0));
    assert_eq!(body["edges"][0]["alpha_pct"], json!(80.0));
}

#[tokio::test]
async fn malformed_load_keeps_previous_network() {
    let (_, app) = app();
    call_json(&app, Method::PUT, "/network", abc_network_json()).await;
    let broken = abc_network_json().replacen("\"alpha_pct\": 80.0", "\"alpha_pct\": 0.0", 1);
    let (status, body) = call_json(&app, Method::PUT, "/network", broken).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("A->B"), "{body}");
    let (status, body) = call_json(&app, Method::PUT, "/network", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("byte"), "{body}");

    let (_, body) = call_json(&app, Method::GET, "/network", Body::empty()).await;
    assert_eq!(body["nodes"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn submission_errors() {
    let (_, app) = app();
    let (status, _) = call_json(&app, Method::POST, "/jobs", abc_spec(1).to_string()).await;
    assert_eq!(status, StatusCode::CONFLICT);

    call_json(&app, Method::PUT, "/network", abc_network_json()).await;
    let (status, body) = call_json(
        &app,
        Method::POST,
        "/jobs",
        json!({"budget_usd": -5.0, "num_sites": 2}).to_string(),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["fields"]["budget_usd"].is_string(), "{body}");

    let (status, body) = call_json(
        &app,
        Method::POST,
        "/jobs",
        json!({"budget_usd": 5.0, "num_sites": 50}).to_string(),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "infeasible: 3 feasible sites");
    assert_eq!(body["feasible"], 3);

    let (status, body) = call_json(
        &app,
        Method::POST,
        "/jobs",
        json!({"budget_usd": 5.0, "num_sites": 1, "targeting": {"age_buckets": ["20-35"]}}).to_string(),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["fields"]["targeting.age_buckets"].as_str().unwrap().contains("20-35"));

    let (status, _) = call_json(&app, Method::POST, "/jobs", "{\"budget_usd\": 1}").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = call_json(&app, Method::GET, "/jobs/job-999999", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::GET, "/jobs/nope/stream", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn abc_job_streams_to_a_and_c() {
    let (_, app) = app();
    call_json(&app, Method::PUT, "/network", abc_network_json()).await;
    let id = submit(&app, abc_spec(7)).await;

    let (gens, terminal) = stream(&app, &id).await;
    assert_eq!(terminal["result"]["selection"], json!(["A", "C"]));
    assert_eq!(terminal["result"]["fitness"], json!(58.0));
    assert!(gens.windows(2).all(|w| w[0].best_fitness <= w[1].best_fitness));

    let rec = record(&app, &id).await;
    assert_eq!(rec.state, JobState::Done);
    assert_eq!(rec.spec.seed, Some(7));
    let result = rec.result.unwrap();
    assert!(rec.history.len() <= result.params.max_generations);
    assert_eq!(rec.history.last().unwrap().best_fitness, result.fitness);
    // Replay equals the stored history.
    assert_eq!(gens, rec.history);
    let (again, _) = stream(&app, &id).await;
    assert_eq!(again, rec.history);
}

#[tokio::test]
async fn seed_is_generated_and_echoed() {
    let (_, app) = app();
    call_json(&app, Method::PUT, "/network", abc_network_json()).await;
    let id = submit(&app, json!({"budget_usd": 100.0, "num_sites": 2})).await;
    stream(&app, &id).await;
    let rec = record(&app, &id).await;
    let seed = rec.spec.seed.expect("seed echoed");
    assert_eq!(rec.result.unwrap().seed, seed);
    assert!(seed < (1 << 53));
}

#[tokio::test]
async fn concurrent_jobs_reproduce_offline() {
    let cfg = SyntheticConfig {
        node_count: 50,
        community_count: 5,
        intra_edge_prob: 0.3,
        inter_edge_prob: 0.02,
        ..Default::default()
    };
    let (net, _) = generate_synthetic(&cfg, 21).unwrap();
    let file = serialize_network(&net);
    let (state, app) = app();
    call_json(&app, Method::PUT, "/network", file.clone()).await;

    let mut ids = Vec::new();
    for seed in 0..6u64 {
        let spec = json!({"budget_usd": 5000.0, "num_sites": 5, "seed": seed,
                          "ga_params": {"max_generations": 60}});
        ids.push((seed, submit(&app, spec).await));
    }
    // Swapping the network does not affect jobs already submitted.
    state.load_network(parse_network_file(abc_network_json().as_bytes()).unwrap()).unwrap();

    let overlap = overlap_matrix(&net);
    let feasible = demographic_filter(&net, &Default::default()).unwrap();
    for (seed, id) in ids {
        let (gens, terminal) = stream(&app, &id).await;
        let served: OptimizationResult = serde_json::from_value(terminal["result"].clone()).unwrap();
        let rec = record(&app, &id).await;
        let spec: CampaignSpec = rec.spec.clone();
        let offline = optimize(&net, &overlap, &feasible, &spec, &spec.params(), seed).unwrap();
        assert_eq!(served, offline);
        assert_eq!(gens, offline.history);
    }
}

#[tokio::test]
async fn journal_survives_restart() {
    let dir = std::env::temp_dir().join(format!("webselect-journal-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("jobs.ndjson");
    let _ = std::fs::remove_file(&path);
    let config = ServiceConfig {
        max_concurrent_jobs: 2,
        journal: Some(path.clone()),
    };

    let first = router(AppState::new(&config).unwrap());
    call_json(&first, Method::PUT, "/network", abc_network_json()).await;
    let id = submit(&first, abc_spec(3)).await;
    stream(&first, &id).await;
    let before = record(&first, &id).await;

    let second = router(AppState::new(&config).unwrap());
    assert_eq!(record(&second, &id).await, before);
    let (gens, terminal) = stream(&second, &id).await;
    assert_eq!(gens, before.history);
    assert_eq!(terminal["result"]["selection"], json!(["A", "C"]));
    // New ids continue after the journaled ones.
    call_json(&second, Method::PUT, "/network", abc_network_json()).await;
    let next = submit(&second, abc_spec(4)).await;
    assert_ne!(next, id);
    std::fs::remove_dir_all(&dir).unwrap();
}
