use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream;
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::{watch, Semaphore};
use webselect_core::format::fraction_to_pct;
use webselect_core::ga::optimize_with_progress;
use webselect_core::{
    build_cost_model, demographic_filter, overlap_matrix, parse_network_file, CampaignSpec, CostModel,
    Error, OverlapMatrix, WebsiteNetwork,
};

use crate::jobs::JobStore;
use crate::ServiceConfig;

struct ActiveNetwork {
    net: WebsiteNetwork,
    cost: CostModel,
    hash: String,
}

struct Shared {
    network: RwLock<Option<Arc<ActiveNetwork>>>,
    overlaps: Mutex<HashMap<String, Arc<OnceLock<Arc<OverlapMatrix>>>>>,
    jobs: JobStore,
    permits: Arc<Semaphore>,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> std::io::Result<Self> {
        Ok(AppState {
            shared: Arc::new(Shared {
                network: RwLock::new(None),
                overlaps: Mutex::new(HashMap::new()),
                jobs: JobStore::open(config.journal.as_deref())?,
                permits: Arc::new(Semaphore::new(config.max_concurrent_jobs.max(1))),
            }),
        })
    }

    /// Makes `net` the active network. Jobs already submitted keep theirs.
    pub fn load_network(&self, net: WebsiteNetwork) -> Result<NetworkSummary, Error> {
        let cost = build_cost_model(&net)?;
        let active = Arc::new(ActiveNetwork {
            hash: net.content_hash(),
            net,
            cost,
        });
        let summary = NetworkSummary::of(&active);
        *self.shared.network.write().unwrap() = Some(active);
        Ok(summary)
    }

    fn active(&self) -> Option<Arc<ActiveNetwork>> {
        self.shared.network.read().unwrap().clone()
    }

    // First job on a network computes the matrix; later ones reuse it.
    fn overlap_for(&self, active: &ActiveNetwork) -> Arc<OverlapMatrix> {
        let cell = self
            .shared
            .overlaps
            .lock()
            .unwrap()
            .entry(active.hash.clone())
            .or_default()
            .clone();
        cell.get_or_init(|| Arc::new(overlap_matrix(&active.net))).clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub content_hash: String,
    pub buckets: Buckets,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Buckets {
    pub age: BTreeSet<String>,
    pub income: BTreeSet<String>,
}

impl NetworkSummary {
    fn of(active: &ActiveNetwork) -> Self {
        NetworkSummary {
            node_count: active.net.len(),
            edge_count: active.net.edges().len(),
            content_hash: active.hash.clone(),
            buckets: Buckets {
                age: active.net.age_buckets(),
                income: active.net.income_buckets(),
            },
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/network", get(get_network).put(put_network))
        .route("/jobs", post(submit_job))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/stream", get(stream_job))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn put_network(State(state): State<AppState>, body: Bytes) -> Response {
    let parsed = parse_network_file(&body).and_then(|net| state.load_network(net));
    match parsed {
        Ok(summary) => (StatusCode::OK, Json(summary)).into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

#[derive(Serialize)]
struct NodeView<'a> {
    id: &'a str,
    domain: &'a str,
    reach_pct: Option<f64>,
    cpm_usd: Option<f64>,
    age_ratios: &'a BTreeMap<String, f64>,
    income_ratios: &'a BTreeMap<String, f64>,
    banner_ads: bool,
}

#[derive(Serialize)]
struct EdgeView<'a> {
    src: &'a str,
    dst: &'a str,
    alpha_pct: f64,
}

async fn get_network(State(state): State<AppState>) -> Response {
    let Some(active) = state.active() else {
        return error(StatusCode::NOT_FOUND, "no network loaded");
    };
    let nodes: Vec<NodeView> = active
        .net
        .nodes()
        .iter()
        .map(|n| NodeView {
            id: &n.id,
            domain: &n.domain,
            reach_pct: n.reach_pct,
            cpm_usd: active.cost.cpm(&n.id).ok(),
            age_ratios: &n.age_ratios,
            income_ratios: &n.income_ratios,
            banner_ads: n.banner_ads,
        })
        .collect();
    let edges: Vec<EdgeView> = active
        .net
        .edges()
        .iter()
        .map(|e| EdgeView {
            src: &e.src,
            dst: &e.dst,
            alpha_pct: fraction_to_pct(e.alpha),
        })
        .collect();
    let summary = NetworkSummary::of(&active);
    Json(json!({
        "summary": summary,
        "nodes": nodes,
        "edges": edges,
        "buckets": summary.buckets,
    }))
    .into_response()
}

// Seeds stay below 2^53 so JavaScript clients can echo them back intact.
fn fresh_seed() -> u64 {
    rand::random::<u64>() >> 11
}

async fn submit_job(State(state): State<AppState>, body: Bytes) -> Response {
    let mut spec: CampaignSpec = match serde_json::from_slice(&body) {
        Ok(spec) => spec,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid campaign spec: {e}")),
    };
    let problems = spec.field_errors();
    if !problems.is_empty() {
        let fields: BTreeMap<String, String> = problems.into_iter().map(|p| (p.field, p.message)).collect();
        return (
            StatusCode::BAD_REQUEST,
            Json(json!({ "error": "invalid campaign spec", "fields": fields })),
        )
            .into_response();
    }
    let Some(active) = state.active() else {
        return error(StatusCode::CONFLICT, "no network loaded");
    };
    let feasible = match demographic_filter(&active.net, &spec.targeting) {
        Ok(f) => f,
        Err(Error::UnknownBucket { dimension, label }) => {
            let field = format!("targeting.{dimension}_buckets");
            return (
                StatusCode::BAD_REQUEST,
                Json(json!({
                    "error": "invalid campaign spec",
                    "fields": { field: format!("unknown bucket label {label}") },
                })),
            )
                .into_response();
        }
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    if feasible.len() < spec.num_sites {
        return (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({
                "error": format!("infeasible: {} feasible sites", feasible.len()),
                "feasible": feasible.len(),
            })),
        )
            .into_response();
    }

    let seed = *spec.seed.get_or_insert_with(fresh_seed);
    let params = spec.params();
    let job_id = state.shared.jobs.create(spec.clone());

    let task_state = state.clone();
    let id = job_id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = task_state.shared.permits.clone().acquire_owned().await else {
            return;
        };
        task_state.shared.jobs.start(&id);
        let worker = task_state.clone();
        let worker_id = id.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            let overlap = worker.overlap_for(&active);
            let jobs = &worker.shared.jobs;
            optimize_with_progress(&active.net, &overlap, &feasible, &spec, &params, seed, |g| {
                jobs.push_generation(&worker_id, *g)
            })
            .map_err(|e| e.to_string())
        })
        .await
        .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        task_state.shared.jobs.finish(&id, outcome);
    });

    (StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))).into_response()
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.shared.jobs.get(&id) {
        Some(record) => Json(record).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown job {id}")),
    }
}

struct Cursor {
    state: AppState,
    id: String,
    sent: usize,
    updates: watch::Receiver<u64>,
    finished: bool,
}

fn line(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string(value).expect("event serializes");
    s.push('\n');
    s
}

async fn next_chunk(mut cursor: Cursor) -> Option<(Result<String, std::convert::Infallible>, Cursor)> {
    if cursor.finished {
        return None;
    }
    loop {
        cursor.updates.borrow_and_update();
        let (tail, terminal) = cursor.state.shared.jobs.since(&cursor.id, cursor.sent)?;
        let mut chunk = String::new();
        for g in &tail {
            chunk.push_str(&line(g));
        }
        cursor.sent += tail.len();
        if let Some(record) = terminal {
            let event: Value = match (&record.result, &record.error) {
                (Some(result), _) => json!({ "done": true, "result": result }),
                (None, error) => json!({ "done": true, "error": error }),
            };
            chunk.push_str(&line(&event));
            cursor.finished = true;
        }
        if !chunk.is_empty() {
            return Some((Ok(chunk), cursor));
        }
        if cursor.updates.changed().await.is_err() {
            return None;
        }
    }
}

/// Replays every recorded generation, then follows the job until it ends.
async fn stream_job(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let Some(updates) = state.shared.jobs.subscribe(&id) else {
        return error(StatusCode::NOT_FOUND, format!("unknown job {id}"));
    };
    let cursor = Cursor {
        state,
        id,
        sent: 0,
        updates,
        finished: false,
    };
    let body = Body::from_stream(stream::unfold(cursor, next_chunk));
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}
