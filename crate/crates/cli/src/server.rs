//! HTTP service over one workspace.
//!
//! State-changing calls honor an `Idempotency-Key` header: a repeated key
//! with the same request replays the first response; with a different
//! request it is rejected. Errors are `{"error": {"code", "message"}}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::OnceCell;

use hrrt_core::hrrt::extract_assumptions;

use crate::error::{Error, Result};
use crate::ops::{self, BenchRequest, SimulateRequest};
use crate::session::{AnswerRequest, CreateRequest, Session};
use crate::store::Store;

pub const DEFAULT_PORT: u16 = 7331;

type Reply = (StatusCode, Value);

#[derive(Clone, Debug)]
enum BenchStatus {
    Running,
    Failed(String),
}

struct Replay {
    fingerprint: String,
    reply: OnceCell<Reply>,
}

pub struct AppState {
    pub store: Arc<Mutex<Store>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    replays: Mutex<HashMap<String, Arc<Replay>>>,
    benches: Mutex<HashMap<String, BenchStatus>>,
}

impl AppState {
    pub fn new(store: Store) -> Arc<AppState> {
        Arc::new(AppState {
            store: Arc::new(Mutex::new(store)),
            sessions: Mutex::default(),
            replays: Mutex::default(),
            benches: Mutex::default(),
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("unknown session `{id}`")))
    }
}

pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::Usage(_) => StatusCode::BAD_REQUEST,
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::Conflict(_) => StatusCode::CONFLICT,
        Error::Validation(_) | Error::ResourceLimit(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
        Error::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn error_reply(e: &Error) -> Reply {
    (status_of(e), json!({ "error": { "code": e.code(), "message": e.to_string() } }))
}

fn reply(r: Result<(StatusCode, Value)>) -> Reply {
    r.unwrap_or_else(|e| error_reply(&e))
}

fn into_response((status, body): Reply) -> Response {
    if status == StatusCode::NO_CONTENT {
        return status.into_response();
    }
    (status, Json(body)).into_response()
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    let body = if body.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { body };
    serde_json::from_slice(body).map_err(|e| Error::Validation(format!("request body: {e}")))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("responses serialize")
}

/// Runs blocking work off the async runtime.
async fn blocking<F>(f: F) -> Reply
where
    F: FnOnce() -> Result<(StatusCode, Value)> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => reply(r),
        Err(e) => error_reply(&Error::Internal(format!("handler failed: {e}"))),
    }
}

/// Replays the recorded response of a repeated `Idempotency-Key`.
async fn idempotent<F, Fut>(state: &AppState, headers: &HeaderMap, method: &Method, uri: &Uri, body: &[u8], run: F) -> Response
where
    F: FnOnce() -> Fut,
    Fut: std::future::Future<Output = Reply>,
{
    let Some(key) = headers.get("idempotency-key").and_then(|v| v.to_str().ok()) else {
        return into_response(run().await);
    };
    let fingerprint = format!("{method} {uri} {}", String::from_utf8_lossy(body));
    let entry = {
        let mut replays = state.replays.lock().expect("replay lock");
        replays
            .entry(key.to_string())
            .or_insert_with(|| Arc::new(Replay { fingerprint: fingerprint.clone(), reply: OnceCell::new() }))
            .clone()
    };
    if entry.fingerprint != fingerprint {
        let e = Error::Validation(format!("Idempotency-Key `{key}` was used for a different request"));
        return into_response(error_reply(&e));
    }
    into_response(entry.reply.get_or_init(run).await.clone())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/question", get(question))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/patches", get(patches))
        .route("/sessions/{id}/patches/{n}", post(toggle_patch))
        .route("/sessions/{id}/commit", post(commit))
        .route("/models/{id}", get(model))
        .route("/models/{id}/possibilities", get(model_possibilities))
        .route("/models/{id}/assumptions", get(model_assumptions))
        .route("/lineage", get(lineage))
        .route("/bench", post(start_bench))
        .route("/bench/{id}", get(bench_status))
        .route("/simulate", post(simulate))
        .fallback(|| async { into_response(error_reply(&Error::NotFound("no such endpoint".into()))) })
        .with_state(state)
}

/// Serves `root` until the process ends.
pub async fn serve(root: PathBuf, addr: SocketAddr) -> Result<()> {
    let store = Store::open(&root)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("serving {} on http://{}", root.display(), listener.local_addr()?);
    axum::serve(listener, router(AppState::new(store))).await?;
    Ok(())
}

async fn create_session(State(s): State<Arc<AppState>>, method: Method, uri: Uri, headers: HeaderMap, body: Bytes) -> Response {
    let st = s.clone();
    let b = body.clone();
    idempotent(&s, &headers, &method, &uri, &body, || {
        blocking(move || {
            let req: CreateRequest = parse(&b)?;
            let id = uuid::Uuid::new_v4().to_string();
            let session = Session::create(id.clone(), &st.store.lock().expect("store lock"), &req)?;
            let view = session.view();
            st.sessions.lock().expect("sessions lock").insert(id.clone(), Arc::new(Mutex::new(session)));
            Ok((StatusCode::CREATED, json!({ "session_id": id, "session": view })))
        })
    })
    .await
}

async fn get_session(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    into_response(
        blocking(move || {
            let session = s.session(&id)?;
            let view = session.lock().expect("session lock").view();
            Ok((StatusCode::OK, to_json(&view)))
        })
        .await,
    )
}

async fn advance(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let st = s.clone();
    idempotent(&s, &headers, &method, &uri, &body, || {
        blocking(move || {
            let session = st.session(&id)?;
            let step = session.lock().expect("session lock").advance(&st.store)?;
            Ok((StatusCode::OK, to_json(&step)))
        })
    })
    .await
}

async fn question(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    into_response(
        blocking(move || {
            let session = s.session(&id)?;
            let guard = session.lock().expect("session lock");
            Ok(match guard.question() {
                Some(q) => (StatusCode::OK, to_json(q)),
                None => (StatusCode::NO_CONTENT, Value::Null),
            })
        })
        .await,
    )
}

async fn answer(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let st = s.clone();
    let b = body.clone();
    idempotent(&s, &headers, &method, &uri, &body, || {
        blocking(move || {
            let req: AnswerRequest = parse(&b)?;
            let session = st.session(&id)?;
            let step = session.lock().expect("session lock").answer(&st.store, &req)?;
            Ok((StatusCode::OK, to_json(&step)))
        })
    })
    .await
}

async fn patches(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    into_response(
        blocking(move || {
            let session = s.session(&id)?;
            let review = session.lock().expect("session lock").review();
            Ok((StatusCode::OK, to_json(&review)))
        })
        .await,
    )
}

#[derive(Deserialize)]
struct Toggle {
    accepted: bool,
}

async fn toggle_patch(
    State(s): State<Arc<AppState>>,
    Path((id, n)): Path<(String, String)>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let st = s.clone();
    let b = body.clone();
    idempotent(&s, &headers, &method, &uri, &body, || {
        blocking(move || {
            let session = st.session(&id)?;
            let n: usize = n.parse().map_err(|_| Error::NotFound(format!("no patch entry `{n}`")))?;
            let t: Toggle = parse(&b)?;
            let review = session.lock().expect("session lock").set_accepted(n, t.accepted)?;
            Ok((StatusCode::OK, to_json(&review)))
        })
    })
    .await
}

async fn commit(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let st = s.clone();
    idempotent(&s, &headers, &method, &uri, &body, || {
        blocking(move || {
            let session = st.session(&id)?;
            let done = session.lock().expect("session lock").commit(&st.store)?;
            Ok((StatusCode::OK, to_json(&done)))
        })
    })
    .await
}

async fn model(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    into_response(
        blocking(move || {
            let m = s.store.lock().expect("store lock").resolve(&id)?;
            Ok((StatusCode::OK, to_json(&m)))
        })
        .await,
    )
}

async fn model_possibilities(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    into_response(
        blocking(move || {
            let (m, cfg) = {
                let store = s.store.lock().expect("store lock");
                (store.resolve(&id)?, store.iteration_config()?)
            };
            let set = ops::possibilities(&m, &cfg.enumeration)?;
            Ok((StatusCode::OK, json!({ "hypothesis_id": m.id, "possibilities": set })))
        })
        .await,
    )
}

async fn model_assumptions(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    into_response(
        blocking(move || {
            let m = s.store.lock().expect("store lock").resolve(&id)?;
            Ok((StatusCode::OK, json!({ "hypothesis_id": m.id, "assumptions": extract_assumptions(&m.domain) })))
        })
        .await,
    )
}

async fn lineage(State(s): State<Arc<AppState>>) -> Response {
    into_response(
        blocking(move || {
            let store = s.store.lock().expect("store lock");
            let l = &store.ws.lineage;
            let mut hypotheses: Vec<_> = l.hypotheses.values().collect();
            hypotheses.sort_by(|a, b| (a.iteration, a.level, &a.id).cmp(&(b.iteration, b.level, &b.id)));
            let hypotheses: Vec<Value> = hypotheses
                .iter()
                .map(|h| json!({ "id": h.id, "parent": h.parent, "iteration": h.iteration, "level": h.level }))
                .collect();
            let heads: Vec<&str> = l.heads().iter().map(|h| h.id.as_str()).collect();
            let reports: Vec<&String> = store.ws.reports.keys().collect();
            Ok((StatusCode::OK, json!({ "hypotheses": hypotheses, "heads": heads, "reports": reports })))
        })
        .await,
    )
}

async fn start_bench(State(s): State<Arc<AppState>>, method: Method, uri: Uri, headers: HeaderMap, body: Bytes) -> Response {
    let st = s.clone();
    let b = body.clone();
    idempotent(&s, &headers, &method, &uri, &body, || {
        blocking(move || {
            let req: BenchRequest = parse(&b)?;
            let job = ops::prepare_bench(&st.store.lock().expect("store lock"), &req)?;
            let batch_id = job.batch.id.clone();
            st.benches.lock().expect("bench lock").insert(batch_id.clone(), BenchStatus::Running);
            let worker = st.clone();
            let id = batch_id.clone();
            std::thread::spawn(move || {
                let report = job.run();
                let saved = ops::record_report(&mut worker.store.lock().expect("store lock"), &job.batch, &report);
                let mut benches = worker.benches.lock().expect("bench lock");
                match saved {
                    Ok(()) => benches.remove(&id),
                    Err(e) => benches.insert(id, BenchStatus::Failed(e.to_string())),
                };
            });
            Ok((StatusCode::ACCEPTED, json!({ "batch_id": batch_id })))
        })
    })
    .await
}

async fn bench_status(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    into_response(
        blocking(move || {
            if let Some(status) = s.benches.lock().expect("bench lock").get(&id).cloned() {
                return Ok(match status {
                    BenchStatus::Running => (StatusCode::OK, json!({ "batch_id": id, "status": "running" })),
                    BenchStatus::Failed(message) => {
                        (StatusCode::OK, json!({ "batch_id": id, "status": "failed", "message": message }))
                    }
                });
            }
            let store = s.store.lock().expect("store lock");
            let report = store.ws.reports.get(&id).ok_or_else(|| Error::NotFound(format!("unknown batch `{id}`")))?;
            let series = report.series().ok();
            Ok((
                StatusCode::OK,
                json!({ "batch_id": id, "status": "done", "report": report, "series": series, "csv": report.to_csv() }),
            ))
        })
        .await,
    )
}

async fn simulate(State(s): State<Arc<AppState>>, method: Method, uri: Uri, headers: HeaderMap, body: Bytes) -> Response {
    let st = s.clone();
    let b = body.clone();
    idempotent(&s, &headers, &method, &uri, &body, || {
        blocking(move || {
            let req: SimulateRequest = parse(&b)?;
            let store = st.store.lock().expect("store lock");
            let report = ops::simulate(&store, &req)?;
            Ok((StatusCode::OK, to_json(&report)))
        })
    })
    .await
}
