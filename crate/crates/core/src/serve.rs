//! Local JSON-over-HTTP session for steering Step II from a browser.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use crate::config::RunConfig;
use crate::data::SeriesPoint;
use crate::error::{Error, Result};
use crate::trajectory::{Choice, SessionState, StepOutcome};
use crate::workflow::{
    analyse_record, decomposition_series, load_record, load_step_one, open_session, persist, sample_model, session_export,
    SessionExport, StepOne,
};

struct Shared {
    session: SessionState,
    step_one: StepOne,
}

type AppState = Arc<Mutex<Shared>>;

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } | Error::Json(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

#[derive(Debug, Deserialize)]
pub struct SeedRequest {
    pub energy_index: usize,
    pub pole_index: usize,
}

/// `{"pole_index": 3}`, `"auto"`, `"skip"` or `{"pole_index": "skip"}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum StepRequest {
    Index { pole_index: usize },
    Named { pole_index: String },
    Word(String),
}

impl StepRequest {
    fn choice(&self) -> Result<Choice> {
        match self {
            StepRequest::Index { pole_index } => Ok(Choice::Index(*pole_index)),
            StepRequest::Named { pole_index: w } | StepRequest::Word(w) => match w.parse()? {
                Choice::Index(_) => Err(Error::Usage(format!("pole_index must be a number, `auto` or `skip`, found `{w}`"))),
                c => Ok(c),
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct StepResponse {
    outcome: StepOutcome,
    session: SessionExport,
}

fn lock(state: &AppState) -> std::sync::MutexGuard<'_, Shared> {
    state.lock().unwrap_or_else(|p| p.into_inner())
}

async fn get_session(State(state): State<AppState>) -> ApiResult<SessionExport> {
    let s = lock(&state);
    Ok(Json(session_export(&s.session, &s.step_one)?))
}

async fn get_decomposition(State(state): State<AppState>) -> ApiResult<BTreeMap<String, Vec<SeriesPoint>>> {
    let s = lock(&state);
    Ok(Json(decomposition_series(&s.session, &s.step_one)?))
}

async fn post_seed(State(state): State<AppState>, Json(req): Json<SeedRequest>) -> ApiResult<SessionExport> {
    let mut s = lock(&state);
    let s = &mut *s;
    s.session.seed_trajectory(req.energy_index, req.pole_index)?;
    persist(&s.session, &s.step_one)?;
    Ok(Json(session_export(&s.session, &s.step_one)?))
}

async fn post_step(State(state): State<AppState>, Json(req): Json<StepRequest>) -> ApiResult<StepResponse> {
    let choice = req.choice()?;
    let mut s = lock(&state);
    let s = &mut *s;
    let outcome = s.session.follow_manual(choice)?;
    persist(&s.session, &s.step_one)?;
    Ok(Json(StepResponse {
        outcome,
        session: session_export(&s.session, &s.step_one)?,
    }))
}

async fn post_finish(State(state): State<AppState>) -> ApiResult<SessionExport> {
    let mut s = lock(&state);
    let s = &mut *s;
    s.session.finish()?;
    persist(&s.session, &s.step_one)?;
    Ok(Json(session_export(&s.session, &s.step_one)?))
}

/// The model of one energy sampled along real `J` at `plot_points` points.
async fn get_model(State(state): State<AppState>, Path(energy_index): Path<usize>) -> ApiResult<Vec<SeriesPoint>> {
    let (config, analysis) = {
        let s = lock(&state);
        let energy = *s
            .session
            .energies
            .get(energy_index)
            .ok_or_else(|| Error::Usage(format!("energy index {energy_index} is out of range")))?;
        let a = s
            .step_one
            .results
            .iter()
            .find(|r| r.energy == energy)
            .cloned()
            .expect("session energies come from Step I");
        (s.session.config.clone(), a)
    };
    let samples = tokio::task::spawn_blocking(move || -> Result<Vec<SeriesPoint>> {
        let record = load_record(&config.data_dir.join(analysis.file_index.to_string()), &config)?;
        let (_, model) = analyse_record(&record, analysis.file_index, &config)?;
        Ok(sample_model(&model, record.jstart as f64, record.jfin as f64, config.plot_points))
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(samples))
}

/// Routes of the session protocol over a session built from Step I outputs.
pub fn router(config: &RunConfig) -> Result<Router> {
    let step_one = load_step_one(config)?;
    let session = open_session(config, &step_one)?;
    let state: AppState = Arc::new(Mutex::new(Shared { session, step_one }));
    Ok(Router::new()
        .route("/api/session", get(get_session))
        .route("/api/decomposition", get(get_decomposition))
        .route("/api/model/{energy_index}", get(get_model))
        .route("/api/trajectory/seed", post(post_seed))
        .route("/api/trajectory/step", post(post_step))
        .route("/api/trajectory/finish", post(post_finish))
        .with_state(state))
}

/// A running server; dropping it leaves the server running until
/// [`Server::shutdown`].
pub struct Server {
    pub addr: SocketAddr,
    stop: oneshot::Sender<()>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Server {
    pub async fn shutdown(self) -> Result<()> {
        let _ = self.stop.send(());
        self.task
            .await
            .map_err(|e| Error::Usage(format!("server task failed: {e}")))?
            .map_err(|e| Error::io("server", e))
    }
}

/// Binds `127.0.0.1:port` (0 picks a free port) and serves in the
/// background of the current runtime.
pub async fn start(config: &RunConfig, port: u16) -> Result<Server> {
    let app = router(config)?;
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
        .await
        .map_err(|e| Error::io(format!("127.0.0.1:{port}"), e))?;
    let addr = listener.local_addr().map_err(|e| Error::io("listener", e))?;
    let (stop, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(Server { addr, stop, task })
}

/// Serves until interrupted.
pub fn serve_session(config: &RunConfig, port: u16) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("runtime", e))?;
    rt.block_on(async {
        let server = start(config, port).await?;
        log::info!("serving on http://{}", server.addr);
        println!("listening on http://{}", server.addr);
        tokio::signal::ctrl_c().await.map_err(|e| Error::io("signal", e))?;
        server.shutdown().await
    })
}
