//! HTTP interface: upload sequence sets, inspect their descriptors, and get
//! predicted outcomes and recommendations from a loaded surrogate model.
//!
//! | method | path                   | body                                   |
//! |--------|------------------------|----------------------------------------|
//! | POST   | `/api/sets?name=f.txt` | sequence file text                     |
//! | GET    | `/api/sets/{id}`       |                                        |
//! | POST   | `/api/recommendations` | [`api::RecommendationRequest`] as JSON |
//! | POST   | `/api/predictions`     | [`api::PredictionRequest`] as JSON     |
//! | GET    | `/api/health`          |                                        |
//!
//! Anything else is served from the static directory, or a built-in page at `/`.

pub mod api;
pub mod store;

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tdc::evotemplate::GAParams;
use tdc::harness::ParamGrid;
use tdc::recommend::{recommend_for_set, ObjectiveSpec, RecommendError};
use tdc::seqcore::{compute_descriptor, parse_sequence_file, SeqError};
use tdc::surrogate::{ModelFile, OutcomePredictor, SchemaKind, SurrogateError};
use tower_http::services::ServeDir;

use api::*;
use store::SessionStore;

pub const DEFAULT_UPLOAD_LIMIT: usize = 1 << 20;
pub const DEFAULT_STORE_CAPACITY: usize = 256;
/// Largest candidate grid a single request may ask for.
pub const MAX_GRID_POINTS: usize = 50_000;

const INDEX_HTML: &str = include_str!("../assets/index.html");

/// A predictor plus what the API reports about it.
pub struct LoadedModel {
    pub predictor: Box<dyn OutcomePredictor>,
    pub info: ModelInfo,
    /// N-gram vocabulary of a general model; used only for upload warnings.
    pub vocab: Option<BTreeSet<String>>,
}

impl LoadedModel {
    /// Loads a model file. Per-set files become the nearest-sets ensemble when
    /// `knn_k` is given and the average ensemble otherwise.
    pub fn load(path: &Path, knn_k: Option<usize>) -> Result<Self, SurrogateError> {
        Self::from_file(ModelFile::load(path)?, knn_k)
    }

    pub fn from_file(file: ModelFile, knn_k: Option<usize>) -> Result<Self, SurrogateError> {
        let corpus_hash = file.corpus_hash.clone();
        let vocab = file
            .general
            .as_ref()
            .filter(|g| g.schema.kind == SchemaKind::PePlusPs)
            .map(|g| g.schema.vocab.iter().cloned().collect());
        let predictor = file.into_predictor(knn_k)?;
        Ok(LoadedModel {
            info: ModelInfo {
                family: predictor.family().to_string(),
                corpus_hash,
            },
            predictor,
            vocab,
        })
    }
}

pub struct AppState {
    pub model: Option<LoadedModel>,
    pub store: Mutex<SessionStore>,
    /// Candidate grid used when a request does not override it.
    pub grid: ParamGrid,
}

impl AppState {
    pub fn new(model: Option<LoadedModel>, store: SessionStore, grid: ParamGrid) -> Self {
        AppState {
            model,
            store: Mutex::new(store),
            grid,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub upload_limit: usize,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            upload_limit: DEFAULT_UPLOAD_LIMIT,
            static_dir: None,
        }
    }
}

/// An error response with a JSON [`ErrorBody`].
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                schema_version: SCHEMA_VERSION,
                error: kind.to_string(),
                message: message.into(),
                field: None,
            },
        }
    }

    /// Kind taken from the message prefix before the first colon.
    fn from_message(status: StatusCode, message: String) -> Self {
        let kind = message.split(':').next().unwrap_or_default().to_string();
        Self::new(status, &kind, message)
    }

    fn field(mut self, name: &str) -> Self {
        self.body.field = Some(name.to_string());
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn seq_error(e: SeqError) -> ApiError {
    ApiError::from_message(StatusCode::BAD_REQUEST, e.to_string())
}

fn body_error(e: BytesRejection) -> ApiError {
    let status = e.status();
    let kind = if status == StatusCode::PAYLOAD_TOO_LARGE {
        "PayloadTooLarge"
    } else {
        "BadBody"
    };
    ApiError::new(status, kind, e.body_text())
}

fn internal(message: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
}

/// Strict JSON decoding: syntax errors are 400, schema errors (including
/// unknown fields) 422.
fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        let status = if e.is_data() {
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::BAD_REQUEST
        };
        ApiError::new(status, "InvalidRequest", e.to_string())
    })
}

fn model_of(state: &AppState) -> Result<&LoadedModel, ApiError> {
    state.model.as_ref().ok_or_else(|| {
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "NoModel",
            "no surrogate model is loaded",
        )
    })
}

fn lookup(state: &AppState, id: &str) -> Result<store::StoredSet, ApiError> {
    state
        .store
        .lock()
        .map_err(|_| internal("session store poisoned"))?
        .get(id)
        .ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "UnknownSet", format!("no set with id {id:?}"))
                .field("set_id")
        })
}

fn unprocessable(e: RecommendError, field: &str) -> ApiError {
    ApiError::from_message(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()).field(field)
}

fn check_params(p: &GAParams, field: &str) -> Result<(), ApiError> {
    p.validate().map_err(|e| {
        ApiError::from_message(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()).field(field)
    })
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

fn upload_warnings(state: &AppState, set: &tdc::seqcore::SequenceSet, d: &tdc::seqcore::SetDescriptor) -> Vec<String> {
    let mut warnings = Vec::new();
    if set.len() < 2 {
        warnings.push("set has a single sequence".to_string());
    } else if d.unique_count == 1 {
        warnings.push("all sequences are identical".to_string());
    }
    if d.outlier_count > 0 {
        warnings.push(format!("{} sequences have outlying lengths", d.outlier_count));
    }
    if let Some(vocab) = state.model.as_ref().and_then(|m| m.vocab.as_ref()) {
        let unseen = d.ngram_freqs.keys().filter(|k| !vocab.contains(*k)).count();
        if unseen > 0 {
            warnings.push(format!(
                "{unseen} of {} n-grams were not seen in training and are ignored by the model",
                d.ngram_freqs.len()
            ));
        }
    }
    warnings
}

async fn create_set(
    State(state): State<Arc<AppState>>,
    Query(query): Query<UploadQuery>,
    body: Result<Bytes, BytesRejection>,
) -> Result<(StatusCode, Json<SetCreated>), ApiError> {
    let body = body.map_err(body_error)?;
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "InvalidEncoding", format!("InvalidEncoding: {e}")))?;
    let name = query.name.unwrap_or_else(|| "upload".to_string());
    let set = parse_sequence_file(&name, text).map_err(seq_error)?;
    let descriptor = compute_descriptor(&set);
    let warnings = upload_warnings(&state, &set, &descriptor);
    let sequences = set.len();
    let body_descriptor = DescriptorBody::from(&descriptor);
    let set_id = state
        .store
        .lock()
        .map_err(|_| internal("session store poisoned"))?
        .insert(set, descriptor)
        .map_err(|full| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "StoreFull",
                format!("all {} slots hold uploads younger than 10 minutes", full.capacity),
            )
        })?;
    Ok((
        StatusCode::CREATED,
        Json(SetCreated {
            schema_version: SCHEMA_VERSION,
            set_id,
            name,
            sequences,
            descriptor: body_descriptor,
            warnings,
        }),
    ))
}

async fn get_set(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SetInfo>, ApiError> {
    let stored = lookup(&state, &id)?;
    Ok(Json(SetInfo {
        schema_version: SCHEMA_VERSION,
        set_id: id,
        name: stored.set.name().to_string(),
        sequences: stored.set.len(),
        descriptor: DescriptorBody::from(&stored.descriptor),
    }))
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<RecommendationResponse>, ApiError> {
    let req: RecommendationRequest = decode(&body.map_err(body_error)?)?;
    let spec = ObjectiveSpec::parse(&req.objectives).map_err(|e| unprocessable(e, "objectives"))?;
    let model_info = model_of(&state)?.info.clone();
    let stored = lookup(&state, &req.set_id)?;
    let grid = match &req.grid {
        Some(o) => o.apply(&state.grid),
        None => state.grid.clone(),
    };
    if grid.is_empty() || grid.len() > MAX_GRID_POINTS {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "InvalidGrid",
            format!("grid has {} points, allowed 1..={MAX_GRID_POINTS}", grid.len()),
        )
        .field("grid"));
    }
    for p in grid.iter() {
        check_params(&p, "grid")?;
    }
    let worker = Arc::clone(&state);
    let show_all = req.show_all;
    let rec = tokio::task::spawn_blocking(move || {
        let model = worker.model.as_ref().expect("checked above");
        recommend_for_set(&stored.set, model.predictor.as_ref(), &grid, &spec, show_all)
    })
    .await
    .map_err(|e| internal(e.to_string()))?
    .map_err(|e| unprocessable(e, "set_id"))?;
    Ok(Json(RecommendationResponse::new(req.set_id, &rec, model_info)))
}

async fn predictions(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<PredictionResponse>, ApiError> {
    let req: PredictionRequest = decode(&body.map_err(body_error)?)?;
    let model = model_of(&state)?;
    let stored = lookup(&state, &req.set_id)?;
    let params = GAParams::from(&req.params);
    check_params(&params, "params")?;
    let values = model
        .predictor
        .predict_outcome(&params, &stored.descriptor)
        .map_err(|e| unprocessable(e.into(), "set_id"))?;
    Ok(Json(PredictionResponse::new(req.set_id, req.params, &values, model.info.clone())))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        schema_version: SCHEMA_VERSION,
        status: "ok".into(),
        model_loaded: state.model.is_some(),
        corpus_hash: state.model.as_ref().map(|m| m.info.corpus_hash.clone()),
        model_family: state.model.as_ref().map(|m| m.info.family.clone()),
    })
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn no_route() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

pub fn router(state: Arc<AppState>, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route(
            "/sets",
            post(create_set).layer(DefaultBodyLimit::max(config.upload_limit)),
        )
        .route("/sets/{id}", get(get_set))
        .route("/recommendations", post(recommendations))
        .route("/predictions", post(predictions))
        .route("/health", get(health))
        .fallback(no_route);
    let app = Router::new().nest("/api", api);
    let app = match &config.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(index)),
    };
    app.with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, &config)).await
}
