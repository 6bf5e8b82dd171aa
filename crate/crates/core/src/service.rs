//! JSON HTTP API over the dataset, the analyses and the advisor bundle.
//!
//! State is built once at startup and never mutated, so handlers share it
//! behind an `Arc` without locking. Every body carries `dataset_version` and
//! the bundle `seed`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tower_http::services::ServeDir;

use crate::advisor::{area_importance, predict_all, what_if, AdvisorBundle, AdvisorError};
use crate::clustering::{compare_partitions, fit_subset, summarize_clusters, Partition};
use crate::dataset::{project, Area, Feature, FeatureMatrix, FeatureVector, SolutionRecord, SubsetId, FEATURE_COUNT};
use crate::stats::{pairwise_matrix, AssociationKind, AssociationMatrix, SIGNIFICANCE_LEVEL};

/// Error body: `{"error": {"code", "message", "detail"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status: status.as_u16(), code: code.into(), message: message.into(), detail: None }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn bad_features(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_feature_vector", message).detail("features")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self }))).into_response()
    }
}

impl From<AdvisorError> for ApiError {
    fn from(e: AdvisorError) -> Self {
        match e {
            AdvisorError::BadFeatureIndex(_) => {
                Self::new(StatusCode::BAD_REQUEST, "bad_toggle", e.to_string()).detail("toggle")
            }
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

type ApiResult = std::result::Result<Json<Value>, ApiError>;

pub struct AppState {
    matrix: FeatureMatrix,
    bundle: AdvisorBundle,
    spearman: AssociationMatrix,
    chi_p: AssociationMatrix,
    chi_stat: AssociationMatrix,
    importance: Vec<Vec<f64>>,
}

impl AppState {
    /// Precomputes the association matrices and per-area importances.
    /// Fails when the bundle was trained on a different dataset.
    pub fn new(matrix: FeatureMatrix, bundle: AdvisorBundle) -> std::result::Result<Self, ApiError> {
        if bundle.dataset_version != matrix.version() {
            return Err(ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "bundle_dataset_mismatch",
                format!(
                    "bundle was trained on dataset {} but the loaded dataset is {}",
                    bundle.dataset_version,
                    matrix.version()
                ),
            ));
        }
        let importance = Area::ALL
            .iter()
            .map(|&a| area_importance(&matrix, &bundle, a))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(ApiError::from)?;
        Ok(AppState {
            spearman: pairwise_matrix(&matrix, AssociationKind::SpearmanRho),
            chi_p: pairwise_matrix(&matrix, AssociationKind::ChiSquareP),
            chi_stat: pairwise_matrix(&matrix, AssociationKind::ChiSquareStat),
            importance,
            matrix,
            bundle,
        })
    }

    pub fn canonical() -> Self {
        Self::new(FeatureMatrix::canonical(), AdvisorBundle::canonical()).expect("canonical state")
    }

    fn envelope(&self, body: Value) -> Json<Value> {
        let mut out = json!({
            "dataset_version": self.matrix.version(),
            "seed": self.bundle.seed,
        });
        if let (Some(o), Value::Object(b)) = (out.as_object_mut(), body) {
            o.extend(b);
        }
        Json(out)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/solutions", get(solutions))
        .route("/api/solutions/{name}", get(solution))
        .route("/api/stats/spearman", get(spearman))
        .route("/api/stats/chisquare", get(chisquare))
        .route("/api/clusters", get(clusters))
        .route("/api/importance/{area}", get(importance))
        .route("/api/tree/{area}", get(tree))
        .route("/api/predict", post(predict))
        .route("/api/whatif", post(whatif))
        .with_state(state)
}

/// API routes plus, optionally, static files for everything else.
pub fn app(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = router(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") }),
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub static_dir: Option<PathBuf>,
}

pub async fn serve(state: AppState, config: ServeConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    axum::serve(listener, app(Arc::new(state), config.static_dir)).await
}

fn solution_json(r: &SolutionRecord) -> Value {
    let features: serde_json::Map<String, Value> =
        Feature::ALL.iter().map(|f| (f.name().to_string(), r.features.get(*f).into())).collect();
    let areas: Vec<&str> = Area::ALL.iter().filter(|a| r.has_area(**a)).map(|a| a.name()).collect();
    json!({
        "name": r.name,
        "bits": r.features.to_string(),
        "features": features,
        "areas": areas,
    })
}

async fn solutions(State(s): State<Arc<AppState>>) -> ApiResult {
    let list: Vec<Value> = s.matrix.records().iter().map(solution_json).collect();
    Ok(s.envelope(json!({ "count": list.len(), "solutions": list })))
}

async fn solution(State(s): State<Arc<AppState>>, Path(name): Path<String>) -> ApiResult {
    let r = s.matrix.records().iter().find(|r| r.name.eq_ignore_ascii_case(&name)).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_solution", format!("no solution named `{name}`")).detail("name")
    })?;
    let mut body = solution_json(r);
    body["provenance"] = serde_json::to_value(&r.provenance).unwrap_or_default();
    Ok(s.envelope(json!({ "solution": body })))
}

async fn spearman(State(s): State<Arc<AppState>>) -> ApiResult {
    let m = &s.spearman;
    Ok(s.envelope(json!({
        "kind": "spearman_rho",
        "features": m.feature_names,
        "values": m.values,
        "undefined_pairs": m.undefined_pairs(),
    })))
}

async fn chisquare(State(s): State<Arc<AppState>>) -> ApiResult {
    let significant = s.chi_p.pairs_where(|p| p < SIGNIFICANCE_LEVEL);
    Ok(s.envelope(json!({
        "features": s.chi_p.feature_names,
        "p_values": s.chi_p.values,
        "statistics": s.chi_stat.values,
        "significance_level": SIGNIFICANCE_LEVEL,
        "significant_pairs": significant,
        "undefined_pairs": s.chi_p.undefined_pairs(),
    })))
}

#[derive(Debug, Deserialize)]
struct ClusterQuery {
    k: Option<String>,
    config: Option<String>,
}

async fn clusters(State(s): State<Arc<AppState>>, Query(q): Query<ClusterQuery>) -> ApiResult {
    let k = match q.k.as_deref() {
        None => 6,
        Some(raw) => raw.parse::<usize>().ok().filter(|k| (1..=s.matrix.len()).contains(k)).ok_or_else(|| {
            ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_cluster_count",
                format!("k must be an integer in 1..={}", s.matrix.len()),
            )
            .detail("k")
        })?,
    };
    let subset = match q.config.as_deref() {
        None => SubsetId::All,
        Some(raw) => raw.parse::<SubsetId>().map_err(|_| {
            ApiError::new(StatusCode::BAD_REQUEST, "unknown_config", format!("unknown feature configuration `{raw}`"))
                .detail("config")
        })?,
    };
    let model = fit_subset(&s.matrix, subset, k)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_cluster_count", e.to_string()).detail("k"))?;
    let profiles = summarize_clusters(&model, &project(&s.matrix, subset), &s.matrix);
    let agreement = Partition::published(&s.matrix)
        .ok()
        .and_then(|p| compare_partitions(&Partition::new(model.assignment.clone()), &p).ok());
    Ok(s.envelope(json!({
        "k": k,
        "config": subset,
        "sizes": model.sorted_sizes(),
        "cost": model.cost,
        "iterations": model.iterations,
        "converged": model.converged,
        "clusters": profiles,
        "published_agreement": agreement,
    })))
}

fn parse_area(raw: &str) -> std::result::Result<Area, ApiError> {
    Area::from_name(raw).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_area", format!("unknown application area `{raw}`")).detail("area")
    })
}

async fn importance(State(s): State<Arc<AppState>>, Path(area): Path<String>) -> ApiResult {
    let area = parse_area(&area)?;
    let values = &s.importance[area.index()];
    let list: Vec<Value> =
        Feature::ALL.iter().zip(values).map(|(f, v)| json!({ "feature": f, "importance": v })).collect();
    Ok(s.envelope(json!({ "area": area, "importance": list })))
}

async fn tree(State(s): State<Arc<AppState>>, Path(area): Path<String>) -> ApiResult {
    let area = parse_area(&area)?;
    Ok(s.envelope(json!({
        "area": area,
        "tree": s.bundle.models[&area],
        "test_accuracy": s.bundle.metadata.test_accuracy.get(&area),
        "train_accuracy": s.bundle.metadata.train_accuracy.get(&area),
    })))
}

fn body(payload: std::result::Result<Json<Value>, JsonRejection>) -> std::result::Result<Value, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request_body", e.body_text()))
}

/// Accepts nine 0/1 numbers or booleans, or a nine-character bit string.
fn parse_features(v: Option<&Value>) -> std::result::Result<FeatureVector, ApiError> {
    match v {
        Some(Value::Array(items)) => {
            if items.len() != FEATURE_COUNT {
                return Err(ApiError::bad_features(format!(
                    "expected {FEATURE_COUNT} feature flags, got {}",
                    items.len()
                )));
            }
            let mut out = [false; FEATURE_COUNT];
            for (i, item) in items.iter().enumerate() {
                out[i] = match item {
                    Value::Bool(b) => *b,
                    Value::Number(n) if n.as_u64() == Some(0) => false,
                    Value::Number(n) if n.as_u64() == Some(1) => true,
                    other => return Err(ApiError::bad_features(format!("flag {i} is {other}, expected 0 or 1"))),
                };
            }
            Ok(FeatureVector(out))
        }
        Some(Value::String(bits)) => bits.parse().map_err(ApiError::bad_features),
        Some(_) => Err(ApiError::bad_features("features must be an array of 9 flags")),
        None => Err(ApiError::bad_features("missing `features`")),
    }
}

async fn predict(
    State(s): State<Arc<AppState>>,
    payload: std::result::Result<Json<Value>, JsonRejection>,
) -> ApiResult {
    let v = body(payload)?;
    let x = parse_features(v.get("features"))?;
    let report = predict_all(&s.bundle, &x)?;
    Ok(s.envelope(serde_json::to_value(report).unwrap_or_default()))
}

async fn whatif(State(s): State<Arc<AppState>>, payload: std::result::Result<Json<Value>, JsonRejection>) -> ApiResult {
    let v = body(payload)?;
    let x = parse_features(v.get("features"))?;
    let bad = || {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_toggle", "toggle must be a feature index 0..9 or feature name")
            .detail("toggle")
    };
    let toggle = match v.get("toggle") {
        Some(Value::Number(n)) => n.as_u64().map(|i| i as usize).ok_or_else(bad)?,
        Some(Value::String(name)) => Feature::from_name(name).ok_or_else(bad)?.index(),
        _ => return Err(bad()),
    };
    let w = what_if(&s.bundle, &x, toggle)?;
    Ok(s.envelope(serde_json::to_value(w).unwrap_or_default()))
}
