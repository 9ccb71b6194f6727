//! HTTP/JSON service exposing the sketching library: geometry, circle
//! function operations, sketch construction, verification, analysis over
//! named in-memory indexes, and the experiment runners.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use starsketch::analysis::{self, ClusterResult, SketchIndex};
use starsketch::circfn::{self, CircleFunction};
use starsketch::experiment::{self, ExperimentConfig};
use starsketch::geometry::{
    self, GeneratorParams, Outline, RadialProfile, StandardizedOutline, StarFunction,
};
use starsketch::sketch::{self, LagSampling, PhiSpec, RandomSketch, Sketch};
use starsketch::verify::{self, Family};
use starsketch::Error as CoreError;

#[derive(Clone, Default)]
pub struct AppState {
    indexes: Arc<RwLock<HashMap<String, SketchIndex>>>,
}

/// JSON error envelope: `{"error": message, "kind": classification}`.
/// `kind` is `"numerical"` for rejections of degenerate/overflowing inputs
/// and `"invalid_input"` otherwise; clients map these to exit codes.
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            kind: "not_found",
            message: message.into(),
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::NotStarShaped(_)
            | CoreError::DegeneratePolygon(_)
            | CoreError::Overflow(_)
            | CoreError::TiedValues(_) => "numerical",
            _ => "invalid_input",
        };
        Self {
            status: StatusCode::BAD_REQUEST,
            kind,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.message, "kind": self.kind })),
        )
            .into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

pub fn router() -> Router {
    router_with_state(AppState::default())
}

pub fn router_with_state(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/geometry/standardize", post(geometry_standardize))
        .route("/geometry/rotate", post(geometry_rotate))
        .route("/geometry/discretize", post(geometry_discretize))
        .route("/geometry/synthesize", post(geometry_synthesize))
        .route("/circfn/rotate", post(circfn_rotate))
        .route("/circfn/shift", post(circfn_shift))
        .route("/circfn/roc", post(circfn_roc))
        .route("/circfn/difference-table", post(circfn_difference_table))
        .route("/circfn/canonical", post(circfn_canonical))
        .route("/circfn/roc-canonical", post(circfn_roc_canonical))
        .route("/circfn/equivalent", post(circfn_equivalent))
        .route("/circfn/lag-homometric", post(circfn_lag_homometric))
        .route("/sketch", post(sketch_build))
        .route("/sketch/random", post(sketch_random))
        .route("/sketch/kernel", post(sketch_kernel))
        .route("/sketch/hoeffding", post(sketch_hoeffding))
        .route("/sketch/range-bound", post(sketch_range_bound))
        .route("/verify/injectivity", post(verify_injectivity))
        .route("/analysis/sketch-distance", post(analysis_sketch_distance))
        .route("/analysis/star-distance", post(analysis_star_distance))
        .route("/analysis/rstar-distance", post(analysis_rstar_distance))
        .route("/analysis/accuracy", post(analysis_accuracy))
        .route("/index/:name", put(index_put).get(index_get))
        .route("/index/:name/knn", post(index_knn))
        .route("/index/:name/kmeans", post(index_kmeans))
        .route("/experiment/cluster", post(experiment_cluster))
        .route("/experiment/knn", post(experiment_knn))
        .route("/experiment/convergence", post(experiment_convergence))
        .with_state(state)
}

/// Bind to `addr` (use port 0 for an ephemeral port) and serve in a
/// background task; returns the bound address.
pub async fn spawn(addr: SocketAddr) -> std::io::Result<SocketAddr> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router()).await {
            tracing::error!("server error: {e}");
        }
    });
    Ok(bound)
}

/// Bind to `addr` and serve in the foreground until the process exits.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router()).await
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

// --- geometry -------------------------------------------------------------

#[derive(Deserialize)]
struct StandardizeRequest {
    points: Vec<[f64; 2]>,
}

async fn geometry_standardize(
    Json(req): Json<StandardizeRequest>,
) -> ApiResult<StandardizedOutline> {
    let outline = Outline::new(req.points)?;
    Ok(Json(geometry::standardize(&outline)?))
}

#[derive(Deserialize)]
struct RotateOutlineRequest {
    outline: StandardizedOutline,
    angle: f64,
}

async fn geometry_rotate(Json(req): Json<RotateOutlineRequest>) -> ApiResult<StandardizedOutline> {
    Ok(Json(geometry::rotate_outline(&req.outline, req.angle)))
}

#[derive(Deserialize)]
struct DiscretizeRequest {
    outline: StandardizedOutline,
    m: usize,
    extra_rays: Option<usize>,
}

async fn geometry_discretize(Json(req): Json<DiscretizeRequest>) -> ApiResult<StarFunction> {
    let extra = req.extra_rays.unwrap_or(geometry::DEFAULT_EXTRA_RAYS);
    Ok(Json(geometry::star_discretize_with(
        &req.outline,
        req.m,
        extra,
    )?))
}

#[derive(Deserialize)]
struct SynthesizeRequest {
    #[serde(default)]
    params: Option<GeneratorParams>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
pub struct SynthesizeResponse {
    pub outline: StandardizedOutline,
    pub profile: RadialProfile,
}

async fn geometry_synthesize(Json(req): Json<SynthesizeRequest>) -> ApiResult<SynthesizeResponse> {
    let params = req.params.unwrap_or_default();
    let (outline, profile) = geometry::synthesize_star_shape(&params, req.seed)?;
    Ok(Json(SynthesizeResponse { outline, profile }))
}

// --- circle functions -----------------------------------------------------

#[derive(Deserialize)]
struct FnAndInt {
    values: Vec<f64>,
    x: i64,
}

#[derive(Deserialize)]
struct FnAndReal {
    values: Vec<f64>,
    c: f64,
}

#[derive(Deserialize)]
struct FnOnly {
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct FnPair {
    f: Vec<f64>,
    g: Vec<f64>,
}

#[derive(Serialize)]
struct ValuesResponse {
    values: Vec<f64>,
}

async fn circfn_rotate(Json(req): Json<FnAndInt>) -> ApiResult<ValuesResponse> {
    let f = CircleFunction::new(req.values)?;
    Ok(Json(ValuesResponse {
        values: f.rotate(req.x).values,
    }))
}

async fn circfn_shift(Json(req): Json<FnAndReal>) -> ApiResult<ValuesResponse> {
    let f = CircleFunction::new(req.values)?;
    Ok(Json(ValuesResponse {
        values: f.shift(req.c).values,
    }))
}

async fn circfn_roc(Json(req): Json<FnAndReal>) -> ApiResult<ValuesResponse> {
    let f = CircleFunction::new(req.values)?;
    Ok(Json(ValuesResponse {
        values: f.roc(req.c).values,
    }))
}

async fn circfn_difference_table(Json(req): Json<FnOnly>) -> ApiResult<circfn::DifferenceTable> {
    let f = CircleFunction::new(req.values)?;
    Ok(Json(circfn::difference_table(&f)))
}

#[derive(Serialize)]
struct CanonicalResponse {
    canonical: Vec<f64>,
    rotation: i64,
    offset: f64,
}

async fn circfn_canonical(Json(req): Json<FnOnly>) -> ApiResult<CanonicalResponse> {
    let f = CircleFunction::new(req.values)?;
    let (canon, rotation, offset) = circfn::canonical_form(&f);
    Ok(Json(CanonicalResponse {
        canonical: canon.values,
        rotation,
        offset,
    }))
}

#[derive(Serialize)]
struct RocCanonicalResponse {
    canonical: Vec<f64>,
    roc_applied: bool,
}

async fn circfn_roc_canonical(Json(req): Json<FnOnly>) -> ApiResult<RocCanonicalResponse> {
    let f = CircleFunction::new(req.values)?;
    let (canon, roc_applied) = circfn::roc_canonical_form(&f)?;
    Ok(Json(RocCanonicalResponse {
        canonical: canon.values,
        roc_applied,
    }))
}

async fn circfn_equivalent(Json(req): Json<FnPair>) -> ApiResult<serde_json::Value> {
    let f = CircleFunction::new(req.f)?;
    let g = CircleFunction::new(req.g)?;
    Ok(Json(json!({ "equivalent": circfn::equivalent(&f, &g)? })))
}

async fn circfn_lag_homometric(Json(req): Json<FnPair>) -> ApiResult<serde_json::Value> {
    let f = CircleFunction::new(req.f)?;
    let g = CircleFunction::new(req.g)?;
    Ok(Json(
        json!({ "lag_homometric": circfn::lag_homometric(&f, &g)? }),
    ))
}

// --- sketches ---------------------------------------------------------------

#[derive(Deserialize)]
struct SketchRequest {
    values: Vec<f64>,
    #[serde(default)]
    phi: Option<PhiSpec>,
    /// "auto" (default), "direct", or "fft".
    #[serde(default)]
    method: Option<String>,
}

async fn sketch_build(Json(req): Json<SketchRequest>) -> ApiResult<Sketch> {
    let f = CircleFunction::new(req.values)?;
    let phi = req.phi.unwrap_or_default();
    let sketch = match req.method.as_deref() {
        None | Some("auto") => sketch::sketch_auto(&f, phi)?,
        Some("direct") => sketch::sketch_direct(&f, phi)?,
        Some("fft") => sketch::sketch_fft(&f, phi)?,
        Some(other) => {
            return Err(CoreError::InvalidParameter(format!(
                "unknown sketch method {other:?}; use auto, direct, or fft"
            ))
            .into())
        }
    };
    Ok(Json(sketch))
}

#[derive(Deserialize)]
struct RandomSketchRequest {
    values: Vec<f64>,
    t: usize,
    #[serde(default)]
    phi: Option<PhiSpec>,
    seed: u64,
    #[serde(default)]
    sampling: Option<LagSampling>,
}

async fn sketch_random(Json(req): Json<RandomSketchRequest>) -> ApiResult<RandomSketch> {
    let f = CircleFunction::new(req.values)?;
    let phi = req.phi.unwrap_or_default();
    let sampling = req.sampling.unwrap_or(LagSampling::IidUniform);
    Ok(Json(sketch::sketch_random(
        &f, phi, req.t, req.seed, sampling,
    )?))
}

#[derive(Deserialize)]
struct KernelRequest {
    f: Vec<f64>,
    g: Vec<f64>,
    #[serde(default)]
    phi: Option<PhiSpec>,
}

async fn sketch_kernel(Json(req): Json<KernelRequest>) -> ApiResult<serde_json::Value> {
    let f = CircleFunction::new(req.f)?;
    let g = CircleFunction::new(req.g)?;
    let phi = req.phi.unwrap_or_default();
    Ok(Json(json!({ "kernel": sketch::kernel(&f, &g, phi)? })))
}

#[derive(Deserialize)]
struct HoeffdingRequest {
    epsilon: f64,
    delta: f64,
    range_width: f64,
}

async fn sketch_hoeffding(Json(req): Json<HoeffdingRequest>) -> ApiResult<serde_json::Value> {
    let samples = sketch::hoeffding_samples(req.epsilon, req.delta, req.range_width)?;
    Ok(Json(json!({ "samples": samples })))
}

async fn sketch_range_bound(Json(req): Json<KernelRequest>) -> ApiResult<serde_json::Value> {
    let f = CircleFunction::new(req.f)?;
    let g = CircleFunction::new(req.g)?;
    let phi = req.phi.unwrap_or_default();
    Ok(Json(
        json!({ "bound": sketch::phi_range_bound(&f, &g, phi)? }),
    ))
}

// --- verification -----------------------------------------------------------

#[derive(Deserialize)]
struct InjectivityRequest {
    m: usize,
    family: Family,
    #[serde(default)]
    trials: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
}

async fn verify_injectivity(
    Json(req): Json<InjectivityRequest>,
) -> ApiResult<verify::InjectivityReport> {
    let trials = req.trials.unwrap_or(1000);
    let seed = req.seed.unwrap_or(0);
    let report = tokio::task::spawn_blocking(move || {
        verify::verify_injectivity(req.m, req.family, trials, seed)
    })
    .await
    .map_err(|e| CoreError::InvalidParameter(format!("verification task failed: {e}")))??;
    Ok(Json(report))
}

// --- analysis ---------------------------------------------------------------

#[derive(Deserialize)]
struct SketchPair {
    a: Sketch,
    b: Sketch,
}

async fn analysis_sketch_distance(Json(req): Json<SketchPair>) -> ApiResult<serde_json::Value> {
    Ok(Json(
        json!({ "distance": analysis::sketch_distance(&req.a, &req.b)? }),
    ))
}

#[derive(Deserialize)]
struct StarPair {
    f1: Vec<f64>,
    f2: Vec<f64>,
}

async fn analysis_star_distance(Json(req): Json<StarPair>) -> ApiResult<serde_json::Value> {
    let f1 = StarFunction::new(req.f1)?;
    let f2 = StarFunction::new(req.f2)?;
    Ok(Json(
        json!({ "distance": analysis::star_distance(&f1, &f2)? }),
    ))
}

async fn analysis_rstar_distance(Json(req): Json<StarPair>) -> ApiResult<serde_json::Value> {
    let f1 = StarFunction::new(req.f1)?;
    let f2 = StarFunction::new(req.f2)?;
    let (distance, best_rotation) = analysis::r_star_distance(&f1, &f2)?;
    Ok(Json(
        json!({ "distance": distance, "best_rotation": best_rotation }),
    ))
}

#[derive(Deserialize)]
struct AccuracyRequest {
    result: ClusterResult,
    provenance: BTreeMap<String, String>,
}

async fn analysis_accuracy(Json(req): Json<AccuracyRequest>) -> ApiResult<serde_json::Value> {
    Ok(Json(json!({
        "accuracy": analysis::rotation_cluster_accuracy(&req.result, &req.provenance)?
    })))
}

// --- named in-memory indexes -------------------------------------------------

async fn index_put(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Json(index): Json<SketchIndex>,
) -> ApiResult<serde_json::Value> {
    // revalidate through the typed constructor
    let mut rebuilt = SketchIndex::new(index.m, index.phi);
    for (id, sketch) in index.entries {
        rebuilt.insert(id, sketch)?;
    }
    let n = rebuilt.len();
    state.indexes.write().unwrap().insert(name, rebuilt);
    Ok(Json(json!({ "stored": n })))
}

async fn index_get(
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> ApiResult<SketchIndex> {
    let indexes = state.indexes.read().unwrap();
    indexes
        .get(&name)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no index named {name:?}")))
}

#[derive(Deserialize)]
struct KnnRequest {
    query: Sketch,
    k: usize,
}

async fn index_knn(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Json(req): Json<KnnRequest>,
) -> ApiResult<Vec<(String, f64)>> {
    let indexes = state.indexes.read().unwrap();
    let index = indexes
        .get(&name)
        .ok_or_else(|| ApiError::not_found(format!("no index named {name:?}")))?;
    Ok(Json(analysis::knn(index, &req.query, req.k)?))
}

#[derive(Deserialize)]
struct KmeansRequest {
    k: usize,
    seed: u64,
    #[serde(default)]
    max_iters: Option<usize>,
}

async fn index_kmeans(
    State(state): State<AppState>,
    Path(name): Path<String>,
    Json(req): Json<KmeansRequest>,
) -> ApiResult<ClusterResult> {
    let index = {
        let indexes = state.indexes.read().unwrap();
        indexes
            .get(&name)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no index named {name:?}")))?
    };
    let max_iters = req.max_iters.unwrap_or(300);
    Ok(Json(analysis::kmeans(&index, req.k, req.seed, max_iters)?))
}

// --- experiments --------------------------------------------------------------

async fn experiment_cluster(
    Json(cfg): Json<ExperimentConfig>,
) -> ApiResult<experiment::ClusterReport> {
    let report = tokio::task::spawn_blocking(move || experiment::run_cluster_experiment(&cfg))
        .await
        .map_err(|e| CoreError::InvalidParameter(format!("experiment task failed: {e}")))??;
    Ok(Json(report))
}

async fn experiment_knn(Json(cfg): Json<ExperimentConfig>) -> ApiResult<experiment::KnnReport> {
    let report = tokio::task::spawn_blocking(move || experiment::run_knn_experiment(&cfg))
        .await
        .map_err(|e| CoreError::InvalidParameter(format!("experiment task failed: {e}")))??;
    Ok(Json(report))
}

#[derive(Deserialize)]
struct ConvergenceRequest {
    #[serde(default)]
    profile: Option<RadialProfile>,
    m_values: Vec<usize>,
    #[serde(default)]
    phi: Option<PhiSpec>,
}

async fn experiment_convergence(
    Json(req): Json<ConvergenceRequest>,
) -> ApiResult<experiment::ConvergenceReport> {
    let profile = req.profile.unwrap_or_else(experiment::convergence_profile);
    let phi = req.phi.unwrap_or_default();
    let report = tokio::task::spawn_blocking(move || {
        experiment::run_convergence(&profile, &req.m_values, &phi)
    })
    .await
    .map_err(|e| CoreError::InvalidParameter(format!("experiment task failed: {e}")))??;
    Ok(Json(report))
}
