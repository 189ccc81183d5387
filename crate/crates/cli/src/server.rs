use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use taxoforge_core::embedding::EmbeddingModel;
use taxoforge_core::link_pruning::journal::ReviewSession;
use taxoforge_core::link_pruning::{
    suggest_edges, Decision, EdgeSuggestion, FeatureExtractor, LogisticScorer, PruningError, SkippedPhrase,
    SuggestionId,
};
use taxoforge_core::recommender::{baseline_candidates, taxonomy_candidates, Listing, Method, RecommendError};
use taxoforge_core::taxonomy::{NodeId, Taxonomy, TaxonomyStats};
use tokio::sync::{RwLock, RwLockReadGuard, RwLockWriteGuard};

use crate::commands::{parse_status, Context};
use crate::error::CliError;
use crate::workspace::Workspace;

/// Everything loaded from a workspace. The model, scorer and listings are
/// optional; endpoints that need a missing one answer 503.
pub struct Service {
    pub session: ReviewSession,
    pub model: Option<EmbeddingModel>,
    pub scorer: Option<LogisticScorer>,
    pub listings: Vec<Listing>,
}

impl Service {
    pub fn load(ws: &Workspace) -> Result<Self, CliError> {
        Ok(Self {
            session: ws.load_session()?,
            model: ws.load_model_if_present()?,
            scorer: ws.load_scorer_if_present()?,
            listings: ws.load_listings_if_present()?,
        })
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        self.session.taxonomy()
    }
}

pub struct AppState {
    ws: Workspace,
    alpha: f64,
    service: RwLock<Service>,
    reloading: AtomicBool,
}

/// Marks the state as reloading until dropped.
pub struct ReloadGuard<'a>(&'a AtomicBool);

impl Drop for ReloadGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

impl AppState {
    pub fn new(ws: Workspace, alpha: f64, service: Service) -> Arc<Self> {
        Arc::new(Self {
            ws,
            alpha,
            service: RwLock::new(service),
            reloading: AtomicBool::new(false),
        })
    }

    pub fn load(ws: Workspace, alpha: f64) -> Result<Arc<Self>, CliError> {
        let service = Service::load(&ws)?;
        Ok(Self::new(ws, alpha, service))
    }

    /// Runs `f` against the current service under the read lock.
    pub async fn with_service<R>(&self, f: impl FnOnce(&Service) -> R) -> R {
        f(&*self.service.read().await)
    }

    /// `None` when a reload is already running.
    pub fn begin_reload(&self) -> Option<ReloadGuard<'_>> {
        self.reloading
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .ok()
            .map(|_| ReloadGuard(&self.reloading))
    }

    fn check_ready(&self) -> Result<(), ApiError> {
        if self.reloading.load(Ordering::SeqCst) {
            return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "snapshot reload in progress"));
        }
        Ok(())
    }

    async fn read(&self) -> Result<RwLockReadGuard<'_, Service>, ApiError> {
        self.check_ready()?;
        Ok(self.service.read().await)
    }

    async fn write(&self) -> Result<RwLockWriteGuard<'_, Service>, ApiError> {
        self.check_ready()?;
        Ok(self.service.write().await)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn unavailable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, message)
    }
}

impl From<PruningError> for ApiError {
    fn from(e: PruningError) -> Self {
        let status = match e {
            PruningError::UnknownSuggestion(_) => StatusCode::NOT_FOUND,
            PruningError::AlreadyDecided { .. } | PruningError::Expired { .. } => StatusCode::CONFLICT,
            PruningError::EmptyPhrase(_) | PruningError::UnknownParent(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        Self::unprocessable(e.to_string())
    }
}

impl From<taxoforge_core::taxonomy::TaxonomyError> for ApiError {
    fn from(e: taxoforge_core::taxonomy::TaxonomyError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize)]
struct StatsView {
    #[serde(flatten)]
    stats: TaxonomyStats,
    suggestions: usize,
    pending: usize,
}

#[derive(Debug, Serialize)]
struct NodeRef<'a> {
    id: NodeId,
    label: &'a str,
}

#[derive(Debug, Serialize)]
struct NodeView<'a> {
    id: NodeId,
    label: &'a str,
    kind: &'static str,
    parent: Option<NodeId>,
    depth: usize,
    /// From the node up to and including the root.
    path: Vec<NodeRef<'a>>,
    children: Vec<NodeRef<'a>>,
}

fn node_view(t: &Taxonomy, id: NodeId) -> Result<NodeView<'_>, ApiError> {
    let node = t.node(id).map_err(|_| ApiError::not_found(format!("unknown node id {id}")))?;
    let refs = |ids: &[NodeId]| -> Vec<NodeRef<'_>> {
        ids.iter()
            .map(|&i| NodeRef {
                id: i,
                label: t.label(i).expect("ids come from the taxonomy"),
            })
            .collect()
    };
    let path = t.path_to_root(id)?;
    Ok(NodeView {
        id,
        label: &node.label,
        kind: node.kind.as_str(),
        parent: node.parent,
        depth: path.len() - 1,
        path: refs(&path),
        children: refs(t.children(id)?),
    })
}

#[derive(Debug, Serialize)]
struct SuggestionView<'a> {
    #[serde(flatten)]
    suggestion: &'a EdgeSuggestion,
    /// `None` if the proposed parent has since disappeared.
    parent_label: Option<&'a str>,
}

fn suggestion_view<'a>(t: &'a Taxonomy, s: &'a EdgeSuggestion) -> SuggestionView<'a> {
    SuggestionView {
        suggestion: s,
        parent_label: t.label(s.proposed_parent).ok(),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/stats", get(stats))
        .route("/node/{id}", get(node))
        .route("/recommend", get(recommend))
        .route("/suggestions", get(list_suggestions))
        .route("/suggestions/batch", post(batch))
        .route("/suggestions/{id}/approve", post(approve))
        .route("/suggestions/{id}/reject", post(reject))
        .route("/admin/reload", post(reload))
        .with_state(state)
}

fn stats_view(svc: &Service) -> StatsView {
    let q = svc.session.queue();
    StatsView {
        stats: svc.taxonomy().stats(),
        suggestions: q.len(),
        pending: q.with_status(taxoforge_core::link_pruning::SuggestionStatus::Pending).count(),
    }
}

async fn stats(State(st): State<Arc<AppState>>) -> ApiResult<StatsView> {
    let svc = st.read().await?;
    Ok(Json(stats_view(&svc)))
}

async fn node(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id: u32 = id.parse().map_err(|_| ApiError::not_found(format!("unknown node id {id:?}")))?;
    let svc = st.read().await?;
    Ok(Json(node_view(svc.taxonomy(), NodeId(id))?).into_response())
}

async fn recommend(
    State(st): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let q = params
        .get("q")
        .ok_or_else(|| ApiError::unprocessable("missing query parameter q"))?;
    let method: Method = params.get("method").map_or(Ok(Method::Taxonomy), |m| m.parse())?;
    let r: u32 = match params.get("r") {
        Some(r) => r.parse().map_err(|_| ApiError::unprocessable(format!("bad resolution {r:?}")))?,
        None => 1,
    };
    let svc = st.read().await?;
    let result = match method {
        Method::Baseline => baseline_candidates(&svc.listings, q)?,
        Method::Taxonomy => {
            let model = svc.model.as_ref().ok_or_else(|| ApiError::unavailable("no embedding model loaded"))?;
            taxonomy_candidates(&svc.listings, svc.taxonomy(), model, q, r, st.alpha)?
        }
    };
    Ok(Json(result).into_response())
}

async fn list_suggestions(
    State(st): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let status = params
        .get("status")
        .map(|s| parse_status(s))
        .transpose()
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let svc = st.read().await?;
    let t = svc.taxonomy();
    let items: Vec<SuggestionView<'_>> = svc
        .session
        .queue()
        .iter()
        .filter(|s| status.is_none_or(|st| s.status == st))
        .map(|s| suggestion_view(t, s))
        .collect();
    Ok(Json(items).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    note: Option<String>,
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::unprocessable(format!("malformed body: {e}")))
}

async fn decide(st: &AppState, id: &str, decision: Decision, body: &Bytes) -> Result<Response, ApiError> {
    let id = SuggestionId(id.parse().map_err(|_| ApiError::not_found(format!("unknown suggestion {id:?}")))?);
    let DecisionBody { note } = parse_body(body)?;
    let mut svc = st.write().await?;
    let node = svc.session.decide(id, decision, Utc::now(), note)?;
    let t = svc.taxonomy();
    let s = svc.session.queue().get(id).expect("decided suggestion is queued");
    let body = serde_json::json!({
        "suggestion": suggestion_view(t, s),
        "node": node.map(|n| node_view(t, n)).transpose()?,
    });
    Ok(Json(body).into_response())
}

async fn approve(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    decide(&st, &id, Decision::Approve, &body).await
}

async fn reject(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    decide(&st, &id, Decision::Reject, &body).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchBody {
    phrases: Vec<String>,
    #[serde(default = "one")]
    top_k: usize,
}

fn one() -> usize {
    1
}

pub const MAX_TOP_K: usize = 50;

#[derive(Debug, Serialize)]
struct BatchView<'a> {
    created: Vec<SuggestionView<'a>>,
    skipped: Vec<SkippedPhrase>,
}

async fn batch(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: BatchBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::unprocessable(format!("malformed body: {e}")))?;
    if req.phrases.is_empty() {
        return Err(ApiError::unprocessable("phrases must not be empty"));
    }
    if !(1..=MAX_TOP_K).contains(&req.top_k) {
        return Err(ApiError::unprocessable(format!("top_k must lie in 1..={MAX_TOP_K}")));
    }
    let mut guard = st.write().await?;
    let svc = &mut *guard;
    let model = svc.model.as_ref().ok_or_else(|| ApiError::unavailable("no embedding model loaded"))?;
    let scorer = svc.scorer.as_ref().ok_or_else(|| ApiError::unavailable("no edge scorer loaded"))?;
    let outcome = {
        let t = svc.session.taxonomy();
        let fx = FeatureExtractor::with_taxonomy(model, t);
        suggest_edges(t, scorer, &fx, &req.phrases, req.top_k)
    };
    let ids = svc.session.submit(&outcome.proposals, Utc::now())?;
    let t = svc.session.taxonomy();
    let q = svc.session.queue();
    let view = BatchView {
        created: ids
            .iter()
            .map(|&id| suggestion_view(t, q.get(id).expect("just submitted")))
            .collect(),
        skipped: outcome.skipped,
    };
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn reload(State(st): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let _guard = st
        .begin_reload()
        .ok_or_else(|| ApiError::unavailable("snapshot reload in progress"))?;
    let ws = st.ws.clone();
    let fresh = tokio::task::spawn_blocking(move || Service::load(&ws))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("reload failed: {e}")))?;
    let mut svc = st.service.write().await;
    *svc = fresh;
    Ok(Json(stats_view(&svc)).into_response())
}

pub fn serve_blocking(cx: &mut Context<'_>) -> Result<(), CliError> {
    let alpha = cx.global.alpha.unwrap_or(cx.ws.config.alpha);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CliError::Usage(format!("--alpha must lie in [0, 1], got {alpha}")));
    }
    let port = cx.global.port.unwrap_or(cx.ws.config.port);
    let state = AppState::load(cx.ws.clone(), alpha)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = tokio::net::TcpListener::bind(addr).await?;
        writeln!(cx.err, "listening on http://{}", listener.local_addr()?)?;
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
