//! Label service: refreshes labels by crawling page lists and serves them
//! over HTTP.
//!
//! Endpoints:
//! - `GET /v1/labels?since=<unix seconds>` → `application/x-ndjson` snapshot lines
//! - `POST /v1/classify` `{"url": ..., "source": base64?}` → `{"category", "confidence"}`
//! - `GET /v1/health` → `{"model_version", "store_entries"}`

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use jsgate_core::classifier::{ClassificationResult, ScriptClassifier};
use jsgate_core::corpus::hash_key;
use jsgate_core::entities::host_of;
use jsgate_core::html::{extract_scripts, PageScript};
use jsgate_core::store::{LabelEntry, LabelStore};
use jsgate_core::Category;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::fetch::{FetchError, Fetcher};

/// Default refresh period: one day.
pub const DEFAULT_REFRESH_PERIOD: Duration = Duration::from_secs(24 * 60 * 60);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub store_path: Option<PathBuf>,
    pub model_path: PathBuf,
    pub refresh_period: Duration,
    pub page_list: Option<PathBuf>,
    pub allow_miss_classification: bool,
    pub capacity_bytes: u64,
}

impl ServiceConfig {
    /// Defaults for everything but the model: loopback port 8080, in-memory
    /// store, daily refresh, miss classification off.
    pub fn new(model_path: impl Into<PathBuf>) -> ServiceConfig {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            store_path: None,
            model_path: model_path.into(),
            refresh_period: DEFAULT_REFRESH_PERIOD,
            page_list: None,
            allow_miss_classification: false,
            capacity_bytes: jsgate_core::store::DEFAULT_CAPACITY_BYTES,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RefreshReport {
    pub pages: usize,
    pub scripts_seen: usize,
    pub newly_labeled: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("miss classification disabled")]
    MissClassificationDisabled,
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("fetch failed: {0}")]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Store(#[from] jsgate_core::Error),
    #[error("page list {path}: {msg}")]
    PageList { path: PathBuf, msg: String },
    #[error("serving: {0}")]
    Serve(std::io::Error),
}

impl ServiceError {
    fn status(&self) -> StatusCode {
        match self {
            ServiceError::MissClassificationDisabled => StatusCode::FORBIDDEN,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Fetch(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Store(_) | ServiceError::PageList { .. } | ServiceError::Serve(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

/// Shared service state.
pub struct LabelService {
    store: Arc<LabelStore>,
    classifier: ScriptClassifier,
    fetcher: Arc<dyn Fetcher>,
    allow_miss_classification: bool,
    /// Content hash last labeled per key, so unchanged scripts are skipped.
    seen: Mutex<HashMap<String, String>>,
    refresh_lock: tokio::sync::Mutex<()>,
}

fn result_from_entry(e: &LabelEntry) -> ClassificationResult {
    ClassificationResult {
        label: e.label,
        confidence: e.confidence,
        probs: [0.0; Category::COUNT],
    }
}

impl LabelService {
    pub fn new(
        store: Arc<LabelStore>,
        classifier: ScriptClassifier,
        fetcher: Arc<dyn Fetcher>,
    ) -> Self {
        LabelService {
            store,
            classifier,
            fetcher,
            allow_miss_classification: true,
            seen: Mutex::new(HashMap::new()),
            refresh_lock: tokio::sync::Mutex::new(()),
        }
    }

    pub fn with_miss_classification(mut self, allow: bool) -> Self {
        self.allow_miss_classification = allow;
        self
    }

    pub fn store(&self) -> &Arc<LabelStore> {
        &self.store
    }

    pub fn model_version(&self) -> String {
        self.classifier.model().fingerprint()
    }

    fn label(
        &self,
        key: &str,
        domain: String,
        source: &[u8],
    ) -> Result<ClassificationResult, ServiceError> {
        let result = self.classifier.classify_source(source);
        self.store.put(LabelEntry::new(
            key,
            domain,
            result.label,
            result.confidence,
            jsgate_core::unix_now(),
        ))?;
        Ok(result)
    }

    /// Crawl `pages`, labeling every script whose content changed since it
    /// was last labeled. Fetch failures are reported, never fatal.
    /// Concurrent calls run one after another.
    pub async fn refresh(&self, pages: &[Url]) -> RefreshReport {
        let _serial = self.refresh_lock.lock().await;
        let mut report = RefreshReport::default();
        for page in pages {
            let html = match self.fetcher.fetch(page).await {
                Ok(b) => b,
                Err(e) => {
                    report.failures.push(e.to_string());
                    continue;
                }
            };
            report.pages += 1;
            for script in extract_scripts(&String::from_utf8_lossy(&html), page) {
                let (key, domain, source) = match script {
                    PageScript::Inline(body) => {
                        let hash = jsgate_core::content_hash(body.as_bytes());
                        (hash_key(&hash), String::new(), body.into_bytes())
                    }
                    PageScript::External(url) => match self.fetcher.fetch(&url).await {
                        Ok(body) => (url.to_string(), host_of(&url).unwrap_or_default(), body),
                        Err(e) => {
                            report.failures.push(e.to_string());
                            continue;
                        }
                    },
                };
                report.scripts_seen += 1;
                let hash = jsgate_core::content_hash(&source);
                if self.seen.lock().get(&key) == Some(&hash) && self.store.contains(&key) {
                    continue;
                }
                match self.label(&key, domain, &source) {
                    Ok(_) => {
                        self.seen.lock().insert(key, hash);
                        report.newly_labeled += 1;
                    }
                    Err(e) => report.failures.push(format!("{key}: {e}")),
                }
            }
        }
        report
    }

    /// Classify a script missing from clients' caches. A stored label is
    /// returned as is; otherwise the given source (or, if absent, the
    /// fetched URL) is classified and stored.
    pub async fn classify_remote(
        &self,
        url: &str,
        source: Option<Vec<u8>>,
    ) -> Result<ClassificationResult, ServiceError> {
        if !self.allow_miss_classification {
            return Err(ServiceError::MissClassificationDisabled);
        }
        let parsed =
            Url::parse(url).map_err(|e| ServiceError::BadRequest(format!("url {url:?}: {e}")))?;
        if !matches!(parsed.scheme(), "http" | "https") {
            return Err(ServiceError::BadRequest(format!(
                "url {url:?} is not http(s)"
            )));
        }
        let key = parsed.to_string();
        if let Some(hit) = self.store.get(&key).filter(|l| !l.inferred) {
            return Ok(result_from_entry(&hit.entry));
        }
        let source = match source {
            Some(s) => s,
            None => self.fetcher.fetch(&parsed).await?,
        };
        let domain = host_of(&parsed).unwrap_or_default();
        let result = self.label(&key, domain, &source)?;
        self.seen
            .lock()
            .insert(key, jsgate_core::content_hash(&source));
        Ok(result)
    }
}

#[derive(Deserialize)]
struct SinceQuery {
    since: Option<String>,
}

async fn labels(State(svc): State<Arc<LabelService>>, Query(q): Query<SinceQuery>) -> Response {
    let since = match q.since.as_deref().map(str::parse::<i64>) {
        None => 0,
        Some(Ok(ts)) => ts,
        Some(Err(_)) => {
            return ServiceError::BadRequest("since must be an integer unix timestamp".into())
                .into_response();
        }
    };
    let entries = svc.store.snapshot_since(since);
    let mut body = Vec::with_capacity(entries.len() * 128);
    jsgate_core::store::write_snapshot(&mut body, &entries).expect("writing to a Vec cannot fail");
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyRequest {
    url: String,
    #[serde(default)]
    source: Option<String>,
}

async fn classify(
    State(svc): State<Arc<LabelService>>,
    body: axum::body::Bytes,
) -> Result<Json<ClassificationResult>, ServiceError> {
    let req: ClassifyRequest =
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    let source = req
        .source
        .map(|s| base64::engine::general_purpose::STANDARD.decode(s.as_bytes()))
        .transpose()
        .map_err(|e| ServiceError::BadRequest(format!("source is not base64: {e}")))?;
    svc.classify_remote(&req.url, source).await.map(Json)
}

#[derive(Serialize)]
struct Health {
    model_version: String,
    store_entries: usize,
}

async fn health(State(svc): State<Arc<LabelService>>) -> Json<Health> {
    Json(Health {
        model_version: svc.model_version(),
        store_entries: svc.store.len(),
    })
}

pub fn router(service: Arc<LabelService>) -> Router {
    Router::new()
        .route("/v1/labels", get(labels))
        .route("/v1/classify", post(classify))
        .route("/v1/health", get(health))
        .with_state(service)
}

/// Refresh `pages` now and then every `period`, until the task is dropped.
pub async fn refresh_loop(service: Arc<LabelService>, pages: Vec<Url>, period: Duration) {
    let mut tick = tokio::time::interval(period);
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tick.tick().await;
        let report = service.refresh(&pages).await;
        tracing::info!(
            pages = report.pages,
            scripts_seen = report.scripts_seen,
            newly_labeled = report.newly_labeled,
            failures = report.failures.len(),
            "refresh finished"
        );
    }
}

/// Read a page list file (one URL per line, `#` comments).
pub fn load_page_list(path: &std::path::Path) -> Result<Vec<Url>, ServiceError> {
    let err = |msg: String| ServiceError::PageList {
        path: path.to_path_buf(),
        msg,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    crate::fetch::parse_page_list(&text).map_err(err)
}

/// Load the model, store and page list named by `cfg`, then serve on
/// `listener` (refreshing every `cfg.refresh_period` when pages are
/// configured) until `shutdown` resolves. The store is flushed on exit.
pub async fn run(
    cfg: &ServiceConfig,
    listener: tokio::net::TcpListener,
    fetcher: Arc<dyn Fetcher>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let model = jsgate_core::classifier::ModelParameters::load(&cfg.model_path)?;
    let classifier = ScriptClassifier::from_model(model)?;
    let store = Arc::new(LabelStore::open(jsgate_core::store::StoreConfig {
        capacity_bytes: cfg.capacity_bytes,
        path: cfg.store_path.clone(),
    })?);
    let pages = cfg
        .page_list
        .as_deref()
        .map(load_page_list)
        .transpose()?
        .unwrap_or_default();
    let service = Arc::new(
        LabelService::new(store.clone(), classifier, fetcher)
            .with_miss_classification(cfg.allow_miss_classification),
    );
    let refresher = (!pages.is_empty())
        .then(|| tokio::spawn(refresh_loop(service.clone(), pages, cfg.refresh_period)));
    let served = serve_with_shutdown(listener, service, shutdown).await;
    if let Some(r) = refresher {
        r.abort();
    }
    store.flush()?;
    served.map_err(ServiceError::Serve)
}

/// Serve on an already-bound listener until `shutdown` resolves.
pub async fn serve_with_shutdown(
    listener: tokio::net::TcpListener,
    service: Arc<LabelService>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}
