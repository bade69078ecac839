//! A local static HTTP server that counts requests per path.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use jsgate_core::fixture::FixtureSite;
use parking_lot::Mutex;
use tokio::sync::oneshot;
use url::Url;

struct Shared {
    resources: HashMap<String, Vec<u8>>,
    hits: Mutex<BTreeMap<String, usize>>,
}

pub struct FixtureServer {
    pub addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Option<oneshot::Sender<()>>,
}

fn content_type(path: &str) -> &'static str {
    if path.ends_with(".js") || path.ends_with(".mjs") {
        "text/javascript"
    } else if path.ends_with(".html") || path.ends_with('/') {
        "text/html; charset=utf-8"
    } else {
        "application/octet-stream"
    }
}

async fn serve_path(State(shared): State<Arc<Shared>>, uri: Uri) -> Response {
    let path = uri.path().to_string();
    *shared.hits.lock().entry(path.clone()).or_default() += 1;
    match shared.resources.get(&path) {
        Some(body) => ([(header::CONTENT_TYPE, content_type(&path))], body.clone()).into_response(),
        None => (StatusCode::NOT_FOUND, "not found\n").into_response(),
    }
}

impl FixtureServer {
    /// Serve `resources` (path → body) on an ephemeral loopback port.
    pub async fn start(resources: HashMap<String, Vec<u8>>) -> std::io::Result<FixtureServer> {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", 0)).await?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            resources,
            hits: Mutex::new(BTreeMap::new()),
        });
        let app = axum::Router::new()
            .fallback(serve_path)
            .with_state(shared.clone());
        let (tx, rx) = oneshot::channel();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(FixtureServer {
            addr,
            shared,
            stop: Some(tx),
        })
    }

    /// Serve the page and scripts of `site`; the page is at `/index.html`
    /// and at `/`.
    pub async fn start_site(site: &FixtureSite) -> std::io::Result<FixtureServer> {
        let mut resources: HashMap<String, Vec<u8>> = site
            .scripts
            .iter()
            .map(|s| (s.path.clone(), s.body.clone()))
            .collect();
        let page = site.page_html().into_bytes();
        resources.insert(jsgate_core::fixture::PAGE_PATH.to_string(), page.clone());
        resources.insert("/".to_string(), page);
        Self::start(resources).await
    }

    pub fn base_url(&self) -> Url {
        Url::parse(&format!("http://{}/", self.addr)).expect("valid base url")
    }

    /// Requests served per path so far.
    pub fn hits(&self) -> BTreeMap<String, usize> {
        self.shared.hits.lock().clone()
    }

    pub fn hits_for(&self, path: &str) -> usize {
        self.shared.hits.lock().get(path).copied().unwrap_or(0)
    }

    pub fn reset_hits(&self) {
        self.shared.hits.lock().clear();
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
    }
}
