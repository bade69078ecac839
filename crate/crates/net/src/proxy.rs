//! Blocking forward proxy.
//!
//! Plain-HTTP requests arrive in absolute form and are forwarded upstream
//! unless [`decide`] blocks them, in which case a fixed JavaScript stub is
//! returned. CONNECT tunnels pass through opaquely (or are intercepted when
//! built with the `mitm` feature and given a CA). Any internal error while
//! deciding results in the request being forwarded untouched.

use std::collections::{BTreeMap, HashMap};
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::Arc;

use bytes::Bytes;
use http_body_util::{combinators::BoxBody, BodyExt, Full};
use hyper::body::Incoming;
use hyper::header::{self, HeaderMap, HeaderName};
use hyper::{Method, Request, Response, StatusCode};
use hyper_util::client::legacy::connect::HttpConnector;
use hyper_util::client::legacy::Client;
use hyper_util::rt::{TokioExecutor, TokioIo};
use jsgate_core::store::{decide_criticality, Criticality, LabelSource, Policy};
use jsgate_core::Category;
use parking_lot::Mutex;
use serde::Serialize;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use url::Url;

/// Body of every blocked response (20 bytes).
pub const STUB_BODY: &[u8] = b"/*slimweb-blocked*/\n";
/// Marks stub responses so harnesses can tell them from upstream bodies.
pub const BLOCKED_HEADER: &str = "x-jsgate-blocked";
/// Script sizes remembered for the bytes-saved counter.
const MAX_LEARNED_SIZES: usize = 1 << 16;

pub type ProxyBody = BoxBody<Bytes, hyper::Error>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allow,
    Block(Category),
}

/// The parts of a request that [`decide`] looks at.
#[derive(Debug, Clone)]
pub struct RequestInfo {
    pub method: Method,
    pub url: Url,
    /// The client declared a script destination (`Sec-Fetch-Dest: script`).
    pub script_destination: bool,
}

impl RequestInfo {
    /// Script resource by path extension (`.js`, `.mjs`) or declared
    /// destination.
    pub fn is_script(&self) -> bool {
        if self.script_destination {
            return true;
        }
        let path = self.url.path().to_ascii_lowercase();
        path.ends_with(".js") || path.ends_with(".mjs")
    }
}

/// Block iff the request is a GET/HEAD for a script, a label resolves for
/// its exact URL (or by host consensus), and the policy deems that label
/// non-critical on `page_origin`. Lookup errors propagate.
pub fn try_decide(
    req: &RequestInfo,
    source: &dyn LabelSource,
    policy: &Policy,
    page_origin: Option<&str>,
) -> jsgate_core::Result<Decision> {
    if !matches!(req.method, Method::GET | Method::HEAD) || !req.is_script() {
        return Ok(Decision::Allow);
    }
    let Some(hit) = source.lookup(req.url.as_str())? else {
        return Ok(Decision::Allow);
    };
    Ok(
        match (
            decide_criticality(hit.entry.label, policy, page_origin),
            hit.entry.label.category(),
        ) {
            (Criticality::Noncritical, Some(c)) => Decision::Block(c),
            _ => Decision::Allow,
        },
    )
}

/// [`try_decide`], failing open: any error allows the request.
pub fn decide(
    req: &RequestInfo,
    source: &dyn LabelSource,
    policy: &Policy,
    page_origin: Option<&str>,
) -> Decision {
    try_decide(req, source, policy, page_origin).unwrap_or_else(|e| {
        tracing::warn!(url = %req.url, error = %e, "label lookup failed; allowing");
        Decision::Allow
    })
}

pub(crate) fn full(body: impl Into<Bytes>) -> ProxyBody {
    Full::new(body.into())
        .map_err(|never| match never {})
        .boxed()
}

/// The response sent in place of a blocked script.
pub fn stub_response(category: Category) -> Response<ProxyBody> {
    Response::builder()
        .status(StatusCode::OK)
        .header(header::CONTENT_TYPE, "text/javascript; charset=utf-8")
        .header(header::CONTENT_LENGTH, STUB_BODY.len())
        .header(
            header::CACHE_CONTROL,
            "no-store, no-cache, must-revalidate, max-age=0",
        )
        .header(header::PRAGMA, "no-cache")
        .header(header::EXPIRES, "0")
        .header(BLOCKED_HEADER, category.as_str())
        .body(full(STUB_BODY))
        .expect("static response is valid")
}

pub(crate) fn error_response(status: StatusCode, msg: &str) -> Response<ProxyBody> {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "text/plain; charset=utf-8")
        .body(full(format!("{msg}\n")))
        .expect("static response is valid")
}

/// Counter snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ProxyTelemetry {
    pub requests_total: u64,
    pub requests_blocked: u64,
    /// Sum of upstream sizes of blocked scripts, where a size was learned
    /// from an earlier pass-through `Content-Length`; otherwise 0.
    pub bytes_upstream_saved: u64,
    pub per_category_blocked: BTreeMap<String, u64>,
    pub lookup_errors: u64,
}

#[derive(Default)]
struct Counters {
    snapshot: ProxyTelemetry,
    learned_sizes: HashMap<String, u64>,
}

pub struct ProxyState {
    source: Arc<dyn LabelSource>,
    policy: Policy,
    counters: Mutex<Counters>,
    client: Client<HttpConnector, Incoming>,
    #[cfg(feature = "mitm")]
    mitm: Option<Arc<crate::mitm::Interceptor>>,
}

impl ProxyState {
    pub fn new(source: Arc<dyn LabelSource>, policy: Policy) -> Arc<ProxyState> {
        let mut connector = HttpConnector::new();
        connector.set_connect_timeout(Some(crate::fetch::CONNECT_TIMEOUT));
        Arc::new(ProxyState {
            source,
            policy,
            counters: Mutex::new(Counters::default()),
            client: Client::builder(TokioExecutor::new()).build(connector),
            #[cfg(feature = "mitm")]
            mitm: None,
        })
    }

    pub fn telemetry(&self) -> ProxyTelemetry {
        self.counters.lock().snapshot.clone()
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    /// Decide for one request and update counters; shared by the plain and
    /// intercepted paths.
    pub(crate) fn judge(&self, info: &RequestInfo, referer: Option<&str>) -> Decision {
        let result = try_decide(info, self.source.as_ref(), &self.policy, referer);
        let mut c = self.counters.lock();
        c.snapshot.requests_total += 1;
        match result {
            Ok(Decision::Block(cat)) => {
                let saved = c.learned_sizes.get(info.url.as_str()).copied().unwrap_or(0);
                let t = &mut c.snapshot;
                t.requests_blocked += 1;
                t.bytes_upstream_saved += saved;
                *t.per_category_blocked
                    .entry(cat.as_str().to_string())
                    .or_default() += 1;
                Decision::Block(cat)
            }
            Ok(Decision::Allow) => Decision::Allow,
            Err(e) => {
                c.snapshot.lookup_errors += 1;
                tracing::warn!(url = %info.url, error = %e, "label lookup failed; allowing");
                Decision::Allow
            }
        }
    }

    pub(crate) fn learn_size(&self, info: &RequestInfo, headers: &HeaderMap) {
        if !info.is_script() {
            return;
        }
        let Some(len) = headers
            .get(header::CONTENT_LENGTH)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse::<u64>().ok())
        else {
            return;
        };
        let mut c = self.counters.lock();
        if c.learned_sizes.len() < MAX_LEARNED_SIZES
            || c.learned_sizes.contains_key(info.url.as_str())
        {
            c.learned_sizes.insert(info.url.to_string(), len);
        }
    }
}

const HOP_BY_HOP: [&str; 8] = [
    "connection",
    "proxy-connection",
    "keep-alive",
    "proxy-authenticate",
    "proxy-authorization",
    "te",
    "trailer",
    "upgrade",
];

/// Drop hop-by-hop headers, including any named in `Connection`.
pub(crate) fn strip_hop_by_hop(headers: &mut HeaderMap) {
    let named: Vec<HeaderName> = headers
        .get_all(header::CONNECTION)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .filter_map(|n| HeaderName::from_bytes(n.trim().as_bytes()).ok())
        .collect();
    for n in named {
        headers.remove(n);
    }
    for h in HOP_BY_HOP {
        headers.remove(h);
    }
}

pub(crate) fn request_info(method: &Method, url: Url, headers: &HeaderMap) -> RequestInfo {
    let script_destination = headers
        .get("sec-fetch-dest")
        .is_some_and(|v| v.as_bytes().eq_ignore_ascii_case(b"script"));
    RequestInfo {
        method: method.clone(),
        url,
        script_destination,
    }
}

pub(crate) fn referer(headers: &HeaderMap) -> Option<String> {
    headers
        .get(header::REFERER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
}

async fn handle(
    state: Arc<ProxyState>,
    req: Request<Incoming>,
) -> Result<Response<ProxyBody>, Infallible> {
    if req.method() == Method::CONNECT {
        return Ok(connect(state, req));
    }
    let uri = req.uri();
    if uri.scheme_str() != Some("http") || uri.authority().is_none() {
        return Ok(error_response(
            StatusCode::BAD_REQUEST,
            "expected an absolute http:// request URI",
        ));
    }
    let Ok(url) = Url::parse(&uri.to_string()) else {
        return Ok(error_response(
            StatusCode::BAD_REQUEST,
            "unparseable request URI",
        ));
    };
    let info = request_info(req.method(), url, req.headers());
    if let Decision::Block(cat) = state.judge(&info, referer(req.headers()).as_deref()) {
        return Ok(stub_response(cat));
    }

    let (mut parts, body) = req.into_parts();
    strip_hop_by_hop(&mut parts.headers);
    let upstream = Request::from_parts(parts, body);
    match state.client.request(upstream).await {
        Ok(resp) => {
            let (mut parts, body) = resp.into_parts();
            strip_hop_by_hop(&mut parts.headers);
            state.learn_size(&info, &parts.headers);
            Ok(Response::from_parts(parts, body.boxed()))
        }
        Err(e) => {
            tracing::debug!(url = %info.url, error = %e, "upstream request failed");
            Ok(error_response(
                StatusCode::BAD_GATEWAY,
                "upstream request failed",
            ))
        }
    }
}

fn connect(state: Arc<ProxyState>, req: Request<Incoming>) -> Response<ProxyBody> {
    let Some(authority) = req.uri().authority().cloned() else {
        return error_response(StatusCode::BAD_REQUEST, "CONNECT requires host:port");
    };
    if authority.port_u16().is_none() {
        return error_response(StatusCode::BAD_REQUEST, "CONNECT requires host:port");
    }
    tokio::spawn(async move {
        let upgraded = match hyper::upgrade::on(req).await {
            Ok(u) => u,
            Err(e) => {
                tracing::debug!(error = %e, "CONNECT upgrade failed");
                return;
            }
        };
        #[cfg(feature = "mitm")]
        if let Some(mitm) = state.mitm.clone() {
            mitm.intercept(state, TokioIo::new(upgraded), authority)
                .await;
            return;
        }
        let _ = &state;
        match TcpStream::connect(authority.as_str()).await {
            Ok(mut server) => {
                let mut client = TokioIo::new(upgraded);
                let _ = tokio::io::copy_bidirectional(&mut client, &mut server).await;
            }
            Err(e) => tracing::debug!(%authority, error = %e, "CONNECT dial failed"),
        }
    });
    Response::new(full(Bytes::new()))
}

/// Proxy listener settings.
#[derive(Debug, Clone)]
pub struct ProxyConfig {
    pub listen: SocketAddr,
    pub admin_listen: Option<SocketAddr>,
    pub policy: Policy,
    /// PEM file holding the interception CA certificate and its private key.
    pub mitm_ca: Option<std::path::PathBuf>,
    /// Extra PEM certificates trusted for intercepted upstream connections,
    /// in addition to the bundled web PKI roots.
    pub upstream_ca: Option<std::path::PathBuf>,
}

/// A running proxy.
pub struct ProxyHandle {
    pub addr: SocketAddr,
    pub admin_addr: Option<SocketAddr>,
    state: Arc<ProxyState>,
    shutdown: watch::Sender<bool>,
    tasks: Vec<tokio::task::JoinHandle<()>>,
}

impl ProxyHandle {
    pub fn telemetry(&self) -> ProxyTelemetry {
        self.state.telemetry()
    }

    /// `http://addr` for use as a client proxy URL.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn shutdown(self) {
        let _ = self.shutdown.send(true);
        for t in self.tasks {
            let _ = t.await;
        }
    }

    /// Wait until the listener stops (it only stops on shutdown).
    pub async fn join(self) {
        for t in self.tasks {
            let _ = t.await;
        }
    }
}

async fn accept_loop(
    listener: TcpListener,
    state: Arc<ProxyState>,
    mut stop: watch::Receiver<bool>,
) {
    loop {
        tokio::select! {
            accepted = listener.accept() => {
                let Ok((stream, _)) = accepted else { continue };
                let state = state.clone();
                tokio::spawn(async move {
                    let svc = hyper::service::service_fn(move |req| handle(state.clone(), req));
                    let conn = hyper::server::conn::http1::Builder::new()
                        .preserve_header_case(true)
                        .serve_connection(TokioIo::new(stream), svc)
                        .with_upgrades();
                    if let Err(e) = conn.await {
                        tracing::debug!(error = %e, "proxy connection error");
                    }
                });
            }
            _ = stop.changed() => break,
        }
    }
}

fn admin_router(state: Arc<ProxyState>) -> axum::Router {
    axum::Router::new().route(
        "/telemetry",
        axum::routing::get(move || {
            let state = state.clone();
            async move { axum::Json(state.telemetry()) }
        }),
    )
}

/// Bind and start the proxy (and its admin endpoint, if configured).
pub async fn start_proxy(
    cfg: ProxyConfig,
    source: Arc<dyn LabelSource>,
) -> std::io::Result<ProxyHandle> {
    #[allow(unused_mut)]
    let mut state = ProxyState::new(source, cfg.policy.clone());
    match &cfg.mitm_ca {
        #[cfg(feature = "mitm")]
        Some(ca) => {
            let interceptor = crate::mitm::Interceptor::from_files(ca, cfg.upstream_ca.as_deref())?;
            Arc::get_mut(&mut state).expect("unshared").mitm = Some(Arc::new(interceptor));
        }
        #[cfg(not(feature = "mitm"))]
        Some(_) => {
            return Err(std::io::Error::new(
                std::io::ErrorKind::Unsupported,
                "TLS interception requires building with the `mitm` feature",
            ));
        }
        None => {}
    }
    let listener = TcpListener::bind(cfg.listen).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = watch::channel(false);
    let mut tasks = vec![tokio::spawn(accept_loop(
        listener,
        state.clone(),
        rx.clone(),
    ))];
    let mut admin_addr = None;
    if let Some(admin) = cfg.admin_listen {
        let l = TcpListener::bind(admin).await?;
        admin_addr = Some(l.local_addr()?);
        let mut stop = rx;
        let router = admin_router(state.clone());
        tasks.push(tokio::spawn(async move {
            let _ = axum::serve(l, router)
                .with_graceful_shutdown(async move {
                    let _ = stop.changed().await;
                })
                .await;
        }));
    }
    Ok(ProxyHandle {
        addr,
        admin_addr,
        state,
        shutdown: tx,
        tasks,
    })
}
