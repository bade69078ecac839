//! Fetching pages and scripts, and crawling page lists into script records.

use std::collections::HashMap;
use std::time::Duration;

use async_trait::async_trait;
use jsgate_core::corpus::ScriptRecord;
use jsgate_core::html::{extract_scripts, PageScript};
use url::Url;

pub const CONNECT_TIMEOUT: Duration = Duration::from_secs(10);
pub const TOTAL_TIMEOUT: Duration = Duration::from_secs(30);
/// Responses larger than this are refused.
pub const MAX_BODY_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("{url}: HTTP status {status}")]
    Status { url: String, status: u16 },
    #[error("{url}: {msg}")]
    Transport { url: String, msg: String },
    #[error("{url}: body exceeds {MAX_BODY_BYTES} bytes")]
    TooLarge { url: String },
    #[error("{url}: not found")]
    NotFound { url: String },
}

/// Retrieves resource bodies.
#[async_trait]
pub trait Fetcher: Send + Sync {
    async fn fetch(&self, url: &Url) -> Result<Vec<u8>, FetchError>;
}

/// HTTP(S) fetcher: 10 s connect and 30 s total timeouts, one retry on
/// transport errors and 5xx responses. Environment proxy settings are
/// ignored so that crawls never loop through a local blocking proxy.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    client: reqwest::Client,
    retries: usize,
}

impl HttpFetcher {
    pub fn new() -> Result<HttpFetcher, FetchError> {
        let client = reqwest::Client::builder()
            .connect_timeout(CONNECT_TIMEOUT)
            .timeout(TOTAL_TIMEOUT)
            .no_proxy()
            .user_agent(concat!("jsgate/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| FetchError::Transport {
                url: String::new(),
                msg: e.to_string(),
            })?;
        Ok(HttpFetcher { client, retries: 1 })
    }

    async fn fetch_once(&self, url: &Url) -> Result<Vec<u8>, FetchError> {
        let transport = |e: reqwest::Error| FetchError::Transport {
            url: url.to_string(),
            msg: e.to_string(),
        };
        let mut resp = self
            .client
            .get(url.clone())
            .send()
            .await
            .map_err(transport)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(FetchError::Status {
                url: url.to_string(),
                status: status.as_u16(),
            });
        }
        if resp
            .content_length()
            .is_some_and(|n| n as usize > MAX_BODY_BYTES)
        {
            return Err(FetchError::TooLarge {
                url: url.to_string(),
            });
        }
        let mut body = Vec::new();
        while let Some(chunk) = resp.chunk().await.map_err(transport)? {
            if body.len() + chunk.len() > MAX_BODY_BYTES {
                return Err(FetchError::TooLarge {
                    url: url.to_string(),
                });
            }
            body.extend_from_slice(&chunk);
        }
        Ok(body)
    }
}

#[async_trait]
impl Fetcher for HttpFetcher {
    async fn fetch(&self, url: &Url) -> Result<Vec<u8>, FetchError> {
        let mut attempt = 0;
        loop {
            match self.fetch_once(url).await {
                Err(
                    e @ (FetchError::Transport { .. } | FetchError::Status { status: 500.., .. }),
                ) if attempt < self.retries => {
                    tracing::debug!(error = %e, "retrying fetch");
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// In-memory fetcher keyed by absolute URL.
#[derive(Debug, Clone, Default)]
pub struct MapFetcher {
    pub resources: HashMap<String, Vec<u8>>,
}

impl MapFetcher {
    pub fn insert(&mut self, url: &str, body: impl Into<Vec<u8>>) {
        let key = Url::parse(url)
            .map(String::from)
            .unwrap_or_else(|_| url.to_string());
        self.resources.insert(key, body.into());
    }
}

#[async_trait]
impl Fetcher for MapFetcher {
    async fn fetch(&self, url: &Url) -> Result<Vec<u8>, FetchError> {
        self.resources
            .get(url.as_str())
            .cloned()
            .ok_or_else(|| FetchError::NotFound {
                url: url.to_string(),
            })
    }
}

/// Parse a page list: one URL per line; blank lines and `#` comments ignored.
pub fn parse_page_list(text: &str) -> Result<Vec<Url>, String> {
    let mut pages = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let url = Url::parse(line).map_err(|e| format!("line {}: {line:?}: {e}", i + 1))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(format!("line {}: {line:?} is not http(s)", i + 1));
        }
        pages.push(url);
    }
    Ok(pages)
}

#[derive(Debug, Default)]
pub struct CrawlOutput {
    /// One record per script occurrence (page × script), in page order.
    pub records: Vec<ScriptRecord>,
    pub failures: Vec<FetchError>,
    pub pages_fetched: usize,
}

/// Fetch each page, then each script it references (external scripts are
/// fetched once per crawl even when shared across pages).
pub async fn crawl(pages: &[Url], fetcher: &dyn Fetcher, fetched_at: i64) -> CrawlOutput {
    let mut out = CrawlOutput::default();
    let mut cache: HashMap<Url, Option<Vec<u8>>> = HashMap::new();
    for page in pages {
        let html = match fetcher.fetch(page).await {
            Ok(b) => b,
            Err(e) => {
                out.failures.push(e);
                continue;
            }
        };
        out.pages_fetched += 1;
        let html = String::from_utf8_lossy(&html);
        for script in extract_scripts(&html, page) {
            match script {
                PageScript::Inline(body) => {
                    out.records.push(ScriptRecord::new(
                        None,
                        body.into_bytes(),
                        page.as_str(),
                        fetched_at,
                    ));
                }
                PageScript::External(url) => {
                    if !cache.contains_key(&url) {
                        let body = match fetcher.fetch(&url).await {
                            Ok(b) => Some(b),
                            Err(e) => {
                                out.failures.push(e);
                                None
                            }
                        };
                        cache.insert(url.clone(), body);
                    }
                    if let Some(body) = &cache[&url] {
                        out.records.push(ScriptRecord::new(
                            Some(url.to_string()),
                            body.clone(),
                            page.as_str(),
                            fetched_at,
                        ));
                    }
                }
            }
        }
    }
    out
}
