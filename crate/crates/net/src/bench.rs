//! Request/byte comparison of a page loaded directly and through the proxy.
//!
//! Scripts are fetched statically (nothing is executed), so only request
//! counts and transferred body bytes are reported.

use serde::Serialize;
use url::Url;

use crate::fetch::{FetchError, CONNECT_TIMEOUT, TOTAL_TIMEOUT};
use crate::proxy::BLOCKED_HEADER;
use jsgate_core::html::extract_script_urls;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchReport {
    pub page_url: String,
    /// Requests per run: the page plus each referenced external script.
    pub requests_total: usize,
    /// Script requests answered with the stub through the proxy.
    pub requests_blocked: usize,
    /// Script requests that reached upstream through the proxy.
    pub scripts_fetched: usize,
    pub script_requests: usize,
    /// Body bytes of the direct run.
    pub bytes_total: u64,
    /// Body bytes of the proxied run.
    pub bytes_proxied: u64,
    pub bytes_saved: u64,
}

struct Run {
    bytes: u64,
    blocked: usize,
    scripts: usize,
}

fn client(proxy: Option<&str>) -> Result<reqwest::Client, FetchError> {
    let err = |e: reqwest::Error| FetchError::Transport {
        url: proxy.unwrap_or_default().to_string(),
        msg: e.to_string(),
    };
    let mut b = reqwest::Client::builder()
        .connect_timeout(CONNECT_TIMEOUT)
        .timeout(TOTAL_TIMEOUT)
        .no_proxy();
    if let Some(p) = proxy {
        b = b.proxy(reqwest::Proxy::all(p).map_err(err)?);
    }
    b.build().map_err(err)
}

async fn get(
    client: &reqwest::Client,
    url: &Url,
    referer: Option<&Url>,
) -> Result<(Vec<u8>, bool), FetchError> {
    let mut req = client.get(url.clone());
    if let Some(r) = referer {
        req = req
            .header("referer", r.as_str())
            .header("sec-fetch-dest", "script");
    }
    let resp = req.send().await.map_err(|e| FetchError::Transport {
        url: url.to_string(),
        msg: e.to_string(),
    })?;
    if !resp.status().is_success() {
        return Err(FetchError::Status {
            url: url.to_string(),
            status: resp.status().as_u16(),
        });
    }
    let blocked = resp.headers().contains_key(BLOCKED_HEADER);
    let body = resp.bytes().await.map_err(|e| FetchError::Transport {
        url: url.to_string(),
        msg: e.to_string(),
    })?;
    Ok((body.to_vec(), blocked))
}

async fn run(client: &reqwest::Client, page: &Url) -> Result<Run, FetchError> {
    let (html, _) = get(client, page, None).await?;
    let scripts = extract_script_urls(&String::from_utf8_lossy(&html), page);
    let mut r = Run {
        bytes: html.len() as u64,
        blocked: 0,
        scripts: scripts.len(),
    };
    for s in &scripts {
        match get(client, s, Some(page)).await {
            Ok((body, blocked)) => {
                r.bytes += body.len() as u64;
                r.blocked += usize::from(blocked);
            }
            Err(e) => tracing::warn!(error = %e, "script fetch failed during bench"),
        }
    }
    Ok(r)
}

/// Load `page` and its scripts directly, then through the proxy at
/// `proxy_url`, and compare.
pub async fn bench(page: &Url, proxy_url: &str) -> Result<BenchReport, FetchError> {
    let direct = run(&client(None)?, page).await?;
    let proxied = run(&client(Some(proxy_url))?, page).await?;
    Ok(BenchReport {
        page_url: page.to_string(),
        requests_total: direct.scripts + 1,
        requests_blocked: proxied.blocked,
        scripts_fetched: proxied.scripts - proxied.blocked,
        script_requests: proxied.scripts,
        bytes_total: direct.bytes,
        bytes_proxied: proxied.bytes,
        bytes_saved: direct.bytes.saturating_sub(proxied.bytes),
    })
}
