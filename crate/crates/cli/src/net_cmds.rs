//! Subcommands that talk to the network or run servers.

use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use jsgate_core::corpus::write_corpus;
use jsgate_core::fixture::FixtureSite;
use jsgate_core::store::{LabelStore, Policy, StoreConfig};
use jsgate_net::fixture_server::FixtureServer;
use jsgate_net::service::{self, load_page_list};
use jsgate_net::{
    crawl as crawl_pages, start_proxy, HttpFetcher, LabelSync, ProxyConfig, ServiceConfig,
};
use serde_json::json;

use crate::{emit, BenchArgs, CrawlArgs, ProxyArgs, ServeArgs};

async fn shutdown_signal() {
    if let Err(e) = tokio::signal::ctrl_c().await {
        tracing::warn!(error = %e, "cannot listen for ctrl-c; running until killed");
        std::future::pending::<()>().await;
    }
}

fn load_policy(path: Option<&std::path::Path>) -> anyhow::Result<Policy> {
    Ok(match path {
        Some(p) => Policy::load(p)?,
        None => Policy::default(),
    })
}

pub async fn crawl(a: CrawlArgs) -> anyhow::Result<()> {
    let pages = load_page_list(&a.pages)?;
    let fetcher = HttpFetcher::new()?;
    let out = crawl_pages(&pages, &fetcher, jsgate_core::unix_now()).await;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_corpus(&a.out, &out.records)?;
    let failures: Vec<String> = out.failures.iter().map(ToString::to_string).collect();
    emit(&json!({
        "pages": pages.len(),
        "pages_fetched": out.pages_fetched,
        "scripts": out.records.len(),
        "failures": failures,
        "out": a.out,
    }))
}

pub async fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let cfg = ServiceConfig {
        listen: a.listen,
        store_path: a.store,
        model_path: a.model,
        refresh_period: Duration::from_secs(a.refresh_secs.max(1)),
        page_list: a.pages,
        allow_miss_classification: a.allow_miss_classification,
        capacity_bytes: a.capacity_bytes,
    };
    let listener = tokio::net::TcpListener::bind(cfg.listen)
        .await
        .with_context(|| format!("binding {}", cfg.listen))?;
    emit(&json!({"event": "listening", "addr": listener.local_addr()?.to_string()}))?;
    let fetcher = Arc::new(HttpFetcher::new()?);
    service::run(&cfg, listener, fetcher, shutdown_signal()).await?;
    Ok(())
}

pub async fn proxy(a: ProxyArgs) -> anyhow::Result<()> {
    let store = Arc::new(LabelStore::open(StoreConfig {
        capacity_bytes: a.capacity_bytes,
        path: a.store.clone(),
    })?);
    if let Some(p) = &a.labels {
        let r = store.import_jsonl(p)?;
        tracing::info!(
            imported = r.imported,
            skipped = r.skipped,
            "labels imported"
        );
    }
    let cfg = ProxyConfig {
        listen: a.listen,
        admin_listen: a.admin_listen,
        policy: load_policy(a.policy.as_deref())?,
        mitm_ca: a.mitm_ca,
        upstream_ca: a.upstream_ca,
    };
    let handle = start_proxy(cfg, store.clone())
        .await
        .with_context(|| format!("starting proxy on {}", a.listen))?;
    let syncer = match &a.sync {
        Some(url) => {
            let sync = LabelSync::new(url)?;
            let period = Duration::from_secs(a.sync_secs.max(1));
            Some(tokio::spawn(jsgate_net::sync::sync_loop(
                sync,
                store.clone(),
                period,
            )))
        }
        None => None,
    };
    emit(&json!({
        "event": "listening",
        "addr": handle.addr.to_string(),
        "admin_addr": handle.admin_addr.map(|a| a.to_string()),
        "labels": store.len(),
    }))?;
    shutdown_signal().await;
    if let Some(s) = syncer {
        s.abort();
    }
    let telemetry = handle.telemetry();
    handle.shutdown().await;
    store.flush()?;
    emit(&json!({"event": "stopped", "telemetry": telemetry}))
}

pub async fn bench(a: BenchArgs) -> anyhow::Result<()> {
    if !a.fixture {
        let page = a.page.expect("clap requires --page without --fixture");
        let proxy = a.proxy.expect("clap requires --proxy with --page");
        let report = jsgate_net::bench(&page, &proxy).await?;
        return emit(&report);
    }
    let site = FixtureSite::news_page();
    let server = FixtureServer::start_site(&site).await?;
    let base = server.base_url();
    let store = LabelStore::in_memory(jsgate_core::store::DEFAULT_CAPACITY_BYTES)?;
    for e in site.labels(&base, jsgate_core::unix_now()) {
        store.put(e)?;
    }
    let cfg = ProxyConfig {
        listen: "127.0.0.1:0".parse().expect("valid address"),
        admin_listen: None,
        policy: load_policy(a.policy.as_deref())?,
        mitm_ca: None,
        upstream_ca: None,
    };
    let handle = start_proxy(cfg, Arc::new(store)).await?;
    let report = jsgate_net::bench(&site.page_url(&base), &handle.url()).await?;
    handle.shutdown().await;
    emit(&report)
}

#[cfg(feature = "mitm")]
pub fn ca(a: crate::CaArgs) -> anyhow::Result<()> {
    let pem = jsgate_net::mitm::generate_ca(&a.name)?;
    std::fs::write(&a.out, pem).with_context(|| format!("writing {}", a.out.display()))?;
    emit(&json!({"out": a.out}))
}
