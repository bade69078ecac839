//! Networked parts of the pipeline: crawling, the label service and its
//! sync client, the blocking forward proxy, and the bench harness.

pub mod bench;
pub mod fetch;
pub mod fixture_server;
#[cfg(feature = "mitm")]
pub mod mitm;
pub mod proxy;
pub mod service;
pub mod sync;

pub use bench::{bench, BenchReport};
pub use fetch::{crawl, parse_page_list, FetchError, Fetcher, HttpFetcher, MapFetcher};
pub use proxy::{
    decide, start_proxy, stub_response, Decision, ProxyConfig, ProxyHandle, ProxyTelemetry,
};
pub use service::{LabelService, RefreshReport, ServiceConfig};
pub use sync::{LabelSync, SyncReport};
