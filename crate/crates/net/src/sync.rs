//! Pulling labels from a label service into a local store.

use std::sync::Arc;
use std::time::Duration;

use jsgate_core::store::{LabelEntry, LabelStore};
use serde::Serialize;
use url::Url;

use crate::fetch::{FetchError, CONNECT_TIMEOUT, TOTAL_TIMEOUT};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SyncReport {
    /// Lines received.
    pub received: usize,
    /// Keys that were not in the store before this pull.
    pub new_entries: usize,
    /// Lines that failed schema validation.
    pub rejected: usize,
    /// Keys evicted to stay under capacity.
    pub evicted: usize,
}

/// Incremental `GET /v1/labels?since=` client. `last_sync` advances to the
/// newest `labeled_at` received, so an immediate second pull is empty.
pub struct LabelSync {
    client: reqwest::Client,
    labels_url: Url,
    pub last_sync: i64,
}

impl LabelSync {
    /// `service` is the service's base URL, e.g. `http://127.0.0.1:8080/`.
    pub fn new(service: &Url) -> Result<LabelSync, FetchError> {
        let labels_url = service
            .join("/v1/labels")
            .map_err(|e| FetchError::Transport {
                url: service.to_string(),
                msg: e.to_string(),
            })?;
        let client = reqwest::Client::builder()
            .connect_timeout(CONNECT_TIMEOUT)
            .timeout(TOTAL_TIMEOUT)
            .no_proxy()
            .build()
            .map_err(|e| FetchError::Transport {
                url: service.to_string(),
                msg: e.to_string(),
            })?;
        Ok(LabelSync {
            client,
            labels_url,
            last_sync: 0,
        })
    }

    pub async fn pull(&mut self, store: &LabelStore) -> Result<SyncReport, FetchError> {
        let mut url = self.labels_url.clone();
        url.query_pairs_mut()
            .append_pair("since", &self.last_sync.to_string());
        let transport = |e: reqwest::Error| FetchError::Transport {
            url: url.to_string(),
            msg: e.to_string(),
        };
        let resp = self
            .client
            .get(url.clone())
            .send()
            .await
            .map_err(transport)?;
        if !resp.status().is_success() {
            return Err(FetchError::Status {
                url: url.to_string(),
                status: resp.status().as_u16(),
            });
        }
        let body = resp.bytes().await.map_err(transport)?;
        let mut report = SyncReport::default();
        for line in String::from_utf8_lossy(&body)
            .lines()
            .filter(|l| !l.trim().is_empty())
        {
            report.received += 1;
            let entry = match LabelEntry::from_snapshot_line(line) {
                Ok(e) => e,
                Err(e) => {
                    tracing::warn!(error = %e, "rejecting served label line");
                    report.rejected += 1;
                    continue;
                }
            };
            let labeled_at = entry.labeled_at;
            let is_new = !store.contains(&entry.key);
            match store.put(entry) {
                Ok(evicted) => {
                    report.evicted += evicted.len();
                    report.new_entries += usize::from(is_new);
                    self.last_sync = self.last_sync.max(labeled_at);
                }
                Err(e) => {
                    tracing::warn!(error = %e, "could not store served label");
                    report.rejected += 1;
                }
            }
        }
        Ok(report)
    }
}

/// Pull every `period` until the task is dropped. Failures keep the labels
/// already stored and are retried on the next tick.
pub async fn sync_loop(mut sync: LabelSync, store: Arc<LabelStore>, period: Duration) {
    let mut tick = tokio::time::interval(period);
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tick.tick().await;
        match sync.pull(&store).await {
            Ok(r) => tracing::info!(
                received = r.received,
                new_entries = r.new_entries,
                rejected = r.rejected,
                "label sync finished"
            ),
            Err(e) => tracing::warn!(error = %e, "label sync failed; keeping cached labels"),
        }
    }
}
