use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::sync::Arc;

use base64::Engine;
use jsgate_core::classifier::ScriptClassifier;
use jsgate_core::fixture::{marker, marker_model, script_body, FixtureSite};
use jsgate_core::store::{
    decide_criticality, Criticality, LabelEntry, LabelStore, Policy, DEFAULT_CAPACITY_BYTES,
};
use jsgate_core::{Category, Label};
use jsgate_net::fixture_server::FixtureServer;
use jsgate_net::service::serve_with_shutdown;
use jsgate_net::{HttpFetcher, LabelService};
use tokio::sync::oneshot;
use url::Url;

struct Running {
    base: String,
    service: Arc<LabelService>,
    stop: Option<oneshot::Sender<()>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
    }
}

async fn serve(store: LabelStore, allow_miss: bool) -> Running {
    let classifier = ScriptClassifier::from_model(marker_model()).unwrap();
    let fetcher = Arc::new(HttpFetcher::new().unwrap());
    let service = Arc::new(
        LabelService::new(Arc::new(store), classifier, fetcher)
            .with_miss_classification(allow_miss),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    let (tx, rx) = oneshot::channel();
    tokio::spawn(serve_with_shutdown(listener, service.clone(), async {
        let _ = rx.await;
    }));
    Running {
        base: format!("http://{addr}"),
        service,
        stop: Some(tx),
    }
}

fn client() -> reqwest::Client {
    reqwest::Client::builder().no_proxy().build().unwrap()
}

async fn get(url: &str) -> (u16, Option<String>, Vec<u8>) {
    let r = client().get(url).send().await.unwrap();
    let ct = r
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    (r.status().as_u16(), ct, r.bytes().await.unwrap().to_vec())
}

async fn post_json(url: &str, body: serde_json::Value) -> (u16, serde_json::Value) {
    let r = client()
        .post(url)
        .header("content-type", "application/json")
        .body(body.to_string())
        .send()
        .await
        .unwrap();
    let status = r.status().as_u16();
    (
        status,
        serde_json::from_slice(&r.bytes().await.unwrap()).unwrap(),
    )
}

fn five_entries() -> LabelStore {
    let store = LabelStore::in_memory(1 << 20).unwrap();
    let cats = [
        Label::Assigned(Category::Analytics),
        Label::Assigned(Category::Advertising),
        Label::Assigned(Category::Video),
        Label::Assigned(Category::Content),
        Label::Unassigned,
    ];
    for (i, label) in cats.into_iter().enumerate() {
        let key = format!("https://s{i}.example/a.js");
        store
            .put(LabelEntry::new(
                &key,
                format!("s{i}.example"),
                label,
                0.9,
                100 + i as i64,
            ))
            .unwrap();
    }
    store
}

const SNAPSHOT_FIELDS: [&str; 5] = ["category", "confidence", "domain", "key", "labeled_at"];
const CATEGORY_STRINGS: [&str; 9] = [
    "advertising",
    "analytics",
    "social",
    "video",
    "customer_success",
    "utility",
    "hosting",
    "content",
    "unassigned",
];

/// Check one served line against the interchange schema.
fn check_schema(line: &str) -> LabelEntry {
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    let obj = v.as_object().unwrap();
    let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    assert_eq!(keys, SNAPSHOT_FIELDS, "{line}");
    assert!(obj["key"].is_string() && obj["domain"].is_string());
    assert!(CATEGORY_STRINGS.contains(&obj["category"].as_str().unwrap()));
    let c = obj["confidence"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&c));
    assert!(obj["labeled_at"].is_i64());
    LabelEntry::from_snapshot_line(line).unwrap()
}

#[tokio::test]
async fn labels_endpoint_serves_schema_valid_ndjson() {
    let svc = serve(five_entries(), false).await;
    let (status, ct, body) = get(&format!("{}/v1/labels?since=0", svc.base)).await;
    assert_eq!(status, 200);
    assert_eq!(ct.as_deref(), Some("application/x-ndjson"));
    let text = String::from_utf8(body).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    for line in &lines {
        check_schema(line);
    }

    // since filtering is exactly snapshot_since
    for since in [0, 99, 100, 102, 104, 1000] {
        let (_, _, body) = get(&format!("{}/v1/labels?since={since}", svc.base)).await;
        let served: Vec<LabelEntry> = String::from_utf8(body)
            .unwrap()
            .lines()
            .map(check_schema)
            .collect();
        let direct: Vec<LabelEntry> = svc
            .service
            .store()
            .snapshot_since(since)
            .into_iter()
            .map(|e| LabelEntry { last_used: 0, ..e })
            .collect();
        let served: Vec<LabelEntry> = served
            .into_iter()
            .map(|e| LabelEntry { last_used: 0, ..e })
            .collect();
        assert_eq!(served, direct, "since={since}");
    }

    let (status, _, body) = get(&format!("{}/v1/labels?since=yesterday", svc.base)).await;
    assert_eq!(status, 400);
    let err: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert!(err["error"].is_string());
}

#[tokio::test]
async fn health_reports_model_and_size() {
    let svc = serve(five_entries(), false).await;
    let (status, _, body) = get(&format!("{}/v1/health", svc.base)).await;
    assert_eq!(status, 200);
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["store_entries"], 5);
    assert_eq!(v["model_version"], marker_model().fingerprint());
}

#[tokio::test]
async fn classify_endpoint_contract() {
    let disabled = serve(five_entries(), false).await;
    let (status, v) = post_json(
        &format!("{}/v1/classify", disabled.base),
        serde_json::json!({"url": "https://new.example/x.js"}),
    )
    .await;
    assert_eq!(status, 403);
    assert_eq!(v["error"], "miss classification disabled");

    let svc = serve(five_entries(), true).await;
    let url = format!("{}/v1/classify", svc.base);
    let source = script_body("x", Some(Category::Advertising), 600);
    let b64 = base64::engine::general_purpose::STANDARD.encode(&source);
    let (status, v) = post_json(
        &url,
        serde_json::json!({"url": "https://new.example/x.js", "source": b64}),
    )
    .await;
    assert_eq!(status, 200);
    assert_eq!(v.as_object().unwrap().len(), 2);
    assert_eq!(v["category"], "advertising");
    assert!(v["confidence"].as_f64().unwrap() > 0.5);
    let stored = svc
        .service
        .store()
        .peek("https://new.example/x.js")
        .unwrap();
    assert_eq!(stored.label, Label::Assigned(Category::Advertising));

    // a stored label is returned as is, whatever the source says
    let other = base64::engine::general_purpose::STANDARD
        .encode(format!("x.{}()", marker(Category::Video)));
    let (_, v) = post_json(
        &url,
        serde_json::json!({"url": "https://s0.example/a.js", "source": other}),
    )
    .await;
    assert_eq!(v["category"], "analytics");

    for bad in [
        serde_json::json!({"url": "ftp://x/y.js", "source": ""}),
        serde_json::json!({"url": "https://x/y.js", "source": "***"}),
        serde_json::json!({"url": "https://x/y.js", "extra": 1}),
        serde_json::json!({"source": ""}),
    ] {
        let (status, v) = post_json(&url, bad.clone()).await;
        assert_eq!(status, 400, "{bad}");
        assert!(v["error"].is_string());
    }

    // unreachable source: error, no store mutation
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let missing = format!("http://127.0.0.1:{port}/gone.js");
    let before = svc.service.store().len();
    let (status, v) = post_json(&url, serde_json::json!({ "url": missing })).await;
    assert_eq!(status, 502);
    assert!(v["error"].is_string());
    assert_eq!(svc.service.store().len(), before);
}

#[tokio::test]
async fn refresh_labels_every_fixture_script_once() {
    let site = FixtureSite::news_page();
    let server = FixtureServer::start_site(&site).await.unwrap();
    let page = site.page_url(&server.base_url());
    let svc = serve(
        LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap(),
        false,
    )
    .await;

    let first = svc.service.refresh(std::slice::from_ref(&page)).await;
    assert_eq!(
        (first.pages, first.scripts_seen, first.newly_labeled),
        (1, 23, 23)
    );
    assert!(first.failures.is_empty());
    let noncritical = svc
        .service
        .store()
        .snapshot_since(0)
        .into_iter()
        .filter(|e| {
            decide_criticality(e.label, &Policy::default(), None) == Criticality::Noncritical
        })
        .count();
    assert_eq!(noncritical, 18);

    let second = svc.service.refresh(std::slice::from_ref(&page)).await;
    assert_eq!((second.scripts_seen, second.newly_labeled), (23, 0));

    let missing = Url::parse(&format!("{}nothing.html", server.base_url())).unwrap();
    let third = svc.service.refresh(&[missing]).await;
    assert_eq!(third.failures.len(), 1);
}

/// The pull-and-decide cycle a browser client performs against the API.
struct SyncClient {
    service_url: String,
    cache: LabelStore,
    last_sync: i64,
    policy: Policy,
}

impl SyncClient {
    async fn sync(&mut self) -> usize {
        let (status, _, body) = get(&format!(
            "{}/v1/labels?since={}",
            self.service_url, self.last_sync
        ))
        .await;
        assert_eq!(status, 200);
        let mut new = 0;
        for line in String::from_utf8(body).unwrap().lines() {
            let e = check_schema(line);
            self.last_sync = self.last_sync.max(e.labeled_at);
            if self.cache.peek(&e.key).is_none() {
                new += 1;
            }
            self.cache.put(e).unwrap();
        }
        new
    }

    fn cancel(&self, url: &str, is_script: bool, page: &str) -> bool {
        is_script
            && self.cache.get(url).is_some_and(|l| {
                decide_criticality(l.entry.label, &self.policy, Some(page))
                    == Criticality::Noncritical
            })
    }
}

#[tokio::test]
async fn client_sync_and_decisions_over_the_api() {
    let site = FixtureSite::news_page();
    let server = FixtureServer::start_site(&site).await.unwrap();
    let base = server.base_url();
    let page = site.page_url(&base);
    let store = LabelStore::in_memory(1 << 20).unwrap();
    for e in site.labels(&base, 1_700_000_000) {
        store.put(e).unwrap();
    }
    let svc = serve(store, false).await;

    let mut c = SyncClient {
        service_url: svc.base.clone(),
        cache: LabelStore::in_memory(DEFAULT_CAPACITY_BYTES).unwrap(),
        last_sync: 0,
        policy: Policy::default(),
    };
    assert_eq!(c.sync().await, 23);
    assert_eq!(c.sync().await, 0);

    let cancelled: BTreeSet<&str> = site
        .scripts
        .iter()
        .filter(|s| c.cancel(site.script_url(&base, s).as_str(), true, page.as_str()))
        .map(|s| s.path.as_str())
        .collect();
    let expected: BTreeSet<&str> = site
        .scripts
        .iter()
        .filter(|s| s.is_noncritical_by_default())
        .map(|s| s.path.as_str())
        .collect();
    assert_eq!(cancelled, expected);
    let analytics = site
        .scripts
        .iter()
        .find(|s| s.category == Some(Category::Analytics))
        .unwrap();
    let analytics_url = site.script_url(&base, analytics);
    assert!(!c.cancel(analytics_url.as_str(), false, page.as_str()));

    c.policy
        .add_override(page.as_str(), Category::Analytics)
        .unwrap();
    assert!(!c.cancel(analytics_url.as_str(), true, page.as_str()));
    assert!(c.cancel(analytics_url.as_str(), true, "https://other.example/"));

    // a newer label is picked up by the next pull
    let later = LabelEntry::new(
        "https://late.example/t.js",
        "late.example",
        Label::Assigned(Category::Social),
        0.8,
        1_700_000_100,
    );
    svc.service.store().put(later).unwrap();
    assert_eq!(c.sync().await, 1);
}

#[tokio::test]
async fn label_sync_pulls_incrementally() {
    let svc = serve(five_entries(), false).await;
    let local = LabelStore::in_memory(1 << 20).unwrap();
    let mut sync = jsgate_net::LabelSync::new(&Url::parse(&svc.base).unwrap()).unwrap();
    let first = sync.pull(&local).await.unwrap();
    assert_eq!(
        (first.received, first.new_entries, first.rejected),
        (5, 5, 0)
    );
    assert_eq!(sync.last_sync, 104);
    let second = sync.pull(&local).await.unwrap();
    assert_eq!((second.received, second.new_entries), (0, 0));

    // an entry relabeled later is received again but is not new
    let mut e = svc.service.store().peek("https://s2.example/a.js").unwrap();
    e.labeled_at = 200;
    e.label = Label::Assigned(Category::Social);
    svc.service.store().put(e).unwrap();
    let third = sync.pull(&local).await.unwrap();
    assert_eq!((third.received, third.new_entries), (1, 0));
    assert_eq!(
        local.peek("https://s2.example/a.js").unwrap().label,
        Label::Assigned(Category::Social)
    );

    // an unreachable service is an error and leaves the cache intact
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut dead =
        jsgate_net::LabelSync::new(&Url::parse(&format!("http://127.0.0.1:{port}/")).unwrap())
            .unwrap();
    assert!(dead.pull(&local).await.is_err());
    assert_eq!(local.len(), 5);
}

#[tokio::test]
async fn run_loads_model_and_persists_store() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    marker_model().save(&model_path).unwrap();
    let site = FixtureSite::news_page();
    let server = FixtureServer::start_site(&site).await.unwrap();
    let pages = dir.path().join("pages.txt");
    std::fs::write(
        &pages,
        format!("# fixture\n{}\n", site.page_url(&server.base_url())),
    )
    .unwrap();
    let mut cfg = jsgate_net::ServiceConfig::new(&model_path);
    cfg.store_path = Some(dir.path().join("labels.store"));
    cfg.page_list = Some(pages);

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn({
        let cfg = cfg.clone();
        async move {
            jsgate_net::service::run(
                &cfg,
                listener,
                Arc::new(HttpFetcher::new().unwrap()),
                async {
                    let _ = rx.await;
                },
            )
            .await
        }
    });
    // the first refresh runs immediately; wait for it to land
    let mut entries = 0;
    for _ in 0..100 {
        let (_, _, body) = get(&format!("http://{addr}/v1/health")).await;
        let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
        entries = v["store_entries"].as_u64().unwrap();
        if entries == 23 {
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
    assert_eq!(entries, 23);
    tx.send(()).unwrap();
    task.await.unwrap().unwrap();

    let reopened = LabelStore::open(jsgate_core::store::StoreConfig {
        capacity_bytes: DEFAULT_CAPACITY_BYTES,
        path: cfg.store_path.clone(),
    })
    .unwrap();
    assert_eq!(reopened.len(), 23);

    cfg.model_path = dir.path().join("missing.json");
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    assert!(jsgate_net::service::run(
        &cfg,
        listener,
        Arc::new(HttpFetcher::new().unwrap()),
        async {}
    )
    .await
    .is_err());
}
