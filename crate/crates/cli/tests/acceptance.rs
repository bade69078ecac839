//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and runtime budgets are the constants below.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use jsgate_core::classifier::{
    batch_loss, gate, gradient_check, init_model_with_hidden, softmax, train, Batch, TrainConfig,
};
use jsgate_core::entities::{self, EntityRecord, EntityRepository};
use jsgate_core::fixture::{marker_dataset, rfe_dataset, FixtureSite};
use jsgate_core::rfe::{rfe_select, RfeConfig};
use jsgate_core::store::{
    decide_criticality, Criticality, LabelEntry, LabelSource, LabelStore, Lookup, Policy,
};
use jsgate_core::{Category, Label};
use jsgate_net::fixture_server::FixtureServer;
use jsgate_net::proxy::BLOCKED_HEADER;
use jsgate_net::{bench, start_proxy, ProxyConfig};
use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GATE_BUDGET: Duration = Duration::from_secs(1);
const GRADCHECK_MODELS: usize = 20;
const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Rounding in the central difference grows like 1/ε on near-zero
/// gradients; at 1e-4 it and the O(ε²) truncation term are both far below
/// the tolerance.
const GRADCHECK_EPSILON: f64 = 1e-4;
const GRADCHECK_BUDGET: Duration = Duration::from_secs(30);
const ANALYTIC_TOLERANCE: f64 = 1e-9;
const SOFTMAX_VECTORS: usize = 10_000;
const SYNTHETIC_ROWS: usize = 10_000;
const SYNTHETIC_FEATURES: usize = 64;
const SYNTHETIC_MIN_ACCURACY: f64 = 0.95;
const SYNTHETIC_MAX_EPOCHS: usize = 200;
const SYNTHETIC_BUDGET: Duration = Duration::from_secs(300);
const RFE_INFORMATIVE: usize = 8;
const RFE_NOISE: usize = 1254;
const RFE_ROWS: usize = 800;
const RFE_TARGET_K: usize = 508;
const RFE_BUDGET: Duration = Duration::from_secs(600);
const ENTITY_ORACLE_CASES: usize = 1000;
const NEWS_PAGE_SCRIPTS: usize = 23;
const NEWS_PAGE_FETCHED: usize = 5;
const BYTES_SAVED_TOLERANCE: f64 = 0.01;
const NEWS_PAGE_BUDGET: Duration = Duration::from_secs(30);
const STORE_OPS: usize = 10_000;
const FAIL_OPEN_REQUESTS: usize = 100;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || {
        format!(
            "took {:.1}s, budget {:.0}s",
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        )
    })
}

/// Gate over every probability vector on a 0.1 grid (argmax unique or not)
/// and every threshold in {0, 0.1, …, 0.9}.
fn c1_gate() -> Outcome {
    let start = Instant::now();
    let thresholds: Vec<f64> = (0..10).map(|t| f64::from(t) / 10.0).collect();
    let mut cases = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // The grid: the max probability takes every value k/10 at every position,
    // with the remaining mass spread over the other entries.
    for pos in 0..Category::COUNT {
        for k in 0..=10 {
            let max = f64::from(k) / 10.0;
            for _ in 0..50 {
                let mut probs = [0.0; Category::COUNT];
                probs[pos] = max;
                let mut rest = 1.0 - max;
                for (i, p) in probs.iter_mut().enumerate() {
                    if i != pos {
                        let v = rng.random_range(0.0..=rest.min(max));
                        *p = v;
                        rest -= v;
                    }
                }
                for &t in &thresholds {
                    cases += 1;
                    let r = gate(probs, t);
                    let top = probs.iter().cloned().fold(f64::MIN, f64::max);
                    let expect_assigned = top > t;
                    ensure(
                        matches!(r.label, Label::Assigned(_)) == expect_assigned,
                        || format!("probs {probs:?} threshold {t}: got {:?}", r.label),
                    )?;
                    if let Label::Assigned(c) = r.label {
                        ensure(probs[c.index()] == top, || {
                            format!("{probs:?}: {c} is not an argmax")
                        })?;
                    }
                }
            }
        }
        // Boundary: max exactly equal to the threshold is withheld.
        for &t in &thresholds {
            let mut probs = [0.0; Category::COUNT];
            probs[pos] = t;
            cases += 1;
            ensure(gate(probs, t).label == Label::Unassigned, || {
                format!("max == threshold {t} at {pos} was assigned")
            })?;
        }
    }
    within_budget(start.elapsed(), GATE_BUDGET)?;
    Ok(format!(
        "{cases} cases in {:.0} ms",
        start.elapsed().as_secs_f64() * 1e3
    ))
}

fn random_batch(rng: &mut ChaCha8Rng, rows: usize, n: usize) -> Batch {
    Batch {
        x: Array2::from_shape_fn((rows, n), |_| f64::from(rng.random_range(0u32..4))),
        targets: (0..rows)
            .map(|_| rng.random_range(0..Category::COUNT))
            .collect(),
    }
}

fn c2_gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 0..GRADCHECK_MODELS {
        let n = rng.random_range(3..12);
        let hidden = [rng.random_range(4..16), rng.random_range(3..10)];
        let model = init_model_with_hidden(n, &hidden, i as u64).map_err(|e| e.to_string())?;
        let rows = rng.random_range(2..10);
        let batch = random_batch(&mut rng, rows, n);
        let l2 = if i % 2 == 0 { 0.0 } else { 1e-3 };
        let g = gradient_check(&model, &batch, GRADCHECK_EPSILON, l2, i as u64)
            .map_err(|e| e.to_string())?;
        worst = worst.max(g.max_relative_error);
        checked += g.checked;
    }
    ensure(worst < GRADCHECK_TOLERANCE, || {
        format!("max relative error {worst:.2e} ≥ {GRADCHECK_TOLERANCE:.0e}")
    })?;
    within_budget(start.elapsed(), GRADCHECK_BUDGET)?;
    Ok(format!(
        "{GRADCHECK_MODELS} models, {checked} coordinates, max relative error {worst:.2e} < {GRADCHECK_TOLERANCE:.0e}"
    ))
}

fn c3_softmax_cross_entropy() -> Outcome {
    // Zero weights and biases give uniform outputs whatever the input.
    let mut model = init_model_with_hidden(6, &[5, 4], 3).map_err(|e| e.to_string())?;
    for p in model.params_mut() {
        *p = 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows = 4 * Category::COUNT;
    let batch = Batch {
        x: Array2::from_shape_fn((rows, 6), |_| rng.random_range(0.0..5.0)),
        targets: (0..rows).map(|i| i % Category::COUNT).collect(),
    };
    let loss = batch_loss(&model, &batch, 0.0);
    let ln8 = (Category::COUNT as f64).ln();
    ensure((loss - ln8).abs() < ANALYTIC_TOLERANCE, || {
        format!("uniform loss {loss} vs ln 8 = {ln8}")
    })?;

    let mut worst = 0.0f64;
    for _ in 0..SOFTMAX_VECTORS {
        let scale = 10f64.powi(rng.random_range(-2..4));
        let logits: Vec<f64> = (0..Category::COUNT)
            .map(|_| rng.random_range(-1.0..1.0) * scale)
            .collect();
        let p = softmax(&logits);
        ensure(p.iter().all(|v| v.is_finite() && *v >= 0.0), || {
            format!("softmax({logits:?}) = {p:?}")
        })?;
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst < ANALYTIC_TOLERANCE, || {
        format!("softmax sum off by {worst:.2e}")
    })?;
    Ok(format!(
        "|loss − ln 8| = {:.1e}; {SOFTMAX_VECTORS} softmax sums within {worst:.1e} of 1 (tolerance {ANALYTIC_TOLERANCE:.0e})",
        (loss - ln8).abs()
    ))
}

fn c4_synthetic_classification() -> Outcome {
    let start = Instant::now();
    let (vocab, data) = marker_dataset(SYNTHETIC_ROWS, SYNTHETIC_FEATURES, 4);
    let (train_set, held_out) = data.split(0.2, 4);
    let cfg = TrainConfig::default();
    ensure(cfg.epochs <= SYNTHETIC_MAX_EPOCHS, || {
        format!("default epochs {}", cfg.epochs)
    })?;
    let model =
        init_model_with_hidden(vocab.len(), &[350, 50], cfg.seed).map_err(|e| e.to_string())?;
    let out = train(model, &train_set, Some(&held_out), &cfg).map_err(|e| e.to_string())?;
    let report =
        jsgate_core::classifier::evaluate(&out.model, &held_out, 0.0).map_err(|e| e.to_string())?;
    ensure(report.accuracy >= SYNTHETIC_MIN_ACCURACY, || {
        format!(
            "held-out accuracy {:.4} < {SYNTHETIC_MIN_ACCURACY}",
            report.accuracy
        )
    })?;
    ensure(out.epochs_run <= SYNTHETIC_MAX_EPOCHS, || {
        format!("{} epochs", out.epochs_run)
    })?;
    within_budget(start.elapsed(), SYNTHETIC_BUDGET)?;
    Ok(format!(
        "held-out accuracy {:.4} ≥ {SYNTHETIC_MIN_ACCURACY} on {} rows after {} epochs in {:.1}s",
        report.accuracy,
        held_out.len(),
        out.epochs_run,
        start.elapsed().as_secs_f64()
    ))
}

fn c5_rfe() -> Outcome {
    let start = Instant::now();
    let (vocab, data, informative) = rfe_dataset(RFE_ROWS, RFE_INFORMATIVE, RFE_NOISE, 5);
    let cfg = RfeConfig {
        target_k: RFE_TARGET_K,
        ..RfeConfig::default()
    };
    let out = rfe_select(&data, &vocab, &cfg).map_err(|e| e.to_string())?;
    ensure(out.vocabulary.len() == RFE_TARGET_K, || {
        format!(
            "selected {} features, target {RFE_TARGET_K}",
            out.vocabulary.len()
        )
    })?;
    let kept: BTreeSet<&String> = out.vocabulary.names().iter().collect();
    let lost: Vec<&String> = informative.iter().filter(|n| !kept.contains(n)).collect();
    ensure(lost.is_empty(), || {
        format!("informative features eliminated: {lost:?}")
    })?;
    within_budget(start.elapsed(), RFE_BUDGET)?;
    Ok(format!(
        "{} → {RFE_TARGET_K} features in {} rounds, all {RFE_INFORMATIVE} informative kept, {:.1}s",
        vocab.len(),
        out.rounds,
        start.elapsed().as_secs_f64()
    ))
}

/// Longest configured suffix `d` with `host == d` or `host` ending in `.d`.
fn suffix_oracle<'a>(suffixes: &'a [(String, usize)], host: &str) -> Option<&'a (String, usize)> {
    suffixes
        .iter()
        .filter(|(d, _)| host == d || host.ends_with(&format!(".{d}")))
        .max_by_key(|(d, _)| d.len())
}

fn c6_entities() -> Outcome {
    let repo = entities::bundled();
    let cat = |u: &str| repo.match_entity(u).map(|(_, c)| c);
    ensure(
        cat("https://www.google-analytics.com/analytics.js") == Some(Category::Analytics),
        || "google-analytics is not analytics".into(),
    )?;
    ensure(
        cat("https://securepubads.g.doubleclick.net/tag/js/gpt.js") == Some(Category::Advertising),
        || "doubleclick is not advertising".into(),
    )?;
    ensure(
        cat("https://unknown-domain-xyz.example/a.js").is_none(),
        || "unknown domain matched".into(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let labels = ["a", "b", "ab", "ba", "cdn", "x-y", "com", "net", "io"];
    let label = |rng: &mut ChaCha8Rng| labels.choose(rng).unwrap().to_string();
    let mut suffixes: Vec<(String, usize)> = Vec::new();
    let mut seen = BTreeSet::new();
    while suffixes.len() < 40 {
        let n = rng.random_range(1..=3);
        let d: Vec<String> = (0..n).map(|_| label(&mut rng)).collect();
        let d = d.join(".");
        if seen.insert(d.clone()) {
            suffixes.push((d, suffixes.len()));
        }
    }
    let records = suffixes
        .iter()
        .map(|(d, i)| EntityRecord {
            name: format!("e{i}"),
            domains: vec![d.clone()],
            category: Category::ALL[i % Category::COUNT].as_str().to_string(),
        })
        .collect();
    let synthetic = EntityRepository::from_records(records).map_err(|e| e.to_string())?;
    let mut matched = 0;
    for case in 0..ENTITY_ORACLE_CASES {
        let n = rng.random_range(1..=5);
        let mut parts: Vec<String> = (0..n).map(|_| label(&mut rng)).collect();
        // Glue the first label onto a neighbour to probe partial-label hits
        // such as "xab" against suffix "ab".
        if n > 1 && rng.random_bool(0.3) {
            let glued = format!("{}{}", parts[0], parts[1]);
            parts.splice(0..2, [glued]);
        }
        let host = parts.join(".");
        let want = suffix_oracle(&suffixes, &host).map(|(_, i)| format!("e{i}"));
        let got = synthetic.match_host(&host).map(|e| e.name.clone());
        ensure(got == want, || {
            format!("case {case}: {host} matched {got:?}, oracle {want:?}")
        })?;
        matched += usize::from(got.is_some());
    }
    Ok(format!(
        "bundled lookups correct; {ENTITY_ORACLE_CASES} randomized hosts agree with the suffix oracle ({matched} matches)"
    ))
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime")
}

fn c7_news_page() -> Outcome {
    let start = Instant::now();
    runtime().block_on(async {
        let site = FixtureSite::news_page();
        let server = FixtureServer::start_site(&site).await.map_err(|e| e.to_string())?;
        let base = server.base_url();
        let store = LabelStore::in_memory(1 << 20).map_err(|e| e.to_string())?;
        for e in site.labels(&base, 1_700_000_000) {
            store.put(e).map_err(|e| e.to_string())?;
        }
        let cfg = ProxyConfig {
            listen: "127.0.0.1:0".parse().unwrap(),
            admin_listen: None,
            policy: Policy::default(),
            mitm_ca: None,
            upstream_ca: None,
        };
        let proxy = start_proxy(cfg, Arc::new(store)).await.map_err(|e| e.to_string())?;
        let report = bench(&site.page_url(&base), &proxy.url()).await.map_err(|e| e.to_string())?;
        proxy.shutdown().await;
        ensure(report.script_requests == NEWS_PAGE_SCRIPTS, || {
            format!("{} script requests", report.script_requests)
        })?;
        ensure(report.scripts_fetched == NEWS_PAGE_FETCHED, || {
            format!("{} scripts fetched, expected {NEWS_PAGE_FETCHED}", report.scripts_fetched)
        })?;
        ensure(report.requests_blocked == NEWS_PAGE_SCRIPTS - NEWS_PAGE_FETCHED, || {
            format!("{} stubbed", report.requests_blocked)
        })?;
        // Upstream saw only the five critical scripts from the proxied run.
        for s in &site.scripts {
            let expected = if s.is_noncritical_by_default() { 1 } else { 2 };
            ensure(server.hits_for(&s.path) == expected, || format!("{} hit {} times", s.path, server.hits_for(&s.path)))?;
        }
        let target = site.noncritical_bytes() as f64;
        let rel = (report.bytes_saved as f64 - target).abs() / target;
        ensure(rel <= BYTES_SAVED_TOLERANCE, || {
            format!("bytes_saved {} is {:.2}% off {target}", report.bytes_saved, rel * 100.0)
        })?;
        within_budget(start.elapsed(), NEWS_PAGE_BUDGET)?;
        Ok(format!(
            "{NEWS_PAGE_SCRIPTS} → {} script fetches, {} stubbed; bytes_saved {} within {:.3}% of {} (tolerance {:.0}%)",
            report.scripts_fetched,
            report.requests_blocked,
            report.bytes_saved,
            rel * 100.0,
            site.noncritical_bytes(),
            BYTES_SAVED_TOLERANCE * 100.0
        ))
    })
}

fn random_entry(rng: &mut ChaCha8Rng) -> LabelEntry {
    let domain = format!("d{}.example", rng.random_range(0..20));
    let key = format!("https://{domain}/s{}.js", rng.random_range(0..400));
    let label = if rng.random_bool(0.1) {
        Label::Unassigned
    } else {
        Label::Assigned(Category::ALL[rng.random_range(0..Category::COUNT)])
    };
    let padding = "p".repeat(rng.random_range(0..200));
    LabelEntry::new(
        format!("{key}?{padding}"),
        domain,
        label,
        rng.random_range(0.0..=1.0),
        rng.random_range(1..1_000_000),
    )
}

fn same_label(a: &LabelEntry, b: &LabelEntry) -> bool {
    a.key == b.key
        && a.domain == b.domain
        && a.label == b.label
        && a.confidence == b.confidence
        && a.labeled_at == b.labeled_at
}

fn c8_store() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let capacity = 16 * 1024;
    let store = LabelStore::in_memory(capacity).map_err(|e| e.to_string())?;
    let mut evictions = 0;
    let mut snapshot_checks = 0;
    for op in 0..STORE_OPS {
        match rng.random_range(0..10) {
            0..=5 => {
                let e = random_entry(&mut rng);
                evictions += store.put(e.clone()).map_err(|e| e.to_string())?.len();
                let back = store
                    .get(&e.key)
                    .ok_or_else(|| format!("op {op}: {} missing right after put", e.key))?;
                ensure(!back.inferred && same_label(&back.entry, &e), || {
                    format!("op {op}: get after put returned {:?}", back.entry)
                })?;
            }
            6..=7 => {
                let e = random_entry(&mut rng);
                if let Some(l) = store.get(&e.key) {
                    ensure(l.inferred || l.entry.key == e.key, || {
                        format!("op {op}: wrong key")
                    })?;
                }
            }
            _ => {
                let a = rng.random_range(0..1_000_000);
                let b = rng.random_range(a..=1_000_000);
                let older = store.snapshot_since(a);
                let newer = store.snapshot_since(b);
                let older_keys: BTreeSet<&str> = older.iter().map(|e| e.key.as_str()).collect();
                ensure(
                    newer.iter().all(|e| older_keys.contains(e.key.as_str())),
                    || format!("op {op}: snapshot_since({b}) not contained in snapshot_since({a})"),
                )?;
                ensure(older.iter().all(|e| e.labeled_at > a), || {
                    format!("op {op}: stale entry")
                })?;
                snapshot_checks += 1;
            }
        }
        ensure(store.bytes_used() <= capacity, || {
            format!(
                "op {op}: {} bytes used > capacity {capacity}",
                store.bytes_used()
            )
        })?;
    }
    for i in 0..STORE_OPS {
        let mut policy = Policy::allow_all();
        for c in Category::ALL {
            if rng.random_bool(0.5) {
                policy.noncritical.insert(c);
            }
            if rng.random_bool(0.2) {
                policy
                    .add_override("https://news.example", c)
                    .map_err(|e| e.to_string())?;
            }
        }
        let page = [
            "https://news.example/a",
            "https://other.example/",
            "not a url",
        ]
        .choose(&mut rng)
        .copied();
        let page = if rng.random_bool(0.2) { None } else { page };
        ensure(
            decide_criticality(Label::Unassigned, &policy, page) == Criticality::Critical,
            || format!("policy #{i} made Unassigned non-critical"),
        )?;
    }
    Ok(format!(
        "{STORE_OPS} ops: capacity {capacity} B never exceeded ({evictions} evictions), get∘put identity, {snapshot_checks} monotone snapshots; Unassigned critical under {STORE_OPS} random policies"
    ))
}

/// A label source that always fails.
struct Broken;

impl LabelSource for Broken {
    fn lookup(&self, _key: &str) -> jsgate_core::Result<Option<Lookup>> {
        Err(jsgate_core::Error::Store("rigged to fail".into()))
    }
}

fn c9_fail_open() -> Outcome {
    runtime().block_on(async {
        let site = FixtureSite::news_page();
        let server = FixtureServer::start_site(&site).await.map_err(|e| e.to_string())?;
        let base = server.base_url();
        let cfg = ProxyConfig {
            listen: "127.0.0.1:0".parse().unwrap(),
            admin_listen: None,
            policy: Policy::default(),
            mitm_ca: None,
            upstream_ca: None,
        };
        let proxy = start_proxy(cfg, Arc::new(Broken)).await.map_err(|e| e.to_string())?;
        let direct = reqwest::Client::builder().no_proxy().build().map_err(|e| e.to_string())?;
        let through = reqwest::Client::builder()
            .proxy(reqwest::Proxy::http(proxy.url()).map_err(|e| e.to_string())?)
            .build()
            .map_err(|e| e.to_string())?;
        let page = site.page_url(&base);
        let mut paths: Vec<String> = site.scripts.iter().map(|s| s.path.clone()).collect();
        paths.push(jsgate_core::fixture::PAGE_PATH.to_string());
        paths.push("/missing.js".to_string());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..FAIL_OPEN_REQUESTS {
            let url = base.join(paths.choose(&mut rng).unwrap()).unwrap();
            let head = rng.random_bool(0.2);
            let dest = rng.random_bool(0.7);
            let build = |c: &reqwest::Client| {
                let mut r = if head { c.head(url.clone()) } else { c.get(url.clone()) };
                if dest {
                    r = r.header("sec-fetch-dest", "script");
                }
                r.header("referer", page.as_str())
            };
            let a = build(&direct).send().await.map_err(|e| e.to_string())?;
            let b = build(&through).send().await.map_err(|e| e.to_string())?;
            let headers = |r: &reqwest::Response| {
                r.headers()
                    .iter()
                    .filter(|(k, _)| k.as_str() != "date")
                    .map(|(k, v)| (k.to_string(), v.as_bytes().to_vec()))
                    .collect::<Vec<_>>()
            };
            ensure(a.status() == b.status(), || format!("request {i} {url}: status differs"))?;
            ensure(headers(&a) == headers(&b), || format!("request {i} {url}: headers differ"))?;
            ensure(b.headers().get(BLOCKED_HEADER).is_none(), || format!("request {i} {url}: stubbed"))?;
            let (a, b) = (a.bytes().await.map_err(|e| e.to_string())?, b.bytes().await.map_err(|e| e.to_string())?);
            ensure(a == b, || format!("request {i} {url}: body differs"))?;
        }
        let t = proxy.telemetry();
        proxy.shutdown().await;
        ensure(t.requests_blocked == 0, || format!("{} blocked", t.requests_blocked))?;
        Ok(format!(
            "{FAIL_OPEN_REQUESTS} requests identical to direct (status, headers, body); {} lookup errors, 0 blocked",
            t.lookup_errors
        ))
    })
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("confidence gate", c1_gate),
        ("gradient check", c2_gradient_check),
        ("softmax / cross-entropy", c3_softmax_cross_entropy),
        ("synthetic classification", c4_synthetic_classification),
        ("feature elimination", c5_rfe),
        ("entity matching", c6_entities),
        ("23-script fixture page", c7_news_page),
        ("label store properties", c8_store),
        ("fail-open proxy", c9_fail_open),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
