//! Deterministic fixtures: a 23-script site with a hand-built marker model,
//! and seeded synthetic datasets for training and feature selection.
//!
//! The site has 18 non-critical scripts (10 analytics, 8 advertising)
//! totaling exactly 700 KiB and 5 critical scripts totaling exactly 600 KiB.
//! Each script calls the marker API of its category; padding is a block
//! comment, which the lexer skips, so file size does not affect features.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use url::Url;

use crate::catalog::{self, Vocabulary};
use crate::category::{Category, Label};
use crate::classifier::{Layer, ModelParameters, DEFAULT_THRESHOLD};
use crate::corpus::{LabeledDataset, LabeledRow};
use crate::features::FeatureVector;
use crate::store::LabelEntry;

/// One DOM API per category, called by the fixture scripts of that category.
pub const MARKERS: [(Category, &str); Category::COUNT] = [
    (Category::Advertising, "insertAdjacentHTML"),
    (Category::Analytics, "sendBeacon"),
    (Category::Social, "share"),
    (Category::Video, "canPlayType"),
    (Category::CustomerSuccess, "WebSocket"),
    (Category::Utility, "requestAnimationFrame"),
    (Category::Hosting, "fetch"),
    (Category::Content, "createElement"),
];

pub const NONCRITICAL_BYTES: usize = 700 * 1024;
pub const CRITICAL_BYTES: usize = 600 * 1024;
pub const PAGE_PATH: &str = "/index.html";

/// Logit gain per marker call in the fixture model.
const MARKER_GAIN: f64 = 4.0;

pub fn marker(category: Category) -> &'static str {
    MARKERS[category.index()].1
}

/// The eight marker names as a selection of the bundled catalog.
pub fn marker_vocabulary() -> Vocabulary {
    let names: Vec<&str> = MARKERS.iter().map(|(_, n)| *n).collect();
    catalog::bundled()
        .select(&names)
        .expect("markers are catalog names")
}

/// An `[8, 8, 8, 8]` network that maps marker counts straight to logits:
/// two identity ReLU layers, then `MARKER_GAIN` × identity into the class
/// of each marker. One marker call yields confidence e⁴/(e⁴+7) ≈ 0.886; a
/// script with no markers gets the uniform 1/8 and stays unassigned.
pub fn marker_model() -> ModelParameters {
    let vocab = marker_vocabulary();
    let k = Category::COUNT;
    let mut route = Array2::<f64>::zeros((k, k));
    for (c, name) in MARKERS {
        route[[vocab.position(name).unwrap(), c.index()]] = MARKER_GAIN;
    }
    let identity = Array2::<f64>::eye(k);
    let layer = |weights: Array2<f64>| Layer {
        weights,
        bias: Array1::zeros(k),
    };
    ModelParameters {
        layers: vec![layer(identity.clone()), layer(identity), layer(route)],
        vocab_version: vocab.version().to_string(),
        vocabulary: Some(vocab.names().to_vec()),
        threshold_default: DEFAULT_THRESHOLD,
    }
}

/// A script body of exactly `size` bytes calling `category`'s marker
/// (or nothing, when `None`).
pub fn script_body(name: &str, category: Option<Category>, size: usize) -> Vec<u8> {
    let call = match category {
        Some(Category::Analytics) => "navigator.sendBeacon('/collect', payload);".to_string(),
        Some(Category::CustomerSuccess) => {
            "var chat = new WebSocket('wss://chat.invalid/');".to_string()
        }
        Some(c) => format!("widget.{}(slot);", marker(c)),
        None => "var ready = true;".to_string(),
    };
    let mut s = format!("// {name}\n(function () {{\n  var payload = {{}}, slot = null, widget = window;\n  {call}\n}})();\n/*");
    let tail = "*/\n";
    assert!(
        s.len() + tail.len() <= size,
        "script {name} too small for {size} bytes"
    );
    let pad = size - s.len() - tail.len();
    s.extend(std::iter::repeat_n('x', pad));
    s.push_str(tail);
    debug_assert_eq!(s.len(), size);
    s.into_bytes()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureScript {
    /// Absolute path on the fixture server, e.g. `/js/analytics-03.js`.
    pub path: String,
    /// Category the marker model assigns; `None` for the marker-free script.
    pub category: Option<Category>,
    pub body: Vec<u8>,
}

impl FixtureScript {
    pub fn label(&self) -> Label {
        self.category.map_or(Label::Unassigned, Label::Assigned)
    }

    pub fn is_noncritical_by_default(&self) -> bool {
        matches!(
            self.category,
            Some(Category::Advertising | Category::Analytics)
        )
    }
}

/// A page referencing 23 external scripts.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSite {
    pub scripts: Vec<FixtureScript>,
}

/// `total` split into `n` deterministic, uneven parts that sum exactly.
fn split_sizes(total: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<usize> = (0..n).map(|_| rng.random_range(50..150)).collect();
    let sum: usize = weights.iter().sum();
    let mut sizes: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let short = total - sizes.iter().sum::<usize>();
    for s in sizes.iter_mut().take(short) {
        *s += 1;
    }
    sizes
}

impl FixtureSite {
    pub fn news_page() -> FixtureSite {
        let mut plan: Vec<(String, Option<Category>)> = Vec::new();
        for i in 0..10 {
            plan.push((format!("analytics-{i:02}"), Some(Category::Analytics)));
        }
        for i in 0..8 {
            plan.push((format!("ads-{i:02}"), Some(Category::Advertising)));
        }
        let noncritical = split_sizes(NONCRITICAL_BYTES, 18, 1);
        let critical_plan = [
            ("app", Some(Category::Content)),
            ("ui-utils", Some(Category::Utility)),
            ("player", Some(Category::Video)),
            ("support-chat", Some(Category::CustomerSuccess)),
            ("bootstrap", None),
        ];
        plan.extend(critical_plan.iter().map(|(n, c)| (n.to_string(), *c)));
        let sizes = noncritical
            .into_iter()
            .chain(split_sizes(CRITICAL_BYTES, 5, 2));
        let mut scripts: Vec<FixtureScript> = plan
            .into_iter()
            .zip(sizes)
            .map(|((name, category), size)| FixtureScript {
                path: format!("/js/{name}.js"),
                body: script_body(&name, category, size),
                category,
            })
            .collect();
        // interleave critical and non-critical references like a real page
        scripts.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
        FixtureSite { scripts }
    }

    pub fn page_html(&self) -> String {
        let mut html = String::from(
            "<!doctype html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Fixture news</title>\n",
        );
        for s in &self.scripts {
            html.push_str(&format!("<script src=\"{}\"></script>\n", s.path));
        }
        html.push_str("</head>\n<body>\n<h1>Fixture news</h1>\n<p>Static page for blocking tests.</p>\n</body>\n</html>\n");
        html
    }

    /// Response body for `path`: the page or one of its scripts.
    pub fn resource(&self, path: &str) -> Option<Vec<u8>> {
        if path == PAGE_PATH || path == "/" {
            return Some(self.page_html().into_bytes());
        }
        self.scripts
            .iter()
            .find(|s| s.path == path)
            .map(|s| s.body.clone())
    }

    pub fn script_url(&self, base: &Url, script: &FixtureScript) -> Url {
        base.join(&script.path).expect("fixture paths are valid")
    }

    pub fn page_url(&self, base: &Url) -> Url {
        base.join(PAGE_PATH).expect("fixture path is valid")
    }

    /// Store entries the marker model would produce, keyed by absolute URL
    /// under `base`.
    pub fn labels(&self, base: &Url, labeled_at: i64) -> Vec<LabelEntry> {
        let model = marker_model();
        let vocab = marker_vocabulary();
        self.scripts
            .iter()
            .map(|s| {
                let url = self.script_url(base, s);
                let x = crate::features::extract_features_bytes(&s.body, &vocab);
                let r = crate::classifier::assign_category(&model, &x, DEFAULT_THRESHOLD)
                    .expect("fixture model fits");
                LabelEntry::new(
                    url.as_str(),
                    crate::entities::host_of(&url).unwrap_or_default(),
                    r.label,
                    r.confidence,
                    labeled_at,
                )
            })
            .collect()
    }

    pub fn total_script_bytes(&self) -> usize {
        self.scripts.iter().map(|s| s.body.len()).sum()
    }

    /// Bytes of scripts in the default non-critical categories.
    pub fn noncritical_bytes(&self) -> usize {
        self.scripts
            .iter()
            .filter(|s| s.is_noncritical_by_default())
            .map(|s| s.body.len())
            .sum()
    }
}

/// Seeded 8-class dataset over `n_features` count features (`n_features ≥ 8`).
///
/// Feature `c` is the marker of class `c`: a row of class `c` has 2–5 calls
/// to it, while each other marker appears once with probability 0.1, so the
/// classes are separable but the network must learn which counts matter. The
/// remaining features are class-independent noise counts in `0..=2`.
pub fn marker_dataset(n_rows: usize, n_features: usize, seed: u64) -> (Vocabulary, LabeledDataset) {
    assert!(n_features >= Category::COUNT);
    let vocab = Vocabulary::new((0..n_features).map(|i| format!("api{i:04}")).collect())
        .expect("distinct names");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n_rows)
        .map(|i| {
            let class = i % Category::COUNT;
            let counts = (0..n_features)
                .map(|j| match j {
                    j if j == class => rng.random_range(2..=5),
                    j if j < Category::COUNT => u32::from(rng.random_bool(0.1)),
                    _ => rng.random_range(0..=2),
                })
                .collect();
            LabeledRow {
                key: format!("synthetic:{i}"),
                features: FeatureVector {
                    counts,
                    vocab_version: vocab.version().to_string(),
                },
                category: Category::ALL[class],
            }
        })
        .collect();
    (vocab.clone(), LabeledDataset::new(rows, vocab.version()))
}

/// Seeded dataset for feature selection: `n_informative + n_noise` features
/// at shuffled positions. Informative feature `c` (for `c < 8`, repeated
/// cyclically beyond that) carries 1–3 counts on its class and is otherwise
/// 0 or 1 with probability 0.2; noise features are uniform in `0..=3`.
/// Returns the informative feature names too.
pub fn rfe_dataset(
    n_rows: usize,
    n_informative: usize,
    n_noise: usize,
    seed: u64,
) -> (Vocabulary, LabeledDataset, Vec<String>) {
    let n = n_informative + n_noise;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut rng);
    let informative_pos = &positions[..n_informative];
    let vocab =
        Vocabulary::new((0..n).map(|i| format!("api{i:04}")).collect()).expect("distinct names");
    let informative = informative_pos
        .iter()
        .map(|&p| vocab.names()[p].clone())
        .collect();
    let mut owner = vec![None; n];
    for (c, &p) in informative_pos.iter().enumerate() {
        owner[p] = Some(c % Category::COUNT);
    }
    let rows = (0..n_rows)
        .map(|i| {
            let class = i % Category::COUNT;
            let counts = owner
                .iter()
                .map(|o| match o {
                    Some(c) if *c == class => rng.random_range(1..=3),
                    Some(_) => u32::from(rng.random_bool(0.2)),
                    None => rng.random_range(0..=3),
                })
                .collect();
            LabeledRow {
                key: format!("synthetic:{i}"),
                features: FeatureVector {
                    counts,
                    vocab_version: vocab.version().to_string(),
                },
                category: Category::ALL[class],
            }
        })
        .collect();
    (
        vocab.clone(),
        LabeledDataset::new(rows, vocab.version()),
        informative,
    )
}
