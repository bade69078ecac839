//! `jsgate`: one entry point for the pipeline. Every subcommand prints one
//! JSON line with its result on stdout; failures print `{"error": ...}` on
//! stderr and exit 1. Usage errors exit 2.

mod net_cmds;
mod offline_cmds;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jsgate_core::Category;
use url::Url;

#[derive(Parser)]
#[command(
    name = "jsgate",
    version,
    about = "Classify JavaScript by purpose and block non-critical scripts"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Feature extraction over the API catalog.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Crawl pages into a script corpus and turn it into a labeled dataset.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Recursive feature elimination down to a smaller vocabulary.
    Rfe(RfeArgs),
    /// Train the classifier on a labeled dataset.
    Train(TrainArgs),
    /// Precision/recall/F1 of a model on a labeled dataset.
    Eval(EvalArgs),
    /// Classify one script file.
    Classify(ClassifyArgs),
    /// Import or export label snapshots.
    #[command(subcommand)]
    Labels(LabelsCmd),
    /// Run the label service.
    Serve(ServeArgs),
    /// Run the blocking forward proxy.
    Proxy(ProxyArgs),
    /// Compare a page loaded directly and through the proxy.
    Bench(BenchArgs),
    /// Generate an interception CA for `proxy --mitm-ca`.
    #[cfg(feature = "mitm")]
    Ca(CaArgs),
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// Count catalog API names in script files (feature-matrix JSONL).
    Extract(ExtractArgs),
    /// Write the bundled API catalog.
    Catalog(CatalogArgs),
}

#[derive(Args)]
struct CatalogOpt {
    /// API catalog file (one name per line); defaults to the bundled catalog.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[command(flatten)]
    catalog: CatalogOpt,
    /// Label to attach to every row.
    #[arg(long)]
    label: Option<Category>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Fetch pages and their scripts into a corpus directory.
    Crawl(CrawlArgs),
    /// Label a corpus by entity match and write the feature matrix.
    Build(BuildArgs),
}

#[derive(Args)]
struct CrawlArgs {
    /// Page list: one URL per line, `#` comments.
    #[arg(long)]
    pages: PathBuf,
    /// Corpus directory (created if missing; the index is appended to).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Entities file; defaults to the bundled snapshot.
    #[arg(long)]
    entities: Option<PathBuf>,
    #[command(flatten)]
    catalog: CatalogOpt,
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the unmatched scripts' index entries here (JSONL).
    #[arg(long)]
    unlabeled: Option<PathBuf>,
}

#[derive(Args)]
struct RfeArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Vocabulary the dataset was extracted with.
    #[command(flatten)]
    catalog: CatalogOpt,
    #[arg(long, default_value_t = jsgate_core::rfe::DEFAULT_TARGET_K)]
    target_k: usize,
    /// Remove this many features per round (overrides --step-fraction).
    #[arg(long)]
    step: Option<usize>,
    /// Remove this fraction of the remaining features per round.
    #[arg(long, default_value_t = 0.05)]
    step_fraction: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    /// Selected vocabulary, in catalog format.
    #[arg(long, short)]
    out: PathBuf,
    /// Eliminated features, worst first, one per line.
    #[arg(long)]
    order: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Vocabulary the dataset was extracted with.
    #[command(flatten)]
    catalog: CatalogOpt,
    /// Train on this sub-vocabulary (e.g. the output of `rfe`).
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    /// Epochs without validation improvement before stopping (0: never).
    #[arg(long, default_value_t = 10)]
    patience: usize,
    /// Fraction of each category held out for validation.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_values_t = jsgate_core::classifier::DEFAULT_HIDDEN)]
    hidden: Vec<usize>,
    /// Confidence threshold stored in the model file.
    #[arg(long, default_value_t = jsgate_core::classifier::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Vocabulary the dataset was extracted with, when it differs from the
    /// model's.
    #[command(flatten)]
    catalog: CatalogOpt,
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    file: PathBuf,
    /// Overrides the model's default threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum LabelsCmd {
    /// Write a store's labels as snapshot JSONL.
    Export(LabelsExportArgs),
    /// Add snapshot JSONL lines to a store.
    Import(LabelsImportArgs),
}

#[derive(Args)]
struct StoreOpt {
    /// Store file (created if missing).
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value_t = jsgate_core::store::DEFAULT_CAPACITY_BYTES)]
    capacity_bytes: u64,
}

#[derive(Args)]
struct LabelsExportArgs {
    #[command(flatten)]
    store: StoreOpt,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelsImportArgs {
    #[command(flatten)]
    store: StoreOpt,
    #[arg(long)]
    file: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long)]
    model: PathBuf,
    /// Store file; in memory when absent.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value_t = jsgate_core::store::DEFAULT_CAPACITY_BYTES)]
    capacity_bytes: u64,
    /// Page list to crawl on start and every --refresh-secs.
    #[arg(long)]
    pages: Option<PathBuf>,
    #[arg(long, default_value_t = 86_400)]
    refresh_secs: u64,
    /// Answer POST /v1/classify for scripts missing from clients' caches.
    #[arg(long)]
    allow_miss_classification: bool,
}

#[derive(Args)]
struct ProxyArgs {
    #[arg(long, default_value = "127.0.0.1:8081")]
    listen: SocketAddr,
    /// Address for GET /telemetry.
    #[arg(long)]
    admin_listen: Option<SocketAddr>,
    /// Store file; in memory when absent.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value_t = jsgate_core::store::DEFAULT_CAPACITY_BYTES)]
    capacity_bytes: u64,
    /// Snapshot JSONL to import at startup.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Policy JSON; defaults to blocking advertising and analytics.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// PEM file with the interception CA certificate and key.
    #[arg(long)]
    mitm_ca: Option<PathBuf>,
    /// Extra PEM roots trusted for intercepted upstream connections.
    #[arg(long, requires = "mitm_ca")]
    upstream_ca: Option<PathBuf>,
    /// Label service to pull labels from.
    #[arg(long)]
    sync: Option<Url>,
    #[arg(long, default_value_t = 300)]
    sync_secs: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Page to load.
    #[arg(long, required_unless_present = "fixture", requires = "proxy")]
    page: Option<Url>,
    /// Proxy URL, e.g. http://127.0.0.1:8081.
    #[arg(long)]
    proxy: Option<String>,
    /// Run against the bundled 23-script fixture with an in-process proxy.
    #[arg(long, conflicts_with_all = ["page", "proxy"])]
    fixture: bool,
    /// Policy for the in-process proxy of --fixture.
    #[arg(long, requires = "fixture")]
    policy: Option<PathBuf>,
}

#[cfg(feature = "mitm")]
#[derive(Args)]
struct CaArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value = "jsgate interception CA")]
    name: String,
}

/// Log to stderr; `RUST_LOG` takes `level` or `target=level` directives
/// separated by commas (default `info`).
fn init_logging() {
    use tracing_subscriber::prelude::*;
    let filter: tracing_subscriber::filter::Targets = std::env::var("RUST_LOG")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| "info".parse().expect("valid directive"));
    tracing_subscriber::registry()
        .with(tracing_subscriber::fmt::layer().with_writer(std::io::stderr))
        .with(filter)
        .init();
}

/// Print one JSON value as a line on stdout.
pub(crate) fn emit(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Features(FeaturesCmd::Extract(a)) => offline_cmds::extract(a),
        Command::Features(FeaturesCmd::Catalog(a)) => offline_cmds::catalog(a),
        Command::Dataset(DatasetCmd::Crawl(a)) => runtime()?.block_on(net_cmds::crawl(a)),
        Command::Dataset(DatasetCmd::Build(a)) => offline_cmds::build(a),
        Command::Rfe(a) => offline_cmds::rfe(a),
        Command::Train(a) => offline_cmds::train(a),
        Command::Eval(a) => offline_cmds::eval(a),
        Command::Classify(a) => offline_cmds::classify(a),
        Command::Labels(LabelsCmd::Export(a)) => offline_cmds::labels_export(a),
        Command::Labels(LabelsCmd::Import(a)) => offline_cmds::labels_import(a),
        Command::Serve(a) => runtime()?.block_on(net_cmds::serve(a)),
        Command::Proxy(a) => runtime()?.block_on(net_cmds::proxy(a)),
        Command::Bench(a) => runtime()?.block_on(net_cmds::bench(a)),
        #[cfg(feature = "mitm")]
        Command::Ca(a) => net_cmds::ca(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // some causes already repeat their source in their own message
            let mut msg = e.to_string();
            for cause in e.chain().skip(1).map(ToString::to_string) {
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("{}", serde_json::json!({ "error": msg }));
            ExitCode::FAILURE
        }
    }
}
