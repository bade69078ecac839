//! Subcommands that only touch local files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use jsgate_core::catalog::{self, Vocabulary};
use jsgate_core::classifier::{
    evaluate, init_model_with_hidden, train as train_model, ModelParameters, ScriptClassifier,
    TrainConfig,
};
use jsgate_core::corpus::{build_dataset, read_corpus, IndexEntry, LabeledDataset};
use jsgate_core::entities::{self, EntityRepository};
use jsgate_core::features::{
    extract_features_bytes, read_feature_rows, write_feature_rows, FeatureRow,
};
use jsgate_core::rfe::{rfe_select_with, RfeStep, SoftmaxRanker};
use jsgate_core::store::{LabelStore, StoreConfig};
use jsgate_core::Category;
use serde_json::json;

use crate::{
    emit, BuildArgs, CatalogArgs, CatalogOpt, ClassifyArgs, EvalArgs, ExtractArgs,
    LabelsExportArgs, LabelsImportArgs, RfeArgs, StoreOpt, TrainArgs,
};

impl CatalogOpt {
    fn load(&self) -> anyhow::Result<Vocabulary> {
        match &self.catalog {
            Some(p) => Ok(catalog::load_api_catalog(p)?),
            None => Ok(catalog::bundled()),
        }
    }
}

impl StoreOpt {
    fn open(&self) -> anyhow::Result<LabelStore> {
        Ok(LabelStore::open(StoreConfig {
            capacity_bytes: self.capacity_bytes,
            path: Some(self.store.clone()),
        })?)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn per_category(counts: [usize; Category::COUNT]) -> BTreeMap<&'static str, usize> {
    Category::ALL
        .iter()
        .map(|c| (c.as_str(), counts[c.index()]))
        .collect()
}

/// Read a feature-matrix file and check it was extracted with `vocab`.
fn load_dataset(path: &Path, vocab: &Vocabulary) -> anyhow::Result<LabeledDataset> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = read_feature_rows(BufReader::new(f), path)?;
    let dataset = LabeledDataset::from_feature_rows(rows)?;
    if dataset.is_empty() {
        bail!("{} has no labeled rows", path.display());
    }
    if dataset.vocab_version != vocab.version() {
        bail!(
            "{} was extracted with vocabulary {}, but the catalog is {} (pass --catalog)",
            path.display(),
            dataset.vocab_version,
            vocab.version()
        );
    }
    Ok(dataset)
}

pub fn extract(a: ExtractArgs) -> anyhow::Result<()> {
    let vocab = a.catalog.load()?;
    let mut rows = Vec::with_capacity(a.files.len());
    for path in &a.files {
        let source = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let features = extract_features_bytes(&source, &vocab);
        rows.push(FeatureRow::new(
            path.display().to_string(),
            a.label,
            features,
        ));
    }
    match &a.out {
        Some(p) => {
            write_feature_rows(create(p)?, &rows)?;
            emit(&json!({"rows": rows.len(), "vocab_version": vocab.version(), "out": p}))
        }
        None => {
            write_feature_rows(std::io::stdout().lock(), &rows)?;
            Ok(())
        }
    }
}

pub fn catalog(a: CatalogArgs) -> anyhow::Result<()> {
    let vocab = catalog::bundled();
    match &a.out {
        Some(p) => {
            std::fs::write(p, vocab.to_catalog_text())
                .with_context(|| format!("writing {}", p.display()))?;
            emit(&json!({"names": vocab.len(), "vocab_version": vocab.version(), "out": p}))
        }
        None => {
            print!("{}", vocab.to_catalog_text());
            Ok(())
        }
    }
}

pub fn build(a: BuildArgs) -> anyhow::Result<()> {
    let vocab = a.catalog.load()?;
    let repo: EntityRepository = match &a.entities {
        Some(p) => entities::load_entities(p)?,
        None => entities::bundled(),
    };
    let records = read_corpus(&a.corpus)?;
    let built = build_dataset(&records, &repo, &vocab);
    let rows = built.dataset.to_feature_rows();
    write_feature_rows(create(&a.out)?, &rows)?;
    if let Some(p) = &a.unlabeled {
        let mut w = create(p)?;
        for r in &built.unlabeled {
            let entry = IndexEntry {
                hash: r.content_hash.clone(),
                url: r.url.clone(),
                page_url: r.page_url.clone(),
                fetched_at: r.fetched_at,
            };
            serde_json::to_writer(&mut w, &entry)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    emit(&json!({
        "scripts": records.len(),
        "duplicates": built.duplicates,
        "rows": rows.len(),
        "unlabeled": built.unlabeled.len(),
        "per_category": per_category(built.per_category),
        "vocab_version": vocab.version(),
    }))
}

pub fn rfe(a: RfeArgs) -> anyhow::Result<()> {
    let vocab = a.catalog.load()?;
    let dataset = load_dataset(&a.dataset, &vocab)?;
    let step = match a.step {
        Some(n) => RfeStep::Fixed(n),
        None => RfeStep::FractionOfRemaining(a.step_fraction),
    };
    let ranker = SoftmaxRanker {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        l2_penalty: a.l2,
    };
    let outcome = rfe_select_with(&dataset, &vocab, a.target_k, step, &ranker)?;
    std::fs::write(&a.out, outcome.vocabulary.to_catalog_text())
        .with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.order {
        let mut w = create(p)?;
        for name in &outcome.elimination_order {
            writeln!(w, "{name}")?;
        }
        w.flush()?;
    }
    emit(&json!({
        "selected": outcome.vocabulary.len(),
        "eliminated": outcome.elimination_order.len(),
        "rounds": outcome.rounds,
        "vocab_version": outcome.vocabulary.version(),
        "out": a.out,
    }))
}

pub fn train(a: TrainArgs) -> anyhow::Result<()> {
    let source_vocab = a.catalog.load()?;
    let mut dataset = load_dataset(&a.dataset, &source_vocab)?;
    let vocab = match &a.vocab {
        Some(p) => {
            let sub = catalog::load_api_catalog(p)?;
            dataset = dataset.project(&source_vocab, &sub)?;
            sub
        }
        None => source_vocab,
    };
    if !(0.0..1.0).contains(&a.holdout) {
        bail!("--holdout must be in [0, 1)");
    }
    let (train_set, validation) = if a.holdout > 0.0 {
        let (t, v) = dataset.split(a.holdout, a.seed);
        (t, (!v.is_empty()).then_some(v))
    } else {
        (dataset, None)
    };
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        l2_penalty: a.l2,
        early_stop_patience: a.patience,
    };
    let mut model = init_model_with_hidden(vocab.len(), &a.hidden, a.seed)?;
    model.vocab_version = vocab.version().to_string();
    model.vocabulary = Some(vocab.names().to_vec());
    model.threshold_default = a.threshold;
    let outcome = train_model(model, &train_set, validation.as_ref(), &cfg)?;
    outcome.model.save(&a.out)?;
    let validation_report = validation
        .as_ref()
        .map(|v| evaluate(&outcome.model, v, 0.0))
        .transpose()?;
    emit(&json!({
        "train_rows": train_set.len(),
        "validation_rows": validation.as_ref().map_or(0, LabeledDataset::len),
        "epochs_run": outcome.epochs_run,
        "best_epoch": outcome.best_epoch,
        "train_loss": outcome.loss_history.last(),
        "validation_loss": outcome.validation_history.get(outcome.best_epoch.saturating_sub(1)),
        "validation_accuracy": validation_report.as_ref().map(|r| r.accuracy),
        "validation_weighted_f1": validation_report.as_ref().map(|r| r.weighted.f1),
        "model_version": outcome.model.fingerprint(),
        "out": a.out,
    }))
}

pub fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let model = ModelParameters::load(&a.model)?;
    let classifier = ScriptClassifier::from_model(model)?;
    let model_vocab = classifier.vocabulary();
    let f = File::open(&a.dataset).with_context(|| format!("opening {}", a.dataset.display()))?;
    let dataset =
        LabeledDataset::from_feature_rows(read_feature_rows(BufReader::new(f), &a.dataset)?)?;
    let dataset = if dataset.vocab_version == model_vocab.version() {
        dataset
    } else {
        let source = a.catalog.load()?;
        if dataset.vocab_version != source.version() {
            bail!(
                "dataset vocabulary {} matches neither the model ({}) nor the catalog ({})",
                dataset.vocab_version,
                model_vocab.version(),
                source.version()
            );
        }
        dataset.project(&source, model_vocab)?
    };
    let report = evaluate(classifier.model(), &dataset, a.threshold)?;
    emit(&report)
}

pub fn classify(a: ClassifyArgs) -> anyhow::Result<()> {
    let mut classifier = ScriptClassifier::from_model(ModelParameters::load(&a.model)?)?;
    if let Some(t) = a.threshold {
        classifier = classifier.with_threshold(t)?;
    }
    let source = std::fs::read(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    emit(&classifier.classify_source(&source))
}

pub fn labels_export(a: LabelsExportArgs) -> anyhow::Result<()> {
    let store = a.store.open()?;
    let n = store.export_jsonl(&a.out)?;
    emit(&json!({"exported": n, "out": a.out}))
}

pub fn labels_import(a: LabelsImportArgs) -> anyhow::Result<()> {
    let store = a.store.open()?;
    let report = store.import_jsonl(&a.file)?;
    store.flush()?;
    emit(&json!({
        "imported": report.imported,
        "skipped": report.skipped,
        "entries": store.len(),
        "bytes_used": store.bytes_used(),
    }))
}
