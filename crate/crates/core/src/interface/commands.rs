//! The pipeline steps behind the command-line tool.
//!
//! Every command reads its inputs, takes the output directory's lock, writes
//! its artifacts and a manifest, and returns a short summary. Apart from
//! wall-clock columns and timestamps, outputs are pure functions of the
//! inputs and flags.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::formats::{
    format_assignments, format_corpus, format_doc_matrix, format_event_table, format_gold,
    format_labelled_matrix, format_report, format_vocabularies, parse_doc_matrix, parse_event_table,
    parse_gold, parse_vocabularies, read_corpus, sha256_hex,
};
use super::manifest::{unix_now, OutputLock, RunManifest};
use super::projection::{pca_2d, scatter_svg};
use crate::corpus::{build_vocabularies, default_min_df, represent_corpus, DocMatrix, Vocabularies};
use crate::evaluation::{
    generate_synthetic_corpus, kmeans, kmeans_events, match_events, precision_recall_f, predicted_terms,
    EvalReport, SyntheticSpec, DEFAULT_CORRECT_THRESHOLD, KMEANS_RESTARTS, MATCH_TOP_TERMS,
};
use crate::events::{assign_documents, decode_events, merge_and_reassign, Assignment, EventTable};
use crate::model::{export_checkpoint, import_checkpoint, Discriminator, Generator};
use crate::numerics::TensorStore;
use crate::training::{TrainConfig, Trainer};
use crate::{AemError, Result};

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const DOCS_FILE: &str = "docs.tsv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRACE_FILE: &str = "trace.tsv";
pub const EVENTS_FILE: &str = "events.txt";
pub const EVENT_TERMS_FILE: &str = "event_terms.txt";
pub const ASSIGNMENTS_FILE: &str = "assignments.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const PROJECTION_FILE: &str = "projection.tsv";
pub const SCATTER_FILE: &str = "scatter.svg";
pub const REPORT_FILE: &str = "report.tsv";
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const GOLD_FILE: &str = "gold.jsonl";

const VOCAB_HASH_KEY: &str = "vocab_sha256";
const CONFIG_KEY: &str = "train_config";

fn write(out_dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<String> {
    fs::write(out_dir.join(name), contents)?;
    Ok(name.to_string())
}

fn finish(out_dir: &Path, mut manifest: RunManifest) -> Result<PathBuf> {
    manifest.finished_unix = unix_now();
    manifest.write(out_dir)
}

/// Vocabularies and document matrix of a prepared directory, plus the hash
/// of the vocabulary file that checkpoints are tied to.
pub struct Prepared {
    pub vocabs: Vocabularies,
    pub docs: DocMatrix,
    pub vocab_sha256: String,
    pub docs_sha256: String,
}

pub fn load_prepared(dir: &Path) -> Result<Prepared> {
    let vocab_text = fs::read_to_string(dir.join(VOCAB_FILE))?;
    let docs_text = fs::read_to_string(dir.join(DOCS_FILE))?;
    let vocabs = parse_vocabularies(&vocab_text)?;
    let docs = parse_doc_matrix(&docs_text, &vocabs)?;
    Ok(Prepared {
        vocabs,
        docs,
        vocab_sha256: sha256_hex(vocab_text.as_bytes()),
        docs_sha256: sha256_hex(docs_text.as_bytes()),
    })
}

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    /// `None` picks the corpus-size default.
    pub min_df: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub documents: usize,
    pub field_sizes: [usize; 4],
    pub dimension: usize,
}

pub fn prepare(opts: &PrepareOptions) -> Result<PrepareSummary> {
    let started = unix_now();
    let bytes = fs::read(&opts.corpus)?;
    let corpus = read_corpus(&opts.corpus)?;
    let min_df = opts.min_df.unwrap_or_else(|| default_min_df(corpus.len()));
    let vocabs = build_vocabularies(&corpus, min_df)?;
    let docs = represent_corpus(&corpus, &vocabs);

    let _lock = OutputLock::acquire(&opts.out_dir)?;
    let artifacts = vec![
        write(&opts.out_dir, VOCAB_FILE, format_vocabularies(&vocabs))?,
        write(&opts.out_dir, DOCS_FILE, format_doc_matrix(&docs))?,
    ];
    finish(
        &opts.out_dir,
        RunManifest {
            command: "prepare".into(),
            config: json!({ "corpus": opts.corpus, "min_df": min_df }),
            input_sha256: sha256_hex(&bytes),
            seed: None,
            artifacts,
            started_unix: started,
            finished_unix: 0.0,
        },
    )?;
    Ok(PrepareSummary { documents: docs.len(), field_sizes: vocabs.field_sizes(), dimension: vocabs.dimension() })
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub prepared: PathBuf,
    pub out_dir: PathBuf,
    pub config: TrainConfig,
    /// Also write `checkpoints/step_<n>.ckpt` every this many generator steps.
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub g_steps: usize,
    pub d_steps: usize,
    pub stop: String,
    pub seconds: f64,
}

fn checkpoint_store(g: &Generator, d: &Discriminator, config: &TrainConfig, vocab_sha256: &str) -> TensorStore {
    let mut store = export_checkpoint(g, d);
    store.metadata.insert(VOCAB_HASH_KEY.into(), vocab_sha256.to_string());
    store
        .metadata
        .insert(CONFIG_KEY.into(), serde_json::to_string(config).expect("config serializes"));
    store
}

pub fn train(opts: &TrainOptions) -> Result<TrainSummary> {
    let started = unix_now();
    if opts.checkpoint_every == Some(0) {
        return Err(AemError::config("checkpoint interval must be positive"));
    }
    let prepared = load_prepared(&opts.prepared)?;
    let _lock = OutputLock::acquire(&opts.out_dir)?;
    let mut artifacts = Vec::new();
    let mut trainer = Trainer::new(prepared.docs.vectors.view(), opts.config.clone(), prepared.docs.field_sizes)?;
    let stop = trainer.run_with(|t| {
        if let Some(every) = opts.checkpoint_every {
            let step = t.g_steps_done();
            if step % every == 0 {
                let name = format!("checkpoints/step_{step:06}.ckpt");
                fs::create_dir_all(opts.out_dir.join("checkpoints"))?;
                checkpoint_store(&t.generator, &t.discriminator, &t.config, &prepared.vocab_sha256)
                    .save(&opts.out_dir.join(&name))?;
                artifacts.push(name);
            }
        }
        Ok(())
    })?;
    let (g, d, trace) = trainer.into_parts();
    checkpoint_store(&g, &d, &opts.config, &prepared.vocab_sha256).save(&opts.out_dir.join(CHECKPOINT_FILE))?;
    artifacts.push(CHECKPOINT_FILE.into());
    artifacts.push(write(&opts.out_dir, TRACE_FILE, trace.to_tsv())?);
    let stop = format!("{stop:?}");
    finish(
        &opts.out_dir,
        RunManifest {
            command: "train".into(),
            config: json!({
                "prepared": opts.prepared,
                "train": opts.config,
                "checkpoint_every": opts.checkpoint_every,
                "stop": stop,
            }),
            input_sha256: prepared.docs_sha256,
            seed: Some(opts.config.seed),
            artifacts,
            started_unix: started,
            finished_unix: 0.0,
        },
    )?;
    Ok(TrainSummary {
        g_steps: trace.g_steps.len(),
        d_steps: trace.d_steps.len(),
        stop,
        seconds: trace.total_seconds(),
    })
}

/// Loads a checkpoint and refuses it if it was trained on other vocabularies.
pub fn load_checkpoint(path: &Path, prepared: &Prepared) -> Result<(Generator, Discriminator)> {
    let store = TensorStore::load(path)?;
    let expected = store.meta(VOCAB_HASH_KEY)?;
    if expected != prepared.vocab_sha256 {
        return Err(AemError::config(format!(
            "checkpoint {} was trained on different vocabularies (vocab hash {expected}, prepared directory has {})",
            path.display(),
            prepared.vocab_sha256
        )));
    }
    import_checkpoint(&store)
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub checkpoint: PathBuf,
    pub prepared: PathBuf,
    pub out_dir: PathBuf,
    /// Terms per field in the display table.
    pub top_words: usize,
    /// Jaccard threshold for merging duplicate events; `None` disables merging.
    pub merge_threshold: Option<f64>,
}

fn assign(table: &EventTable, docs: &DocMatrix, merge: Option<f64>) -> Result<(EventTable, Vec<Assignment>)> {
    let mut table = table.clone();
    let assignments = assign_documents(&docs.vectors.view(), &table)?;
    table.set_support(&assignments);
    match merge {
        Some(threshold) => merge_and_reassign(&table, &docs.vectors.view(), threshold),
        None => Ok((table, assignments)),
    }
}

/// Decodes events, assigns documents and writes the event tables
/// (`top_words` terms for reading, the matching depth for evaluation).
pub fn extract(opts: &ExtractOptions) -> Result<usize> {
    let started = unix_now();
    let prepared = load_prepared(&opts.prepared)?;
    let (g, _) = load_checkpoint(&opts.checkpoint, &prepared)?;
    let (table, assignments) = assign(&decode_events(&g)?, &prepared.docs, opts.merge_threshold)?;

    let _lock = OutputLock::acquire(&opts.out_dir)?;
    let artifacts = vec![
        write(&opts.out_dir, EVENTS_FILE, format_event_table(&table, &prepared.vocabs, opts.top_words))?,
        write(&opts.out_dir, EVENT_TERMS_FILE, format_event_table(&table, &prepared.vocabs, MATCH_TOP_TERMS))?,
        write(&opts.out_dir, ASSIGNMENTS_FILE, format_assignments(&prepared.docs.ids, &assignments, &table))?,
    ];
    finish(
        &opts.out_dir,
        RunManifest {
            command: "extract".into(),
            config: json!({
                "checkpoint": opts.checkpoint,
                "prepared": opts.prepared,
                "top_words": opts.top_words,
                "merge_threshold": opts.merge_threshold,
            }),
            input_sha256: sha256_hex(&fs::read(&opts.checkpoint)?),
            seed: None,
            artifacts,
            started_unix: started,
            finished_unix: 0.0,
        },
    )?;
    Ok(table.len())
}

/// K-means baseline run by `eval` on the same prepared documents.
#[derive(Debug, Clone)]
pub struct BaselineOptions {
    pub prepared: PathBuf,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Event table written by `extract` (the evaluation-depth one).
    pub events: PathBuf,
    pub gold: PathBuf,
    pub out_dir: PathBuf,
    pub threshold: f64,
    pub label: String,
    pub baseline: Option<BaselineOptions>,
}

impl EvalOptions {
    pub fn new(events: PathBuf, gold: PathBuf, out_dir: PathBuf) -> Self {
        EvalOptions { events, gold, out_dir, threshold: DEFAULT_CORRECT_THRESHOLD, label: "AEM".into(), baseline: None }
    }
}

pub fn eval(opts: &EvalOptions) -> Result<Vec<(String, EvalReport)>> {
    let started = unix_now();
    let events_text = fs::read_to_string(&opts.events)?;
    let predicted: Vec<[Vec<String>; 4]> = parse_event_table(&events_text)?.iter().map(|e| e.term_sets()).collect();
    let gold = parse_gold(&fs::read_to_string(&opts.gold)?)?;
    let matching = match_events(&predicted, &gold, opts.threshold)?;
    let mut rows = vec![(opts.label.clone(), precision_recall_f(&matching, predicted.len(), gold.len()))];

    if let Some(b) = &opts.baseline {
        let prepared = load_prepared(&b.prepared)?;
        let result = kmeans(&prepared.docs.vectors.view(), b.k, b.seed, KMEANS_RESTARTS)?;
        let table = kmeans_events(&result, prepared.docs.field_sizes);
        let terms = predicted_terms(&table, &prepared.vocabs);
        let m = match_events(&terms, &gold, opts.threshold)?;
        rows.push((format!("K-means (k={})", b.k), precision_recall_f(&m, table.len(), gold.len())));
    }

    let _lock = OutputLock::acquire(&opts.out_dir)?;
    let artifacts = vec![write(&opts.out_dir, REPORT_FILE, format_report(&rows))?];
    finish(
        &opts.out_dir,
        RunManifest {
            command: "eval".into(),
            config: json!({
                "events": opts.events,
                "gold": opts.gold,
                "threshold": opts.threshold,
                "baseline": opts.baseline.as_ref().map(|b| json!({"prepared": b.prepared, "k": b.k, "seed": b.seed})),
            }),
            input_sha256: sha256_hex(events_text.as_bytes()),
            seed: opts.baseline.as_ref().map(|b| b.seed),
            artifacts,
            started_unix: started,
            finished_unix: 0.0,
        },
    )?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct FeaturesOptions {
    pub checkpoint: PathBuf,
    pub prepared: PathBuf,
    pub out_dir: PathBuf,
}

/// Discriminative features of every document, their PCA projection and a
/// scatter plot coloured by assigned event.
pub fn features(opts: &FeaturesOptions) -> Result<Array2<f64>> {
    let started = unix_now();
    let prepared = load_prepared(&opts.prepared)?;
    let (g, d) = load_checkpoint(&opts.checkpoint, &prepared)?;
    let feats = d.forward(&prepared.docs.vectors.view())?.features;
    let points = pca_2d(&feats.view())?;
    let table = decode_events(&g)?;
    let labels: Vec<Option<usize>> = assign_documents(&prepared.docs.vectors.view(), &table)?
        .iter()
        .map(|a| a.event.map(|e| table.events[e].index))
        .collect();

    let mut projection = String::from("doc_id\tevent\tx\ty\n");
    for ((id, label), p) in prepared.docs.ids.iter().zip(&labels).zip(points.rows()) {
        let event = label.map_or("-".to_string(), |l| l.to_string());
        projection.push_str(&format!("{id}\t{event}\t{:.16e}\t{:.16e}\n", p[0], p[1]));
    }
    let _lock = OutputLock::acquire(&opts.out_dir)?;
    let artifacts = vec![
        write(&opts.out_dir, FEATURES_FILE, format_labelled_matrix(&prepared.docs.ids, &feats.view()))?,
        write(&opts.out_dir, PROJECTION_FILE, projection)?,
        write(&opts.out_dir, SCATTER_FILE, scatter_svg(&points.view(), &labels))?,
    ];
    finish(
        &opts.out_dir,
        RunManifest {
            command: "features".into(),
            config: json!({ "checkpoint": opts.checkpoint, "prepared": opts.prepared }),
            input_sha256: sha256_hex(&fs::read(&opts.checkpoint)?),
            seed: None,
            artifacts,
            started_unix: started,
            finished_unix: 0.0,
        },
    )?;
    Ok(feats)
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub out_dir: PathBuf,
    pub true_events: usize,
    pub docs_per_event: usize,
    pub vocab_size: usize,
    pub support_size: usize,
    pub noise_rate: f64,
    pub tokens_per_field: usize,
    pub seed: u64,
}

/// Writes a synthetic corpus and its gold events.
pub fn synth(opts: &SynthOptions) -> Result<usize> {
    let started = unix_now();
    let spec = SyntheticSpec::random(
        opts.true_events,
        opts.docs_per_event,
        opts.vocab_size,
        opts.support_size,
        opts.noise_rate,
        opts.tokens_per_field,
        opts.seed,
    )?;
    let (corpus, gold) = generate_synthetic_corpus(&spec, &mut ChaCha8Rng::seed_from_u64(opts.seed))?;
    let _lock = OutputLock::acquire(&opts.out_dir)?;
    let corpus_text = format_corpus(&corpus);
    let artifacts = vec![
        write(&opts.out_dir, CORPUS_FILE, &corpus_text)?,
        write(&opts.out_dir, GOLD_FILE, format_gold(&gold))?,
    ];
    finish(
        &opts.out_dir,
        RunManifest {
            command: "synth".into(),
            config: json!({
                "true_events": opts.true_events,
                "docs_per_event": opts.docs_per_event,
                "vocab_size": opts.vocab_size,
                "support_size": opts.support_size,
                "noise_rate": opts.noise_rate,
                "tokens_per_field": opts.tokens_per_field,
            }),
            input_sha256: sha256_hex(corpus_text.as_bytes()),
            seed: Some(opts.seed),
            artifacts,
            started_unix: started,
            finished_unix: 0.0,
        },
    )?;
    Ok(corpus.len())
}
