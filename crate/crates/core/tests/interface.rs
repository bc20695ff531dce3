use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use aem::interface::cli::{run, Cli};
use aem::interface::commands::{self, FeaturesOptions, ASSIGNMENTS_FILE, CHECKPOINT_FILE, DOCS_FILE, EVENTS_FILE, EVENT_TERMS_FILE, FEATURES_FILE, REPORT_FILE, SCATTER_FILE, VOCAB_FILE};
use aem::interface::{pca_2d, RunManifest};
use clap::Parser;
use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn aem(args: &[&str]) -> aem::Result<Vec<String>> {
    let mut full = vec!["aem"];
    full.extend_from_slice(args);
    run(Cli::try_parse_from(full).expect("arguments parse"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// prepare -> train -> extract -> eval -> features on the toy corpus.
fn pipeline(root: &Path) {
    let (prep, model, events, eval, feats) =
        (root.join("prep"), root.join("model"), root.join("events"), root.join("eval"), root.join("features"));
    aem(&["prepare", s(&data("toy_corpus.jsonl")), "--out", s(&prep)]).unwrap();
    aem(&[
        "train", "--prepared", s(&prep), "--out", s(&model), "--events", "5", "--hidden", "16", "--disc-hidden", "16",
        "--batch-size", "16", "--max-g-steps", "60", "--seed", "3",
    ])
    .unwrap();
    let ckpt = model.join(CHECKPOINT_FILE);
    aem(&["extract", "--checkpoint", s(&ckpt), "--prepared", s(&prep), "--out", s(&events)]).unwrap();
    let lines = aem(&[
        "eval", "--events", s(&events.join(EVENT_TERMS_FILE)), "--gold", s(&data("toy_gold.jsonl")), "--out", s(&eval),
        "--kmeans", "5", "--prepared", s(&prep),
    ])
    .unwrap();
    assert_eq!(lines.len(), 2);
    aem(&["features", "--checkpoint", s(&ckpt), "--prepared", s(&prep), "--out", s(&feats)]).unwrap();
}

#[test]
fn cli_end_to_end_is_fast_and_idempotent() {
    let start = Instant::now();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    assert!(start.elapsed().as_secs() < 60, "pipeline took {:?}", start.elapsed());
    pipeline(b.path());

    for rel in [
        format!("prep/{VOCAB_FILE}"),
        format!("prep/{DOCS_FILE}"),
        format!("model/{CHECKPOINT_FILE}"),
        format!("events/{EVENTS_FILE}"),
        format!("events/{EVENT_TERMS_FILE}"),
        format!("events/{ASSIGNMENTS_FILE}"),
        format!("eval/{REPORT_FILE}"),
        format!("features/{FEATURES_FILE}"),
    ] {
        let (x, y) = (fs::read(a.path().join(&rel)).unwrap(), fs::read(b.path().join(&rel)).unwrap());
        assert!(x == y, "{rel} differs between identical runs");
    }
    assert!(fs::read_to_string(a.path().join("features").join(SCATTER_FILE)).unwrap().starts_with("<svg"));
    let manifest = RunManifest::read(&RunManifest::path(&a.path().join("model"), "train")).unwrap();
    assert_eq!(manifest.seed, Some(3));
    assert!(manifest.artifacts.iter().any(|p| p == CHECKPOINT_FILE));
    let report = fs::read_to_string(a.path().join("eval").join(REPORT_FILE)).unwrap();
    assert!(report.starts_with("method\tP\tR\tF\n"));
}

#[test]
fn checkpoint_from_another_vocabulary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    aem(&["prepare", s(&data("toy_corpus.jsonl")), "--out", s(&root.join("prep"))]).unwrap();
    aem(&[
        "train", "--prepared", s(&root.join("prep")), "--out", s(&root.join("model")), "--events", "3", "--hidden",
        "8", "--disc-hidden", "8", "--batch-size", "8", "--max-g-steps", "3",
    ])
    .unwrap();
    aem(&["synth", "--out", s(&root.join("synth")), "--true-events", "3", "--docs-per-event", "10"]).unwrap();
    aem(&["prepare", s(&root.join("synth").join("corpus.jsonl")), "--out", s(&root.join("other"))]).unwrap();
    let err = aem(&[
        "extract", "--checkpoint", s(&root.join("model").join(CHECKPOINT_FILE)), "--prepared", s(&root.join("other")),
        "--out", s(&root.join("events")),
    ])
    .unwrap_err();
    assert!(err.to_string().contains("different vocabularies"), "{err}");
}

#[test]
fn malformed_corpus_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    fs::write(&corpus, "{\"id\":\"a\",\"entities\":[],\"locations\":[],\"keywords\":[\"x\"],\"dates\":[]}\n{\"id\":\"b\"}\n")
        .unwrap();
    let err = aem(&["prepare", s(&corpus), "--out", s(&dir.path().join("out"))]).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn identical_documents_get_identical_features() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut corpus = fs::read_to_string(data("toy_corpus.jsonl")).unwrap();
    let first = corpus.lines().next().unwrap().replacen("\"id\":\"doc033\"", "\"id\":\"twin\"", 1);
    corpus.push_str(&first);
    corpus.push('\n');
    fs::write(root.join("corpus.jsonl"), corpus).unwrap();
    aem(&["prepare", s(&root.join("corpus.jsonl")), "--out", s(&root.join("prep"))]).unwrap();
    aem(&[
        "train", "--prepared", s(&root.join("prep")), "--out", s(&root.join("model")), "--events", "3", "--hidden",
        "8", "--disc-hidden", "8", "--batch-size", "8", "--max-g-steps", "5",
    ])
    .unwrap();
    let f = commands::features(&FeaturesOptions {
        checkpoint: root.join("model").join(CHECKPOINT_FILE),
        prepared: root.join("prep"),
        out_dir: root.join("features"),
    })
    .unwrap();
    let ids = fs::read_to_string(root.join("prep").join(DOCS_FILE)).unwrap();
    let position = |id: &str| ids.lines().position(|l| l.split('\t').next() == Some(id)).unwrap();
    assert_eq!(f.row(position("doc033")), f.row(position("twin")));
}

fn distances(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt())
}

/// Points on a 2-D plane embedded in 6-D keep their pairwise distances.
#[test]
fn pca_preserves_distances_of_planar_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let basis = Array2::from_shape_fn((2, 6), |_| rng.random_range(-1.0..1.0));
    let coords = Array2::from_shape_fn((30, 2), |_| rng.random_range(-3.0..3.0));
    let offset = Array2::from_shape_fn((1, 6), |_| rng.random_range(-1.0..1.0));
    let points = coords.dot(&basis) + &offset;
    let projected = pca_2d(&points.view()).unwrap();
    let (a, b) = (distances(&points), distances(&projected));
    assert!((&a - &b).iter().all(|d| d.abs() < 1e-9));
    assert!(projected.mean_axis(Axis(0)).unwrap().iter().all(|m| m.abs() < 1e-9));
}
