//! Scoring extracted events against gold events, plus the K-means baseline
//! and synthetic corpora with known ground truth.

mod hungarian;
mod kmeans;
mod matching;
mod metrics;
mod synthetic;
mod timing;

pub use hungarian::max_weight_assignment;
pub use kmeans::{kmeans, kmeans_events, KMeansResult, KMEANS_RESTARTS};
pub use matching::{
    match_events, predicted_terms, similarity, GoldEvent, MatchedPair, Matching, DEFAULT_CORRECT_THRESHOLD,
    MATCH_TOP_TERMS,
};
pub use metrics::{f_measure, precision_recall_f, round_half_away, EvalReport};
pub use synthetic::{generate_synthetic_corpus, SyntheticSpec};
pub use timing::{timing_harness, Method, Timing};
