use std::collections::BTreeSet;

use super::hungarian::max_weight_assignment;
use crate::corpus::Vocabularies;
use crate::events::{jaccard, EventTable};
use crate::{AemError, Result};

/// Predicted terms per field that are compared with gold term sets.
pub const MATCH_TOP_TERMS: usize = 10;
/// Mean per-field Jaccard at or above which a matched event counts as correct.
pub const DEFAULT_CORRECT_THRESHOLD: f64 = 0.3;

/// Reference term sets of one true event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEvent {
    pub name: String,
    pub terms: [Vec<String>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub predicted: usize,
    pub gold: usize,
    pub similarity: f64,
    pub correct: bool,
}

/// One-to-one pairing of predicted and gold events.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub threshold: f64,
}

impl Matching {
    pub fn correct_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.correct).count()
    }

    pub fn total_similarity(&self) -> f64 {
        self.pairs.iter().map(|p| p.similarity).sum()
    }
}

/// Mean Jaccard over the fields for which the gold event lists terms.
/// Only the first [`MATCH_TOP_TERMS`] predicted terms of each field count.
pub fn similarity(predicted: &[Vec<String>; 4], gold: &GoldEvent) -> f64 {
    let mut total = 0.0;
    let mut fields = 0;
    for (p, g) in predicted.iter().zip(&gold.terms) {
        if g.is_empty() {
            continue;
        }
        let p: BTreeSet<&str> = p.iter().take(MATCH_TOP_TERMS).map(String::as_str).collect();
        let g: BTreeSet<&str> = g.iter().map(String::as_str).collect();
        total += jaccard(&p, &g);
        fields += 1;
    }
    if fields == 0 {
        0.0
    } else {
        total / fields as f64
    }
}

/// Top-10 terms per field of every event in the table.
pub fn predicted_terms(table: &EventTable, vocabs: &Vocabularies) -> Vec<[Vec<String>; 4]> {
    table
        .events
        .iter()
        .map(|e| e.top_terms(vocabs, MATCH_TOP_TERMS))
        .collect()
}

/// Optimal one-to-one matching maximizing total similarity.
pub fn match_events(predicted: &[[Vec<String>; 4]], gold: &[GoldEvent], threshold: f64) -> Result<Matching> {
    if gold.is_empty() {
        return Err(AemError::config("gold event set is empty"));
    }
    if let Some(g) = gold.iter().find(|g| g.terms.iter().all(Vec::is_empty)) {
        return Err(AemError::config(format!("gold event {:?} lists no terms", g.name)));
    }
    let weights: Vec<Vec<f64>> = predicted
        .iter()
        .map(|p| gold.iter().map(|g| similarity(p, g)).collect())
        .collect();
    let pairs = max_weight_assignment(&weights)
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| {
            j.map(|j| MatchedPair {
                predicted: i,
                gold: j,
                similarity: weights[i][j],
                correct: weights[i][j] >= threshold,
            })
        })
        .collect();
    Ok(Matching { pairs, threshold })
}
