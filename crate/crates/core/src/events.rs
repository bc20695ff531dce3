//! Decoding a trained generator into events and assigning documents to them.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2};

use crate::corpus::{block_offsets, FieldVocabulary, Vocabularies};
use crate::model::Generator;
use crate::numerics::Mode;
use crate::{AemError, Field, Result};

/// Representative words shown per field.
pub const DEFAULT_TOP_WORDS: usize = 5;
/// Keyword list length compared when merging duplicates.
pub const MERGE_TOP_KEYWORDS: usize = 10;
pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.5;

/// One-hot generator input selecting latent event `index` out of `events`.
pub fn event_seed(index: usize, events: usize) -> Vec<f64> {
    assert!(index < events, "event index {index} out of range for {events} events");
    let mut seed = vec![0.0; events];
    seed[index] = 1.0;
    seed
}

/// A decoded event: one distribution per field.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Latent event (or cluster) index this row was decoded from.
    pub index: usize,
    pub blocks: [Vec<f64>; 4],
    /// Number of documents assigned to the event.
    pub support: usize,
}

impl Event {
    pub fn block(&self, field: Field) -> &[f64] {
        &self.blocks[field.index()]
    }

    pub fn concat(&self) -> Vec<f64> {
        self.blocks.iter().flatten().copied().collect()
    }

    /// Highest-probability terms of one field, ties broken lexicographically.
    pub fn top_words(&self, field: Field, vocab: &FieldVocabulary, n: usize) -> Vec<(String, f64)> {
        top_words(self.block(field), vocab, n)
    }

    /// Top `n` terms of every field.
    pub fn top_terms(&self, vocabs: &Vocabularies, n: usize) -> [Vec<String>; 4] {
        Field::ALL.map(|f| {
            self.top_words(f, vocabs.get(f), n)
                .into_iter()
                .map(|(t, _)| t)
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTable {
    pub events: Vec<Event>,
}

impl EventTable {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Builds a table from rows laid out like documents (four blocks).
    pub fn from_rows(rows: &ArrayView2<f64>, field_sizes: [usize; 4]) -> Self {
        let offsets = block_offsets(field_sizes);
        let events = rows
            .rows()
            .into_iter()
            .enumerate()
            .map(|(index, row)| Event {
                index,
                blocks: [0, 1, 2, 3].map(|k| row.slice(ndarray::s![offsets[k]..offsets[k] + field_sizes[k]]).to_vec()),
                support: 0,
            })
            .collect();
        EventTable { events }
    }

    /// Recounts support from an assignment.
    pub fn set_support(&mut self, assignments: &[Assignment]) {
        for e in &mut self.events {
            e.support = 0;
        }
        for a in assignments {
            if let Some(i) = a.event {
                self.events[i].support += 1;
            }
        }
    }
}

/// Feeds each one-hot seed through the generator in inference mode.
pub fn decode_events(generator: &Generator) -> Result<EventTable> {
    if !generator.has_running_stats() {
        return Err(AemError::contract(
            "generator batch-norm running statistics are unpopulated; train before decoding",
        ));
    }
    let e = generator.events();
    let seeds = Array2::from_shape_fn((e, e), |(i, j)| if i == j { 1.0 } else { 0.0 });
    let mut g = generator.clone();
    let out = g.generate(&seeds.view(), Mode::Inference)?;
    Ok(EventTable::from_rows(&out.view(), generator.field_sizes()))
}

/// Indices of the `n` largest entries, descending; equal values keep the
/// lower index first, which is lexicographic order for sorted vocabularies.
pub fn top_indices(dist: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

pub fn top_words(dist: &[f64], vocab: &FieldVocabulary, n: usize) -> Vec<(String, f64)> {
    debug_assert_eq!(dist.len(), vocab.len());
    top_indices(dist, n)
        .into_iter()
        .map(|i| (vocab.terms[i].clone(), dist[i]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    /// Position in the event table; `None` for all-zero documents.
    pub event: Option<usize>,
    pub score: f64,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Assigns each document to the event with the highest cosine similarity
/// between concatenated vectors (first event wins ties).
pub fn assign_documents(docs: &ArrayView2<f64>, table: &EventTable) -> Result<Vec<Assignment>> {
    if table.is_empty() {
        return Err(AemError::config("cannot assign documents to an empty event table"));
    }
    let concats: Vec<Vec<f64>> = table.events.iter().map(Event::concat).collect();
    if concats[0].len() != docs.ncols() {
        return Err(AemError::contract(format!(
            "documents have dimension {} but events have {}",
            docs.ncols(),
            concats[0].len()
        )));
    }
    Ok(docs
        .rows()
        .into_iter()
        .map(|row| {
            let row = row.to_vec();
            if row.iter().all(|x| *x == 0.0) {
                return Assignment { event: None, score: 0.0 };
            }
            let mut best = Assignment { event: None, score: f64::NEG_INFINITY };
            for (i, c) in concats.iter().enumerate() {
                let s = cosine(&row, c);
                if s > best.score {
                    best = Assignment { event: Some(i), score: s };
                }
            }
            best
        })
        .collect())
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn keyword_set(event: &Event) -> BTreeSet<usize> {
    top_indices(event.block(Field::Keyword), MERGE_TOP_KEYWORDS).into_iter().collect()
}

/// Greedily merges events whose top-10 keyword sets overlap by at least
/// `threshold` (Jaccard). The most similar remaining pair is merged first;
/// the event with larger support survives and absorbs the other's support.
pub fn merge_duplicate_events(table: &EventTable, threshold: f64) -> Result<EventTable> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(AemError::config(format!("merge threshold must lie in (0, 1], got {threshold}")));
    }
    let sets: Vec<BTreeSet<usize>> = table.events.iter().map(keyword_set).collect();
    let mut alive = vec![true; table.len()];
    let mut support: Vec<usize> = table.events.iter().map(|e| e.support).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..table.len() {
            for j in i + 1..table.len() {
                if !(alive[i] && alive[j]) {
                    continue;
                }
                let s = jaccard(&sets[i], &sets[j]);
                if s >= threshold && best.is_none_or(|(b, _, _)| s > b) {
                    best = Some((s, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let (keep, drop) = if support[j] > support[i] { (j, i) } else { (i, j) };
        support[keep] += support[drop];
        alive[drop] = false;
    }
    let events = table
        .events
        .iter()
        .zip(alive.iter().zip(support))
        .filter(|(_, (a, _))| **a)
        .map(|(e, (_, s))| Event { support: s, ..e.clone() })
        .collect();
    Ok(EventTable { events })
}

/// Merges duplicates, then reassigns every document to the surviving events.
pub fn merge_and_reassign(
    table: &EventTable,
    docs: &ArrayView2<f64>,
    threshold: f64,
) -> Result<(EventTable, Vec<Assignment>)> {
    let mut merged = merge_duplicate_events(table, threshold)?;
    let assignments = assign_documents(docs, &merged)?;
    merged.set_support(&assignments);
    Ok((merged, assignments))
}
