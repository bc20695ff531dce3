//! Pre-tagged documents and their per-field TF-IDF representation.
//!
//! Each field (entity, location, keyword, date) is treated as its own
//! pseudo-corpus: the projection of every document onto that field. A term's
//! idf is `ln(N / df)` where `N` is the number of documents in the whole
//! corpus, so idf values are comparable across fields. A document's field
//! vector is its tf-idf vector renormalized to sum to one; the four field
//! vectors are concatenated in entity, location, keyword, date order.

use std::collections::{BTreeMap, HashMap, HashSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{AemError, Field, Result};

/// Corpora larger than this default to a document-frequency floor of 3.
pub const LARGE_CORPUS_DOCS: usize = 5_000;

/// A pre-tagged document: one token list per event field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub id: String,
    pub entities: Vec<String>,
    pub locations: Vec<String>,
    pub keywords: Vec<String>,
    pub dates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_event: Option<String>,
}

impl DocumentRecord {
    pub fn tokens(&self, field: Field) -> &[String] {
        match field {
            Field::Entity => &self.entities,
            Field::Location => &self.locations,
            Field::Keyword => &self.keywords,
            Field::Date => &self.dates,
        }
    }

    pub fn tokens_mut(&mut self, field: Field) -> &mut Vec<String> {
        match field {
            Field::Entity => &mut self.entities,
            Field::Location => &mut self.locations,
            Field::Keyword => &mut self.keywords,
            Field::Date => &mut self.dates,
        }
    }

    /// Tokens must be non-empty and free of tabs and line breaks, which the
    /// text sidecars use as separators.
    pub fn validate(&self) -> Result<()> {
        for field in Field::ALL {
            for token in self.tokens(field) {
                if token.is_empty() {
                    return Err(AemError::config(format!(
                        "document {:?}: empty token in {}",
                        self.id, field
                    )));
                }
                if token.contains(['\t', '\n', '\r']) {
                    return Err(AemError::config(format!(
                        "document {:?}: token {:?} in {} contains a tab or line break",
                        self.id, token, field
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Document-frequency floor used when the caller does not choose one.
pub fn default_min_df(corpus_size: usize) -> usize {
    if corpus_size > LARGE_CORPUS_DOCS {
        3
    } else {
        1
    }
}

/// Terms of one field with their document frequencies and idf weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVocabulary {
    pub field: Field,
    /// Sorted lexicographically; position is the vector dimension.
    pub terms: Vec<String>,
    pub document_frequency: Vec<usize>,
    pub corpus_size: usize,
    pub idf: Vec<f64>,
    index: HashMap<String, usize>,
}

impl FieldVocabulary {
    pub fn from_parts(
        field: Field,
        terms: Vec<String>,
        document_frequency: Vec<usize>,
        corpus_size: usize,
        idf: Vec<f64>,
    ) -> Result<Self> {
        if terms.len() != document_frequency.len() || terms.len() != idf.len() {
            return Err(AemError::config(format!(
                "{field} vocabulary: {} terms, {} frequencies, {} idf values",
                terms.len(),
                document_frequency.len(),
                idf.len()
            )));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), i).is_some() {
                return Err(AemError::config(format!(
                    "{field} vocabulary: duplicate term {term:?}"
                )));
            }
        }
        Ok(FieldVocabulary {
            field,
            terms,
            document_frequency,
            corpus_size,
            idf,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// The four field vocabularies of a corpus, in field order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabularies {
    pub fields: [FieldVocabulary; 4],
}

impl Vocabularies {
    pub fn get(&self, field: Field) -> &FieldVocabulary {
        &self.fields[field.index()]
    }

    pub fn field_sizes(&self) -> [usize; 4] {
        [
            self.fields[0].len(),
            self.fields[1].len(),
            self.fields[2].len(),
            self.fields[3].len(),
        ]
    }

    /// Total dimension `V = V_e + V_l + V_k + V_d`.
    pub fn dimension(&self) -> usize {
        self.field_sizes().iter().sum()
    }

    /// Fields whose vocabulary ended up empty after pruning.
    pub fn empty_fields(&self) -> Vec<Field> {
        Field::ALL
            .into_iter()
            .filter(|f| self.get(*f).is_empty())
            .collect()
    }

    /// Offset of each field block inside the concatenated vector.
    pub fn offsets(&self) -> [usize; 4] {
        block_offsets(self.field_sizes())
    }
}

pub(crate) fn block_offsets(sizes: [usize; 4]) -> [usize; 4] {
    let mut offsets = [0; 4];
    for i in 1..4 {
        offsets[i] = offsets[i - 1] + sizes[i - 1];
    }
    offsets
}

/// Builds one vocabulary per field. Document frequencies are counted on the
/// raw pseudo-corpus; terms below `min_df` are pruned afterwards.
pub fn build_vocabularies(corpus: &[DocumentRecord], min_df: usize) -> Result<Vocabularies> {
    if corpus.is_empty() {
        return Err(AemError::config("cannot build vocabularies from an empty corpus"));
    }
    if min_df == 0 {
        return Err(AemError::config("min_df must be at least 1"));
    }
    let mut seen_ids = HashSet::with_capacity(corpus.len());
    for doc in corpus {
        doc.validate()?;
        if !seen_ids.insert(doc.id.as_str()) {
            return Err(AemError::config(format!("duplicate document id {:?}", doc.id)));
        }
    }

    let corpus_size = corpus.len();
    let build = |field: Field| -> Result<FieldVocabulary> {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let distinct: HashSet<&str> = doc.tokens(field).iter().map(String::as_str).collect();
            for term in distinct {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let mut terms = Vec::new();
        let mut freqs = Vec::new();
        let mut idf = Vec::new();
        for (term, count) in df {
            if count >= min_df {
                terms.push(term.to_string());
                freqs.push(count);
                idf.push((corpus_size as f64 / count as f64).ln());
            }
        }
        FieldVocabulary::from_parts(field, terms, freqs, corpus_size, idf)
    };

    Ok(Vocabularies {
        fields: [
            build(Field::Entity)?,
            build(Field::Location)?,
            build(Field::Keyword)?,
            build(Field::Date)?,
        ],
    })
}

/// A document as four normalized field distributions plus their concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub blocks: [Vec<f64>; 4],
    pub concat: Vec<f64>,
}

impl DocVector {
    pub fn block(&self, field: Field) -> &[f64] {
        &self.blocks[field.index()]
    }
}

fn represent_field(tokens: &[String], vocab: &FieldVocabulary) -> Vec<f64> {
    let mut counts = vec![0.0; vocab.len()];
    for token in tokens {
        if let Some(i) = vocab.position(token) {
            counts[i] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    if total == 0.0 {
        return counts;
    }
    let tf: Vec<f64> = counts.iter().map(|c| c / total).collect();
    let weighted: Vec<f64> = tf.iter().zip(&vocab.idf).map(|(t, w)| t * w).collect();
    let mass: f64 = weighted.iter().sum();
    if mass > 0.0 {
        weighted.into_iter().map(|w| w / mass).collect()
    } else {
        // every retained term has idf 0
        tf
    }
}

/// Represents one document under fixed vocabularies. Out-of-vocabulary
/// tokens are ignored and a field with no in-vocabulary token is all zeros.
pub fn represent_document(doc: &DocumentRecord, vocabs: &Vocabularies) -> DocVector {
    let blocks = Field::ALL.map(|f| represent_field(doc.tokens(f), vocabs.get(f)));
    let concat = blocks.iter().flatten().copied().collect();
    DocVector { blocks, concat }
}

/// Row-major document matrix: row `i` is the concatenated vector of record `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DocMatrix {
    pub ids: Vec<String>,
    pub vectors: Array2<f64>,
    pub field_sizes: [usize; 4],
}

impl DocMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.vectors.ncols()
    }
}

pub fn represent_corpus(corpus: &[DocumentRecord], vocabs: &Vocabularies) -> DocMatrix {
    let dim = vocabs.dimension();
    let mut vectors = Array2::zeros((corpus.len(), dim));
    for (mut row, doc) in vectors.rows_mut().into_iter().zip(corpus) {
        let v = represent_document(doc, vocabs);
        for (dst, src) in row.iter_mut().zip(v.concat) {
            *dst = src;
        }
    }
    DocMatrix {
        ids: corpus.iter().map(|d| d.id.clone()).collect(),
        vectors,
        field_sizes: vocabs.field_sizes(),
    }
}
