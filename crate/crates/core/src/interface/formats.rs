//! Text formats of every artifact.
//!
//! All numeric text uses `{:.16e}` (17 significant digits), which round-trips
//! an `f64` exactly. Tables are tab separated with a header row.
//!
//! | artifact        | layout                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | corpus          | one JSON object per line: `id`, `entities`, `locations`, `keywords`, `dates`, optional `gold_event` |
//! | vocabulary      | `# documents<TAB>N`, then `field term df idf`                 |
//! | doc matrix      | `id v_1 … v_V`                                                |
//! | event table     | blocks of `event index support n`, four `field term p …` lines, blank line |
//! | assignments     | `doc_id event score`, `event` is `-` for unassigned documents  |
//! | features        | `doc_id f_1 … f_H`                                            |
//! | projection      | `doc_id event x y`                                            |
//! | gold            | one JSON object per line: `event` plus the four field lists   |
//! | report          | `method P R F`, percentages with one decimal                  |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{DocMatrix, DocumentRecord, FieldVocabulary, Vocabularies};
use crate::evaluation::{round_half_away, EvalReport, GoldEvent};
use crate::events::{Assignment, EventTable};
use crate::{AemError, Field, Result};

fn parse_error(line: usize, message: impl Into<String>) -> AemError {
    AemError::Parse { line, message: message.into() }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn number(line: usize, s: &str) -> Result<f64> {
    s.parse().map_err(|_| parse_error(line, format!("not a number: {s:?}")))
}

fn integer(line: usize, s: &str) -> Result<usize> {
    s.parse().map_err(|_| parse_error(line, format!("not a non-negative integer: {s:?}")))
}

/// Parses line-delimited JSON records; blank lines are skipped and line
/// numbers in errors are 1-based.
pub fn parse_corpus(text: &str) -> Result<Vec<DocumentRecord>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: DocumentRecord = serde_json::from_str(line).map_err(|e| parse_error(i + 1, e.to_string()))?;
        doc.validate().map_err(|e| parse_error(i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_corpus(path: &Path) -> Result<Vec<DocumentRecord>> {
    parse_corpus(&fs::read_to_string(path)?)
}

pub fn format_corpus(docs: &[DocumentRecord]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(doc).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn format_vocabularies(vocabs: &Vocabularies) -> String {
    let n = vocabs.get(Field::Entity).corpus_size;
    let mut out = format!("# documents\t{n}\nfield\tterm\tdf\tidf\n");
    for field in Field::ALL {
        let v = vocabs.get(field);
        for ((term, df), idf) in v.terms.iter().zip(&v.document_frequency).zip(&v.idf) {
            let _ = writeln!(out, "{field}\t{term}\t{df}\t{idf:.16e}");
        }
    }
    out
}

pub fn parse_vocabularies(text: &str) -> Result<Vocabularies> {
    let mut lines = text.lines().enumerate();
    let corpus_size = match lines.next() {
        Some((_, l)) if l.starts_with("# documents\t") => integer(1, &l["# documents\t".len()..])?,
        _ => return Err(parse_error(1, "expected `# documents<TAB>N`")),
    };
    match lines.next() {
        Some((_, "field\tterm\tdf\tidf")) => {}
        _ => return Err(parse_error(2, "expected header `field term df idf`")),
    }
    let mut parts: [(Vec<String>, Vec<usize>, Vec<f64>); 4] = Default::default();
    for (i, line) in lines {
        let n = i + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(parse_error(n, format!("expected 4 columns, found {}", cols.len())));
        }
        let field = Field::from_key(cols[0]).ok_or_else(|| parse_error(n, format!("unknown field {:?}", cols[0])))?;
        let (terms, dfs, idfs) = &mut parts[field.index()];
        if terms.last().is_some_and(|t| t.as_str() >= cols[1]) {
            return Err(parse_error(n, "terms of a field must be sorted and distinct"));
        }
        terms.push(cols[1].to_string());
        dfs.push(integer(n, cols[2])?);
        idfs.push(number(n, cols[3])?);
    }
    let mut fields = Vec::with_capacity(4);
    for (field, (terms, dfs, idfs)) in Field::ALL.into_iter().zip(parts) {
        fields.push(FieldVocabulary::from_parts(field, terms, dfs, corpus_size, idfs)?);
    }
    let fields: [FieldVocabulary; 4] = fields.try_into().expect("four fields");
    Ok(Vocabularies { fields })
}

fn write_row(out: &mut String, label: &str, values: impl IntoIterator<Item = f64>) {
    out.push_str(label);
    for v in values {
        let _ = write!(out, "\t{v:.16e}");
    }
    out.push('\n');
}

/// Rows labelled by `ids`, each value in round-trip precision.
pub fn format_labelled_matrix(ids: &[String], rows: &ArrayView2<f64>) -> String {
    let mut out = String::new();
    for (id, row) in ids.iter().zip(rows.rows()) {
        write_row(&mut out, id, row.iter().copied());
    }
    out
}

pub fn parse_labelled_matrix(text: &str) -> Result<(Vec<String>, Array2<f64>)> {
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let mut cols = line.split('\t');
        ids.push(cols.next().unwrap_or_default().to_string());
        let row: Vec<f64> = cols.map(|c| number(i + 1, c)).collect::<Result<_>>()?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(parse_error(i + 1, format!("expected {} values, found {}", width.unwrap(), row.len())));
        }
        values.extend(row);
    }
    let matrix = Array2::from_shape_vec((ids.len(), width.unwrap_or(0)), values).expect("rectangular rows");
    Ok((ids, matrix))
}

pub fn format_doc_matrix(docs: &DocMatrix) -> String {
    format_labelled_matrix(&docs.ids, &docs.vectors.view())
}

pub fn parse_doc_matrix(text: &str, vocabs: &Vocabularies) -> Result<DocMatrix> {
    let (ids, vectors) = parse_labelled_matrix(text)?;
    if !ids.is_empty() && vectors.ncols() != vocabs.dimension() {
        return Err(AemError::config(format!(
            "document matrix has {} columns but the vocabularies define {}",
            vectors.ncols(),
            vocabs.dimension()
        )));
    }
    Ok(DocMatrix { ids, vectors, field_sizes: vocabs.field_sizes() })
}

/// Writes the `n` most probable terms of every field per event.
pub fn format_event_table(table: &EventTable, vocabs: &Vocabularies, n: usize) -> String {
    let mut out = String::new();
    for event in &table.events {
        let _ = writeln!(out, "event\t{}\tsupport\t{}", event.index, event.support);
        for field in Field::ALL {
            out.push_str(field.key());
            for (term, p) in event.top_words(field, vocabs.get(field), n) {
                let _ = write!(out, "\t{term}\t{p:.16e}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// One event as read back from an event table file.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTerms {
    pub index: usize,
    pub support: usize,
    pub terms: [Vec<(String, f64)>; 4],
}

impl EventTerms {
    pub fn term_sets(&self) -> [Vec<String>; 4] {
        self.terms.clone().map(|ts| ts.into_iter().map(|(t, _)| t).collect())
    }
}

pub fn parse_event_table(text: &str) -> Result<Vec<EventTerms>> {
    let mut events = Vec::new();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty());
    while let Some((i, head)) = lines.next() {
        let cols: Vec<&str> = head.split('\t').collect();
        if cols.len() != 4 || cols[0] != "event" || cols[2] != "support" {
            return Err(parse_error(i + 1, "expected `event<TAB>index<TAB>support<TAB>n`"));
        }
        let mut terms: [Vec<(String, f64)>; 4] = Default::default();
        for field in Field::ALL {
            let (j, line) = lines
                .next()
                .ok_or_else(|| parse_error(i + 1, format!("event block ends before the {field} line")))?;
            let mut cols = line.split('\t');
            if cols.next() != Some(field.key()) {
                return Err(parse_error(j + 1, format!("expected the {field} line")));
            }
            let rest: Vec<&str> = cols.collect();
            if !rest.len().is_multiple_of(2) {
                return Err(parse_error(j + 1, "terms and probabilities must alternate"));
            }
            terms[field.index()] = rest
                .chunks(2)
                .map(|c| Ok((c[0].to_string(), number(j + 1, c[1])?)))
                .collect::<Result<_>>()?;
        }
        events.push(EventTerms { index: integer(i + 1, cols[1])?, support: integer(i + 1, cols[3])?, terms });
    }
    Ok(events)
}

pub fn format_assignments(ids: &[String], assignments: &[Assignment], table: &EventTable) -> String {
    let mut out = String::from("doc_id\tevent\tscore\n");
    for (id, a) in ids.iter().zip(assignments) {
        match a.event {
            Some(e) => {
                let _ = writeln!(out, "{id}\t{}\t{:.16e}", table.events[e].index, a.score);
            }
            None => {
                let _ = writeln!(out, "{id}\t-\t{:.16e}", a.score);
            }
        }
    }
    out
}

/// Reads assignment rows back as `(doc_id, event index)`.
pub fn parse_assignments(text: &str) -> Result<Vec<(String, Option<usize>)>> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(parse_error(i + 1, format!("expected 3 columns, found {}", cols.len())));
            }
            let event = if cols[1] == "-" { None } else { Some(integer(i + 1, cols[1])?) };
            Ok((cols[0].to_string(), event))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldRecord {
    event: String,
    entities: Vec<String>,
    locations: Vec<String>,
    keywords: Vec<String>,
    dates: Vec<String>,
}

pub fn parse_gold(text: &str) -> Result<Vec<GoldEvent>> {
    let mut gold = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: GoldRecord = serde_json::from_str(line).map_err(|e| parse_error(i + 1, e.to_string()))?;
        gold.push(GoldEvent { name: r.event, terms: [r.entities, r.locations, r.keywords, r.dates] });
    }
    Ok(gold)
}

pub fn format_gold(gold: &[GoldEvent]) -> String {
    let mut out = String::new();
    for g in gold {
        let [entities, locations, keywords, dates] = g.terms.clone();
        let r = GoldRecord { event: g.name.clone(), entities, locations, keywords, dates };
        out.push_str(&serde_json::to_string(&r).expect("gold serializes"));
        out.push('\n');
    }
    out
}

fn percent(x: f64) -> String {
    format!("{:.1}", round_half_away(100.0 * x, 1))
}

/// Table-1 style rows: method, P, R, F as percentages.
pub fn format_report(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::from("method\tP\tR\tF\n");
    for (method, r) in rows {
        let _ = writeln!(out, "{method}\t{}\t{}\t{}", percent(r.precision), percent(r.recall), percent(r.f_measure));
    }
    out
}
