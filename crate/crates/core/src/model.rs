//! Domain types: vocabulary, sparse vectors, translation matrices, segments,
//! queries and documents, plus the shared primitive operations (sparse dot
//! product, document segmentation, diagonal masking).
//!
//! Sparse vectors are stored as id-sorted `(term_id, weight)` pairs so the
//! dot product is a linear merge and results are deterministic across runs.
//! Weights are non-negative by construction; negative or non-finite input is
//! rejected at ingestion.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Sentinel id for query terms outside the corpus vocabulary. An OOV term
/// matches nothing but keeps its position in the query, so n-gram adjacency
/// of the surrounding terms is preserved.
pub const OOV_ID: u32 = u32::MAX;

/// Bijective term <-> id mapping with ids dense from 0.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    term_to_id: HashMap<String, u32>,
    id_to_term: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from a term set, assigning ids in lexicographic
    /// order so the mapping is independent of corpus file order.
    pub fn from_term_set(terms: impl IntoIterator<Item = String>) -> Self {
        let sorted: std::collections::BTreeSet<String> = terms.into_iter().collect();
        let mut vocab = Vocabulary::default();
        for term in sorted {
            vocab.push(term);
        }
        vocab
    }

    fn push(&mut self, term: String) -> u32 {
        if let Some(&id) = self.term_to_id.get(&term) {
            return id;
        }
        let id = self.id_to_term.len() as u32;
        self.term_to_id.insert(term.clone(), id);
        self.id_to_term.push(term);
        id
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.id_to_term.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }

    /// Writes one term per line; the line number is the id.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for term in &self.id_to_term {
            writeln!(out, "{term}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut vocab = Vocabulary::default();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let term = line?;
            if vocab.term_to_id.contains_key(&term) {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("duplicate vocabulary term {term:?}"),
                });
            }
            vocab.push(term);
        }
        Ok(vocab)
    }
}

/// Vocabulary-indexed sparse vector: id-sorted pairs, strictly positive
/// finite weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn empty() -> Self {
        SparseVector::default()
    }

    /// Builds a vector from arbitrary (id, weight) pairs: duplicates are
    /// summed, zero weights dropped, negative or non-finite weights rejected.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (id, w) in pairs {
            if !w.is_finite() {
                return Err(Error::InvalidVector(format!(
                    "non-finite weight {w} for term id {id}"
                )));
            }
            if w < 0.0 {
                return Err(Error::InvalidVector(format!(
                    "negative weight {w} for term id {id}"
                )));
            }
            *acc.entry(id).or_insert(0.0) += w;
        }
        Ok(SparseVector {
            entries: acc.into_iter().filter(|&(_, w)| w > 0.0).collect(),
        })
    }

    pub fn get(&self, id: u32) -> f64 {
        match self.entries.binary_search_by_key(&id, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Term ids in the support of this vector.
    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }
}

/// Sparse dot product over shared term ids (linear merge of sorted entries).
pub fn dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let mut i = 0;
    let mut j = 0;
    let mut sum = 0.0;
    while i < a.entries.len() && j < b.entries.len() {
        match a.entries[i].0.cmp(&b.entries[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                sum += a.entries[i].1 * b.entries[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    sum
}

/// Per-position translation scores: row `r` maps vocabulary ids to the logit
/// of translating the segment token at position `r` into that term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TranslationMatrix {
    rows: Vec<SparseVector>,
}

impl TranslationMatrix {
    pub fn new(rows: Vec<SparseVector>) -> Self {
        TranslationMatrix { rows }
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn row(&self, r: usize) -> &SparseVector {
        &self.rows[r]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Restricts each row to the self-translation entry of its own token:
/// row `r` keeps only the score at vocabulary id `tokens[r]`.
///
/// This is the exact-variant preprocessing step; it is idempotent, and rows
/// without a self-translation entry become empty (score 0).
pub fn diagonal_mask(w: &TranslationMatrix, tokens: &[u32]) -> Result<TranslationMatrix> {
    if w.len() != tokens.len() {
        return Err(Error::RowCountMismatch {
            rows: w.len(),
            tokens: tokens.len(),
        });
    }
    let rows = w
        .rows()
        .iter()
        .zip(tokens)
        .map(|(row, &tok)| {
            let score = row.get(tok);
            if score > 0.0 {
                SparseVector {
                    entries: vec![(tok, score)],
                }
            } else {
                SparseVector::empty()
            }
        })
        .collect();
    Ok(TranslationMatrix { rows })
}

/// Derives a segment representation from its logit matrix as the per-term
/// maximum over positions, so that `dot(q.rep, rep_from_logits(w))` equals
/// the unigram potential of `w` at unit weight. Used when a corpus supplies
/// only logits; explicitly ingested representations take precedence.
pub fn rep_from_logits(w: &TranslationMatrix) -> SparseVector {
    let mut max_by_id: BTreeMap<u32, f64> = BTreeMap::new();
    for row in w.rows() {
        for (id, weight) in row.iter() {
            let slot = max_by_id.entry(id).or_insert(0.0);
            if weight > *slot {
                *slot = weight;
            }
        }
    }
    SparseVector {
        entries: max_by_id.into_iter().filter(|&(_, w)| w > 0.0).collect(),
    }
}

/// One contiguous chunk of a document: tokens, a sparse representation, and
/// optionally the per-position logits needed by SDM scoring.
#[derive(Debug, Clone)]
pub struct Segment {
    pub doc_id: String,
    pub seg_index: usize,
    pub tokens: Vec<u32>,
    pub rep: SparseVector,
    pub logits: Option<TranslationMatrix>,
}

/// Ordered list of segments making up one document.
#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    pub segments: Vec<Segment>,
}

impl Document {
    /// Validates that the document has at least one segment and that segment
    /// indices are contiguous from 0 in order.
    pub fn new(doc_id: String, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidDocument {
                doc_id,
                msg: "document has no segments".into(),
            });
        }
        for (i, seg) in segments.iter().enumerate() {
            if seg.seg_index != i {
                return Err(Error::InvalidDocument {
                    doc_id,
                    msg: format!("segment index {} at position {i} is not contiguous", seg.seg_index),
                });
            }
        }
        Ok(Document { doc_id, segments })
    }
}

/// A query as an ordered term sequence; order matters for n-gram potentials.
/// Terms may carry the OOV sentinel id (see [`OOV_ID`]).
#[derive(Debug, Clone)]
pub struct Query {
    pub qid: String,
    pub terms: Vec<(u32, f64)>,
}

impl Query {
    /// Collapses the ordered term list into a sparse vector for dot-product
    /// scoring: duplicates are summed and OOV terms dropped.
    pub fn rep(&self) -> SparseVector {
        SparseVector::from_pairs(self.terms.iter().copied().filter(|&(id, _)| id != OOV_ID))
            .expect("query weights validated at construction")
    }
}

/// Splits a token stream into non-overlapping chunks of at most
/// `max_seg_len` tokens. The concatenation of the chunks equals the input;
/// only the last chunk may be shorter. An empty input yields one empty
/// segment.
pub fn segment_document(tokens: &[u32], max_seg_len: usize) -> Vec<Vec<u32>> {
    assert!(max_seg_len >= 1, "max_seg_len must be at least 1");
    if tokens.is_empty() {
        return vec![Vec::new()];
    }
    tokens.chunks(max_seg_len).map(<[u32]>::to_vec).collect()
}

/// Desk-scale tokenization: lowercased whitespace splitting.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}
