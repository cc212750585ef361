//! JSON-lines ingestion of encoded corpora and queries.
//!
//! Segment lines:
//! `{"doc_id": str, "seg": int, "tokens": [str...], "rep": {term: weight},
//!   "logits": [{term: weight} per token]}`
//! where `rep` may be omitted when `logits` are present (the representation
//! is then derived as the per-term max over positions), and `logits` may be
//! omitted for corpora that only support representation-based scoring.
//!
//! Query lines: `{"qid": str, "terms": [[str, weight]...]}` with term order
//! preserved.
//!
//! The vocabulary is built from every term string in the corpus (tokens,
//! representation keys, logit keys) in lexicographic order, so ids are
//! deterministic regardless of file order. Query terms outside the corpus
//! vocabulary keep their position under the OOV sentinel id.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    rep_from_logits, Document, Query, Segment, SparseVector, TranslationMatrix, Vocabulary, OOV_ID,
};

#[derive(Debug, Deserialize)]
struct SegmentLine {
    doc_id: String,
    seg: usize,
    tokens: Vec<String>,
    #[serde(default)]
    rep: Option<HashMap<String, f64>>,
    #[serde(default)]
    logits: Option<Vec<HashMap<String, f64>>>,
}

#[derive(Debug, Deserialize)]
struct QueryLine {
    qid: String,
    terms: Vec<(String, f64)>,
}

/// A fully ingested corpus: documents in first-appearance order plus the
/// vocabulary they induce.
#[derive(Debug)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    vocab: Vocabulary,
}

impl Corpus {
    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.docs.iter().flat_map(|d| d.segments.iter())
    }

    pub fn segment_count(&self) -> usize {
        self.docs.iter().map(|d| d.segments.len()).sum()
    }

    /// doc_id -> segment count, as used by the length split.
    pub fn seg_counts(&self) -> HashMap<String, usize> {
        self.docs
            .iter()
            .map(|d| (d.doc_id.clone(), d.segments.len()))
            .collect()
    }
}

/// Reads a segment-per-line corpus, building its vocabulary. Fails on the
/// first malformed line (with its line number), on duplicate segments, and
/// on an empty file.
pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };

    let mut lines: Vec<(usize, SegmentLine)> = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SegmentLine = serde_json::from_str(&line)
            .map_err(|e| parse_err(lineno + 1, format!("malformed segment line: {e}")))?;
        if parsed.rep.is_none() && parsed.logits.is_none() {
            return Err(parse_err(
                lineno + 1,
                "segment carries neither rep nor logits".into(),
            ));
        }
        lines.push((lineno + 1, parsed));
    }
    if lines.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut terms: BTreeSet<String> = BTreeSet::new();
    for (_, line) in &lines {
        terms.extend(line.tokens.iter().cloned());
        if let Some(rep) = &line.rep {
            terms.extend(rep.keys().cloned());
        }
        if let Some(logits) = &line.logits {
            for row in logits {
                terms.extend(row.keys().cloned());
            }
        }
    }
    let vocab = Vocabulary::from_term_set(terms);
    let id_of = |term: &str| vocab.id(term).expect("vocabulary covers corpus terms");

    let mut doc_order: Vec<String> = Vec::new();
    let mut doc_segments: HashMap<String, Vec<Segment>> = HashMap::new();
    for (lineno, line) in lines {
        let tokens: Vec<u32> = line.tokens.iter().map(|t| id_of(t)).collect();
        let logits = match line.logits {
            Some(rows) => {
                if rows.len() != tokens.len() {
                    return Err(parse_err(
                        lineno,
                        format!(
                            "logits have {} rows but segment has {} tokens",
                            rows.len(),
                            tokens.len()
                        ),
                    ));
                }
                let rows: Result<Vec<SparseVector>> = rows
                    .into_iter()
                    .map(|row| {
                        SparseVector::from_pairs(row.into_iter().map(|(t, w)| (id_of(&t), w)))
                    })
                    .collect();
                Some(TranslationMatrix::new(rows.map_err(|e| {
                    parse_err(lineno, format!("bad logit row: {e}"))
                })?))
            }
            None => None,
        };
        let rep = match line.rep {
            Some(rep) => {
                SparseVector::from_pairs(rep.into_iter().map(|(t, w)| (id_of(&t), w)))
                    .map_err(|e| parse_err(lineno, format!("bad rep: {e}")))?
            }
            None => rep_from_logits(logits.as_ref().expect("validated above")),
        };
        let segs = doc_segments.entry(line.doc_id.clone()).or_insert_with(|| {
            doc_order.push(line.doc_id.clone());
            Vec::new()
        });
        if segs.iter().any(|s| s.seg_index == line.seg) {
            return Err(Error::DuplicateSegment {
                doc_id: line.doc_id,
                seg_index: line.seg,
            });
        }
        segs.push(Segment {
            doc_id: line.doc_id,
            seg_index: line.seg,
            tokens,
            rep,
            logits,
        });
    }

    let mut docs = Vec::with_capacity(doc_order.len());
    let mut by_id = HashMap::with_capacity(doc_order.len());
    for doc_id in doc_order {
        let mut segs = doc_segments.remove(&doc_id).expect("grouped above");
        segs.sort_by_key(|s| s.seg_index);
        by_id.insert(doc_id.clone(), docs.len());
        docs.push(Document::new(doc_id, segs)?);
    }
    Ok(Corpus { docs, by_id, vocab })
}

/// Reads one query per line, mapping terms through the vocabulary; unknown
/// terms keep their position under the OOV sentinel.
pub fn read_queries(path: &Path, vocab: &Vocabulary) -> Result<Vec<Query>> {
    let file = std::fs::File::open(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut queries = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: QueryLine = serde_json::from_str(&line)
            .map_err(|e| parse_err(lineno + 1, format!("malformed query line: {e}")))?;
        if !seen.insert(parsed.qid.clone()) {
            return Err(parse_err(
                lineno + 1,
                format!("duplicate query id {:?}", parsed.qid),
            ));
        }
        let mut terms = Vec::with_capacity(parsed.terms.len());
        for (term, weight) in parsed.terms {
            if !weight.is_finite() || weight < 0.0 {
                return Err(parse_err(
                    lineno + 1,
                    format!("bad weight {weight} for term {term:?}"),
                ));
            }
            terms.push((vocab.id(&term).unwrap_or(OOV_ID), weight));
        }
        queries.push(Query {
            qid: parsed.qid,
            terms,
        });
    }
    Ok(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_lines(dir: &tempfile::TempDir, name: &str, lines: &[&str]) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        path
    }

    #[test]
    fn reads_corpus_with_rep_and_logits() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "corpus.jsonl",
            &[
                r#"{"doc_id": "d1", "seg": 0, "tokens": ["dog", "cat"], "rep": {"cat": 0.8, "dog": 0.9}, "logits": [{"cat": 0.1, "dog": 0.9}, {"cat": 0.8, "dog": 0.2}]}"#,
                r#"{"doc_id": "d1", "seg": 1, "tokens": ["ran"], "rep": {"ran": 0.7}}"#,
                r#"{"doc_id": "d2", "seg": 0, "tokens": ["cat"], "logits": [{"cat": 0.5, "dog": 0.1}]}"#,
            ],
        );
        let corpus = read_corpus(&path).unwrap();
        assert_eq!(corpus.docs().len(), 2);
        assert_eq!(corpus.segment_count(), 3);
        // lexicographic vocabulary: cat=0, dog=1, ran=2
        assert_eq!(corpus.vocab().id("cat"), Some(0));
        assert_eq!(corpus.vocab().id("dog"), Some(1));
        assert_eq!(corpus.vocab().id("ran"), Some(2));

        let d1 = corpus.doc("d1").unwrap();
        assert_eq!(d1.segments.len(), 2);
        assert_eq!(d1.segments[0].tokens, vec![1, 0]);
        assert!(d1.segments[0].logits.is_some());
        assert!(d1.segments[1].logits.is_none());

        // d2's rep is derived from its logits (per-term max)
        let d2 = corpus.doc("d2").unwrap();
        assert_eq!(d2.segments[0].rep.get(0), 0.5);
        assert_eq!(d2.segments[0].rep.get(1), 0.1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "corpus.jsonl",
            &[
                r#"{"doc_id": "d1", "seg": 0, "tokens": [], "rep": {}}"#,
                r#"{"doc_id": oops}"#,
            ],
        );
        match read_corpus(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_corpus_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(&dir, "corpus.jsonl", &[]);
        assert!(matches!(read_corpus(&path), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn segment_without_rep_or_logits_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "corpus.jsonl",
            &[r#"{"doc_id": "d1", "seg": 0, "tokens": ["cat"]}"#],
        );
        assert!(matches!(read_corpus(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn logit_row_count_mismatch_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "corpus.jsonl",
            &[r#"{"doc_id": "d1", "seg": 0, "tokens": ["cat", "dog"], "logits": [{"cat": 0.5}]}"#],
        );
        assert!(matches!(read_corpus(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_segment_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "corpus.jsonl",
            &[
                r#"{"doc_id": "d1", "seg": 0, "tokens": [], "rep": {"cat": 1.0}}"#,
                r#"{"doc_id": "d1", "seg": 0, "tokens": [], "rep": {"dog": 1.0}}"#,
            ],
        );
        assert!(matches!(
            read_corpus(&path),
            Err(Error::DuplicateSegment { .. })
        ));
    }

    #[test]
    fn noncontiguous_segments_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_lines(
            &dir,
            "corpus.jsonl",
            &[
                r#"{"doc_id": "d1", "seg": 0, "tokens": [], "rep": {"cat": 1.0}}"#,
                r#"{"doc_id": "d1", "seg": 2, "tokens": [], "rep": {"dog": 1.0}}"#,
            ],
        );
        assert!(matches!(
            read_corpus(&path),
            Err(Error::InvalidDocument { .. })
        ));
    }

    #[test]
    fn reads_queries_with_oov_terms() {
        let dir = tempfile::tempdir().unwrap();
        let corpus_path = write_lines(
            &dir,
            "corpus.jsonl",
            &[r#"{"doc_id": "d1", "seg": 0, "tokens": ["cat"], "rep": {"cat": 1.0}}"#],
        );
        let corpus = read_corpus(&corpus_path).unwrap();
        let query_path = write_lines(
            &dir,
            "queries.jsonl",
            &[r#"{"qid": "q1", "terms": [["cat", 2.0], ["unicorn", 1.0]]}"#],
        );
        let queries = read_queries(&query_path, corpus.vocab()).unwrap();
        assert_eq!(queries.len(), 1);
        assert_eq!(queries[0].terms[0], (0, 2.0));
        assert_eq!(queries[0].terms[1].0, OOV_ID);
        // OOV terms drop out of the dot-product view but keep their slot
        assert_eq!(queries[0].rep().len(), 1);
    }

    #[test]
    fn negative_query_weight_errors() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = Vocabulary::from_term_set(["cat".to_string()]);
        let path = write_lines(
            &dir,
            "queries.jsonl",
            &[r#"{"qid": "q1", "terms": [["cat", -2.0]]}"#],
        );
        assert!(matches!(
            read_queries(&path, &vocab),
            Err(Error::Parse { .. })
        ));
    }
}
