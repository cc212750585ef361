//! Diagnostic analyses of segment and term behavior.
//!
//! Three studies over a corpus, a query set and their candidate pairs:
//! where the highest-scoring segment sits within documents, how the first
//! segment's terms relate to later segments (unique / intersection /
//! global, measured on the support of the sparse representations), and how
//! each term category contributes to the first-segment score. A fourth
//! utility splits queries by the segment count of their relevant documents
//! and filters candidate lists accordingly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::eval::Qrels;
use crate::model::{dot, Document, SparseVector};

/// Term sharing structure of the first segment relative to a set of
/// comparison segments. Categories are over the support of the first
/// segment's sparse representation; terms shared with every compared
/// segment are global and excluded from the per-segment intersections, so
/// unique / intersection / global are disjoint.
#[derive(Debug, Clone)]
pub struct TermCategory {
    pub unique: BTreeSet<u32>,
    /// Compared segment index -> first-segment terms shared with it
    /// (global terms excluded).
    pub intersection: BTreeMap<usize, BTreeSet<u32>>,
    pub global_: BTreeSet<u32>,
}

impl TermCategory {
    /// All first-segment terms shared with at least one compared segment
    /// but not with all of them.
    pub fn intersection_union(&self) -> BTreeSet<u32> {
        self.intersection
            .values()
            .flat_map(|s| s.iter().copied())
            .collect()
    }
}

/// Categorizes first-segment terms by how they recur in `compare_segs`.
pub fn categorize_terms(doc: &Document, compare_segs: &[usize]) -> Result<TermCategory> {
    assert!(!compare_segs.is_empty(), "compare_segs must be non-empty");
    let first = &doc.segments[0];
    let mut supports: Vec<(usize, BTreeSet<u32>)> = Vec::with_capacity(compare_segs.len());
    for &idx in compare_segs {
        let seg = doc.segments.get(idx).ok_or_else(|| Error::MissingSegment {
            doc_id: doc.doc_id.clone(),
            seg_index: idx,
        })?;
        supports.push((idx, seg.rep.ids().collect()));
    }

    let mut unique = BTreeSet::new();
    let mut global_ = BTreeSet::new();
    let mut intersection: BTreeMap<usize, BTreeSet<u32>> =
        compare_segs.iter().map(|&i| (i, BTreeSet::new())).collect();
    for id in first.rep.ids() {
        let holders: Vec<usize> = supports
            .iter()
            .filter(|(_, support)| support.contains(&id))
            .map(|&(idx, _)| idx)
            .collect();
        if holders.is_empty() {
            unique.insert(id);
        } else if holders.len() == supports.len() {
            global_.insert(id);
        } else {
            for idx in holders {
                intersection
                    .get_mut(&idx)
                    .expect("initialized above")
                    .insert(id);
            }
        }
    }
    Ok(TermCategory {
        unique,
        intersection,
        global_,
    })
}

/// Score shares of the term categories in the first-segment dot product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Influence {
    pub unique: f64,
    pub intersection: f64,
    pub global_: f64,
    /// Share of matched terms outside every category (zero when the
    /// categories were computed for this document).
    pub residue: f64,
}

/// Splits `dot(q_rep, first_segment.rep)` into the shares contributed by
/// each term category. Errors when the first-segment score is zero.
pub fn term_influence(
    qid: &str,
    q_rep: &SparseVector,
    doc: &Document,
    cats: &TermCategory,
) -> Result<Influence> {
    let first = &doc.segments[0];
    let total = dot(q_rep, &first.rep);
    if total <= 0.0 {
        return Err(Error::ZeroScore {
            qid: qid.to_string(),
            doc_id: doc.doc_id.clone(),
        });
    }
    let inter_union = cats.intersection_union();
    let mut unique = 0.0;
    let mut intersection = 0.0;
    let mut global_ = 0.0;
    let mut residue = 0.0;
    for (id, qw) in q_rep.iter() {
        let dw = first.rep.get(id);
        if dw == 0.0 {
            continue;
        }
        let share = qw * dw / total;
        if cats.unique.contains(&id) {
            unique += share;
        } else if cats.global_.contains(&id) {
            global_ += share;
        } else if inter_union.contains(&id) {
            intersection += share;
        } else {
            residue += share;
        }
    }
    Ok(Influence {
        unique,
        intersection,
        global_,
        residue,
    })
}

/// Histogram of the highest-scoring segment index over query-document
/// pairs.
#[derive(Debug, Clone, Default)]
pub struct HistogramReport {
    pub counts: BTreeMap<usize, u64>,
    pub pairs_counted: u64,
    /// Pairs dropped because the query or document was missing.
    pub pairs_skipped: u64,
    /// Pairs dropped by the relevant-only filter.
    pub pairs_filtered: u64,
}

/// Tallies, for each (query, document) pair, the segment index with the
/// highest dot score (ties go to the lowest index). With `relevant_filter`
/// set, only pairs judged relevant (grade >= 1) are counted.
pub fn top_segment_histogram(
    queries: &HashMap<String, SparseVector>,
    docs: &HashMap<String, Document>,
    pairs: &[(String, String)],
    relevant_filter: Option<&Qrels>,
) -> HistogramReport {
    let mut report = HistogramReport::default();
    for (qid, doc_id) in pairs {
        if let Some(qrels) = relevant_filter {
            if qrels.grade(qid, doc_id).unwrap_or(0) < 1 {
                report.pairs_filtered += 1;
                continue;
            }
        }
        let (Some(q_rep), Some(doc)) = (queries.get(qid), docs.get(doc_id)) else {
            report.pairs_skipped += 1;
            continue;
        };
        let mut best_idx = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for seg in &doc.segments {
            let score = dot(q_rep, &seg.rep);
            if score > best_score {
                best_score = score;
                best_idx = seg.seg_index;
            }
        }
        *report.counts.entry(best_idx).or_insert(0) += 1;
        report.pairs_counted += 1;
    }
    report
}

/// Query split by relevant-document length, with per-side candidate lists.
#[derive(Debug, Clone, Default)]
pub struct LengthSplit {
    pub short_qids: BTreeSet<String>,
    pub long_qids: BTreeSet<String>,
    pub short_candidates: BTreeMap<String, Vec<(String, f64)>>,
    /// Long-side candidates with short documents removed.
    pub long_candidates: BTreeMap<String, Vec<(String, f64)>>,
}

/// Assigns each query with at least one relevant document to the short
/// side (every relevant document has <= `seg_threshold` segments) or the
/// long side (any relevant document is longer; mixed queries land here).
/// Long-side candidate lists drop documents with <= `seg_threshold`
/// segments. Every document referenced by the judgments or the candidate
/// lists of the split queries must have a known segment count.
pub fn split_by_length(
    qrels: &Qrels,
    seg_counts: &HashMap<String, usize>,
    seg_threshold: usize,
    candidates: &BTreeMap<String, Vec<(String, f64)>>,
) -> Result<LengthSplit> {
    let mut missing: BTreeSet<String> = BTreeSet::new();
    let mut split = LengthSplit::default();
    for qid in qrels.queries() {
        let relevant = qrels.relevant_docs(qid, 1);
        if relevant.is_empty() {
            continue;
        }
        for judged in qrels.judged(qid).into_iter().flat_map(|m| m.keys()) {
            if !seg_counts.contains_key(judged) {
                missing.insert(judged.clone());
            }
        }
        if let Some(cands) = candidates.get(qid) {
            for (doc_id, _) in cands {
                if !seg_counts.contains_key(doc_id) {
                    missing.insert(doc_id.clone());
                }
            }
        }
        if !missing.is_empty() {
            continue;
        }
        let all_short = relevant
            .iter()
            .all(|doc| seg_counts[*doc] <= seg_threshold);
        let cands = candidates.get(qid).cloned().unwrap_or_default();
        if all_short {
            split.short_qids.insert(qid.to_string());
            split.short_candidates.insert(qid.to_string(), cands);
        } else {
            split.long_qids.insert(qid.to_string());
            let filtered: Vec<(String, f64)> = cands
                .into_iter()
                .filter(|(doc_id, _)| seg_counts[doc_id] > seg_threshold)
                .collect();
            split.long_candidates.insert(qid.to_string(), filtered);
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingDocuments(missing.into_iter().collect()));
    }
    Ok(split)
}
