//! Segment aggregation baselines.
//!
//! A long document is scored either by aggregating per-segment scores
//! (score-max) or by aggregating segment representations element-wise and
//! scoring the result (rep-max / rep-sum / rep-mean). All methods look at
//! the first `num_segments` segments in document order; with a single
//! segment they all coincide.

use serde::{Deserialize, Serialize};

use crate::model::{dot, Document, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggKind {
    ScoreMax,
    RepMax,
    RepSum,
    RepMean,
}

impl std::fmt::Display for AggKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AggKind::ScoreMax => "score-max",
            AggKind::RepMax => "rep-max",
            AggKind::RepSum => "rep-sum",
            AggKind::RepMean => "rep-mean",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggMethod {
    pub kind: AggKind,
    pub num_segments: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepMode {
    Max,
    Sum,
    Mean,
}

/// Maximum per-segment dot score over the first `min(k, |segments|)`
/// segments.
pub fn score_max(q_rep: &SparseVector, doc: &Document, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let take = k.min(doc.segments.len());
    doc.segments[..take]
        .iter()
        .map(|seg| dot(q_rep, &seg.rep))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Element-wise max / sum / mean of the first `min(k, |segments|)` segment
/// representations. The mean divides by the number of segments actually
/// aggregated, so short documents are not deflated.
pub fn rep_aggregate(doc: &Document, k: usize, mode: RepMode) -> SparseVector {
    assert!(k >= 1, "k must be at least 1");
    let take = k.min(doc.segments.len());
    let mut acc: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    for seg in &doc.segments[..take] {
        for (id, w) in seg.rep.iter() {
            let slot = acc.entry(id).or_insert(0.0);
            match mode {
                RepMode::Max => {
                    if w > *slot {
                        *slot = w;
                    }
                }
                RepMode::Sum | RepMode::Mean => *slot += w,
            }
        }
    }
    if mode == RepMode::Mean {
        let count = take as f64;
        for w in acc.values_mut() {
            *w /= count;
        }
    }
    SparseVector::from_pairs(acc).expect("aggregation of non-negative weights")
}

/// Dispatch over the aggregation baselines: score-max aggregates scores,
/// the rep variants score the aggregated representation.
pub fn aggregate_score(q_rep: &SparseVector, doc: &Document, method: &AggMethod) -> f64 {
    match method.kind {
        AggKind::ScoreMax => score_max(q_rep, doc, method.num_segments),
        AggKind::RepMax => dot(q_rep, &rep_aggregate(doc, method.num_segments, RepMode::Max)),
        AggKind::RepSum => dot(q_rep, &rep_aggregate(doc, method.num_segments, RepMode::Sum)),
        AggKind::RepMean => dot(
            q_rep,
            &rep_aggregate(doc, method.num_segments, RepMode::Mean),
        ),
    }
}
