//! Sequential-dependence scoring over sparse translation logits.
//!
//! A query-document score combines three potentials, each a weighted sum
//! over query structures of a max over document positions:
//!
//! - unigram: per query term, the best translation score at any position,
//! - ordered n-gram: per contiguous query n-gram, the best aligned window,
//! - unordered proximity: per query n-gram, the best width-`prx` window
//!   scoring each gram term by its max inside the window.
//!
//! The combination `lambda_st * st + lambda_so * so + lambda_su * su` is a
//! rank-equivalent relevance score (the normalization constant of the
//! underlying random-field formulation is dropped).
//!
//! The exact variant restricts document positions to self-translation
//! before scoring (see [`crate::model::diagonal_mask`]); the soft variant
//! keeps the full expansion logits.
//!
//! Window conventions: every full window is scored, i.e. start positions
//! run to `len - width + 1`. For the proximity potential a document (or
//! segment, in per-segment mode) shorter than `prx` is scored with a single
//! window covering all of it, so short inputs are never zeroed by the
//! proximity potential alone. The ordered potential scores full windows
//! only. When a query is shorter than `n`, the ordered potential is zero
//! while the proximity potential degrades the gram to the whole query.
//!
//! Multi-segment documents are truncated to the first `num_segments`
//! segments and their logit rows concatenated, so windows may span segment
//! boundaries; set `per_segment_windows` to confine windows within segments
//! instead.

use std::borrow::Cow;
use std::collections::HashMap;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Document, Query, SparseVector, TranslationMatrix};

/// Combination weights for the three potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    pub lambda_st: f64,
    pub lambda_so: f64,
    pub lambda_su: f64,
}

impl Default for Lambdas {
    fn default() -> Self {
        Lambdas {
            lambda_st: 1.0,
            lambda_so: 1.0,
            lambda_su: 1.0,
        }
    }
}

impl Lambdas {
    pub fn new(lambda_st: f64, lambda_so: f64, lambda_su: f64) -> Self {
        Lambdas {
            lambda_st,
            lambda_so,
            lambda_su,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdmVariant {
    /// Document terms restricted to self-translation.
    Exact,
    /// Full expansion logits.
    Soft,
}

impl std::fmt::Display for SdmVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SdmVariant::Exact => write!(f, "exact"),
            SdmVariant::Soft => write!(f, "soft"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdmConfig {
    /// n-gram width for the ordered and proximity potentials.
    pub n: usize,
    /// Proximity window width.
    pub prx: usize,
    pub variant: SdmVariant,
    /// Number of leading segments scored per document.
    pub num_segments: usize,
    /// Confine windows within segments instead of the concatenation.
    #[serde(default)]
    pub per_segment_windows: bool,
}

impl Default for SdmConfig {
    fn default() -> Self {
        SdmConfig {
            n: 2,
            prx: 8,
            variant: SdmVariant::Exact,
            num_segments: 1,
            per_segment_windows: false,
        }
    }
}

impl SdmConfig {
    /// Returns a human-readable warning for questionable but legal settings.
    pub fn warning(&self) -> Option<String> {
        (self.prx < self.n).then(|| {
            format!(
                "prx={} is smaller than n={}; proximity windows cannot cover a full n-gram",
                self.prx, self.n
            )
        })
    }
}

/// Per-query-term dense position profiles over a (concatenated) logit
/// matrix: `cols[i][r]` is the translation score of query term `i` at
/// position `r`. Built once per query-document pair; all potentials read
/// from it.
struct Profiles {
    cols: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Profiles {
    fn build(query: &Query, rows: &[Cow<'_, SparseVector>]) -> Profiles {
        let len = rows.len();
        let weights: Vec<f64> = query.terms.iter().map(|&(_, w)| w).collect();
        let mut cols = vec![vec![0.0; len]; query.terms.len()];
        // invert: term id -> query positions holding it (queries may repeat terms)
        let mut positions: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, &(id, _)) in query.terms.iter().enumerate() {
            positions.entry(id).or_default().push(i);
        }
        for (r, row) in rows.iter().enumerate() {
            for (id, score) in row.iter() {
                if let Some(qps) = positions.get(&id) {
                    for &i in qps {
                        cols[i][r] = score;
                    }
                }
            }
        }
        Profiles { cols, weights }
    }

    fn num_terms(&self) -> usize {
        self.weights.len()
    }
}

/// Contiguous query index spans scored as n-grams. With fewer query terms
/// than `n` the ordered potential has no gram, while the proximity
/// potential degrades to a single gram covering the whole query.
fn grams(num_terms: usize, n: usize, degrade: bool) -> Vec<(usize, usize)> {
    if num_terms == 0 {
        return Vec::new();
    }
    if num_terms < n {
        return if degrade {
            vec![(0, num_terms)]
        } else {
            Vec::new()
        };
    }
    (0..=num_terms - n).map(|g| (g, g + n)).collect()
}

/// Full windows of `width` positions within each range; with `degrade`,
/// a non-empty range shorter than `width` yields one window covering it.
fn windows(ranges: &[(usize, usize)], width: usize, degrade: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &(a, b) in ranges {
        let len = b - a;
        if len == 0 {
            continue;
        }
        if len < width {
            if degrade {
                out.push((a, b));
            }
            continue;
        }
        for s in a..=b - width {
            out.push((s, s + width));
        }
    }
    out
}

fn unigram_sum(p: &Profiles) -> f64 {
    let mut total = 0.0;
    for i in 0..p.num_terms() {
        let mut best = 0.0f64;
        for &v in &p.cols[i] {
            if v > best {
                best = v;
            }
        }
        total += p.weights[i] * best;
    }
    total
}

fn ordered_sum(p: &Profiles, n: usize, ranges: &[(usize, usize)]) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    let wins = windows(ranges, n, false);
    let mut total = 0.0;
    for (gs, ge) in grams(p.num_terms(), n, false) {
        let mut best = f64::NEG_INFINITY;
        for &(s, _) in &wins {
            let mut val = 0.0;
            for (l, i) in (gs..ge).enumerate() {
                val += p.weights[i] * p.cols[i][s + l];
            }
            if val > best {
                best = val;
            }
        }
        if best > f64::NEG_INFINITY {
            total += best;
        }
    }
    total
}

fn proximity_sum(p: &Profiles, n: usize, prx: usize, ranges: &[(usize, usize)]) -> f64 {
    assert!(prx >= 1, "prx must be at least 1");
    let wins = windows(ranges, prx, true);
    if wins.is_empty() || p.num_terms() == 0 {
        return 0.0;
    }
    // per term, the max profile value inside each window
    let win_max: Vec<Vec<f64>> = (0..p.num_terms())
        .map(|i| window_maxima(&p.cols[i], &wins))
        .collect();
    let mut total = 0.0;
    for (gs, ge) in grams(p.num_terms(), n, true) {
        let mut best = f64::NEG_INFINITY;
        for (w, _) in wins.iter().enumerate() {
            let mut val = 0.0;
            for (weight, maxima) in p.weights[gs..ge].iter().zip(&win_max[gs..ge]) {
                val += weight * maxima[w];
            }
            if val > best {
                best = val;
            }
        }
        if best > f64::NEG_INFINITY {
            total += best;
        }
    }
    total
}

/// Max of `vals` inside each window. Fixed-width runs inside one contiguous
/// block are computed with a monotonic deque in O(len); degraded
/// whole-range windows are scanned directly.
fn window_maxima(vals: &[f64], wins: &[(usize, usize)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wins.len());
    let mut w = 0;
    while w < wins.len() {
        let (a, b) = wins[w];
        let width = b - a;
        // extent of the run of same-width windows sliding by one
        let mut run = 1;
        while w + run < wins.len() {
            let (na, nb) = wins[w + run];
            if na == a + run && nb - na == width {
                run += 1;
            } else {
                break;
            }
        }
        if run == 1 {
            let mut best = f64::NEG_INFINITY;
            for &v in &vals[a..b] {
                if v > best {
                    best = v;
                }
            }
            out.push(best);
        } else {
            let block = &vals[a..a + run - 1 + width];
            let mut dq: VecDeque<usize> = VecDeque::new();
            for (i, &v) in block.iter().enumerate() {
                while dq.back().is_some_and(|&j| block[j] <= v) {
                    dq.pop_back();
                }
                dq.push_back(i);
                if dq.front().is_some_and(|&j| j + width <= i) {
                    dq.pop_front();
                }
                if i + 1 >= width {
                    out.push(block[*dq.front().expect("deque non-empty")]);
                }
            }
        }
        w += run;
    }
    out
}

fn whole_range(rows: usize) -> Vec<(usize, usize)> {
    vec![(0, rows)]
}

fn borrow_rows(w: &TranslationMatrix) -> Vec<Cow<'_, SparseVector>> {
    w.rows().iter().map(Cow::Borrowed).collect()
}

/// Unigram potential: `lambda_st * sum_i w_q^i * max_r W[r][v_i]`.
pub fn psi_st(query: &Query, w: &TranslationMatrix, lambda_st: f64) -> f64 {
    let p = Profiles::build(query, &borrow_rows(w));
    lambda_st * unigram_sum(&p)
}

/// Ordered n-gram potential: per query n-gram, the best aligned full
/// window `sum_l w_q^{i+l} * W[r+l][v_{i+l}]`, maxed over starts `r`.
pub fn psi_so(query: &Query, w: &TranslationMatrix, n: usize, lambda_so: f64) -> f64 {
    let p = Profiles::build(query, &borrow_rows(w));
    lambda_so * ordered_sum(&p, n, &whole_range(w.len()))
}

/// Unordered proximity potential: per query n-gram, the best width-`prx`
/// window scoring each gram term by its max inside the window.
pub fn psi_su(query: &Query, w: &TranslationMatrix, n: usize, prx: usize, lambda_su: f64) -> f64 {
    let p = Profiles::build(query, &borrow_rows(w));
    lambda_su * proximity_sum(&p, n, prx, &whole_range(w.len()))
}

fn mask_row(row: &SparseVector, token: u32) -> SparseVector {
    let score = row.get(token);
    if score > 0.0 {
        SparseVector::from_pairs([(token, score)]).expect("positive weight")
    } else {
        SparseVector::empty()
    }
}

type GatheredRows<'a> = (Vec<Cow<'a, SparseVector>>, Vec<(usize, usize)>);

/// Gathers the logit rows of the first `num_segments` segments (masking
/// them for the exact variant) along with per-segment position ranges.
fn gather_rows<'a>(doc: &'a Document, cfg: &SdmConfig) -> Result<GatheredRows<'a>> {
    let take = cfg.num_segments.min(doc.segments.len());
    let mut rows: Vec<Cow<'a, SparseVector>> = Vec::new();
    let mut ranges = Vec::with_capacity(take);
    for seg in &doc.segments[..take] {
        let logits = seg.logits.as_ref().ok_or_else(|| Error::MissingLogits {
            doc_id: seg.doc_id.clone(),
            seg_index: seg.seg_index,
        })?;
        if logits.len() != seg.tokens.len() {
            return Err(Error::RowCountMismatch {
                rows: logits.len(),
                tokens: seg.tokens.len(),
            });
        }
        let start = rows.len();
        match cfg.variant {
            SdmVariant::Soft => {
                rows.extend(logits.rows().iter().map(Cow::Borrowed));
            }
            SdmVariant::Exact => {
                rows.extend(
                    logits
                        .rows()
                        .iter()
                        .zip(&seg.tokens)
                        .map(|(row, &tok)| Cow::Owned(mask_row(row, tok))),
                );
            }
        }
        ranges.push((start, rows.len()));
    }
    if !cfg.per_segment_windows {
        ranges = whole_range(rows.len());
    }
    Ok((rows, ranges))
}

/// The three potentials at unit lambda, in `(st, so, su)` order.
pub fn unit_potentials(query: &Query, doc: &Document, cfg: &SdmConfig) -> Result<(f64, f64, f64)> {
    let (rows, ranges) = gather_rows(doc, cfg)?;
    let p = Profiles::build(query, &rows);
    Ok((
        unigram_sum(&p),
        ordered_sum(&p, cfg.n, &ranges),
        proximity_sum(&p, cfg.n, cfg.prx, &ranges),
    ))
}

/// Rank-equivalent SDM score of a document for a query: the lambda-weighted
/// combination of the three potentials over the truncated segment
/// concatenation.
pub fn sdm_score(query: &Query, doc: &Document, cfg: &SdmConfig, lam: &Lambdas) -> Result<f64> {
    let (st, so, su) = unit_potentials(query, doc, cfg)?;
    Ok(lam.lambda_st * st + lam.lambda_so * so + lam.lambda_su * su)
}
