//! Statistical lexical baselines: BM25, BM25 with sequential-dependence
//! window features, and RM3 pseudo-relevance feedback.
//!
//! The dependence features reuse BM25-style weighting: ordered adjacent
//! bigram matches and unordered co-occurrences within a fixed window are
//! treated as pseudo-terms whose document frequency is computed on the fly
//! over the candidate set being reranked.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SparseVector;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    /// Weight of the unigram BM25 component.
    pub w_t: f64,
    /// Weight of the ordered adjacent-bigram component.
    pub w_o: f64,
    /// Weight of the unordered windowed-bigram component.
    pub w_u: f64,
    /// Window width for unordered co-occurrence matches.
    pub window: usize,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 0.9,
            b: 0.4,
            w_t: 0.85,
            w_o: 0.1,
            w_u: 0.05,
            window: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rm3Params {
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub alpha: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Rm3Params {
            fb_docs: 10,
            fb_terms: 10,
            alpha: 0.5,
        }
    }
}

/// Corpus-level statistics BM25 depends on.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub avg_doc_len: f64,
    df: HashMap<u32, usize>,
    doc_len: HashMap<String, usize>,
}

impl CorpusStats {
    pub fn build<'a>(docs: impl IntoIterator<Item = (&'a str, &'a [u32])>) -> Self {
        let mut stats = CorpusStats::default();
        let mut total_len = 0usize;
        for (doc_id, tokens) in docs {
            stats.doc_count += 1;
            total_len += tokens.len();
            stats.doc_len.insert(doc_id.to_string(), tokens.len());
            let distinct: HashSet<u32> = tokens.iter().copied().collect();
            for t in distinct {
                *stats.df.entry(t).or_insert(0) += 1;
            }
        }
        if stats.doc_count > 0 {
            stats.avg_doc_len = total_len as f64 / stats.doc_count as f64;
        }
        stats
    }

    pub fn df(&self, term: u32) -> usize {
        self.df.get(&term).copied().unwrap_or(0)
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<usize> {
        self.doc_len.get(doc_id).copied()
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn tf_norm(&self, tf: f64, len: usize, params: &Bm25Params) -> f64 {
        let norm = if self.avg_doc_len > 0.0 {
            1.0 - params.b + params.b * len as f64 / self.avg_doc_len
        } else {
            1.0
        };
        tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
    }
}

fn term_frequency(term: u32, tokens: &[u32]) -> f64 {
    tokens.iter().filter(|&&t| t == term).count() as f64
}

/// Plain BM25 with `idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)`. Query
/// terms are scored per occurrence.
pub fn bm25_score(
    q_terms: &[u32],
    doc_tokens: &[u32],
    stats: &CorpusStats,
    params: &Bm25Params,
) -> Result<f64> {
    if stats.doc_count == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut score = 0.0;
    for &t in q_terms {
        let tf = term_frequency(t, doc_tokens);
        if tf == 0.0 {
            continue;
        }
        score += stats.idf(stats.df(t)) * stats.tf_norm(tf, doc_tokens.len(), params);
    }
    Ok(score)
}

/// BM25 scoring of a weighted (e.g. RM3-expanded) query: each term's BM25
/// contribution is scaled by its query weight.
pub fn bm25_weighted_score(
    q: &SparseVector,
    doc_tokens: &[u32],
    stats: &CorpusStats,
    params: &Bm25Params,
) -> Result<f64> {
    if stats.doc_count == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut score = 0.0;
    for (t, qw) in q.iter() {
        let tf = term_frequency(t, doc_tokens);
        if tf == 0.0 {
            continue;
        }
        score += qw * stats.idf(stats.df(t)) * stats.tf_norm(tf, doc_tokens.len(), params);
    }
    Ok(score)
}

/// Number of adjacent occurrences of the ordered pair `(a, b)`.
fn ordered_count(a: u32, b: u32, tokens: &[u32]) -> f64 {
    tokens
        .windows(2)
        .filter(|w| w[0] == a && w[1] == b)
        .count() as f64
}

/// Number of position pairs `(i, j)` with `i < j`, `j - i < window`, whose
/// tokens are `{a, b}` in either order.
fn unordered_count(a: u32, b: u32, tokens: &[u32], window: usize) -> f64 {
    let mut count = 0usize;
    for i in 0..tokens.len() {
        let hi = (i + window).min(tokens.len());
        for j in i + 1..hi {
            let (x, y) = (tokens[i], tokens[j]);
            if (x == a && y == b) || (x == b && y == a) {
                count += 1;
            }
        }
    }
    count as f64
}

/// Document frequencies of the query's adjacent bigrams, computed over the
/// candidate set a query is being reranked against.
#[derive(Debug, Clone, Default)]
pub struct BigramStats {
    pub candidate_count: usize,
    ordered_df: HashMap<(u32, u32), usize>,
    unordered_df: HashMap<(u32, u32), usize>,
}

impl BigramStats {
    pub fn build<'a>(
        q_terms: &[u32],
        candidate_docs: impl IntoIterator<Item = &'a [u32]>,
        window: usize,
    ) -> Self {
        let bigrams: Vec<(u32, u32)> = q_terms.windows(2).map(|w| (w[0], w[1])).collect();
        let mut stats = BigramStats::default();
        for tokens in candidate_docs {
            stats.candidate_count += 1;
            for &(a, b) in &bigrams {
                if ordered_count(a, b, tokens) > 0.0 {
                    *stats.ordered_df.entry((a, b)).or_insert(0) += 1;
                }
                if unordered_count(a, b, tokens, window) > 0.0 {
                    *stats.unordered_df.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
        stats
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.candidate_count as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }
}

/// BM25-SDM: weighted sum of the unigram BM25 score and BM25-weighted
/// ordered/unordered bigram match counts. Single-term queries have no
/// dependence components.
pub fn bm25_sdm_score(
    q_terms: &[u32],
    doc_tokens: &[u32],
    stats: &CorpusStats,
    bigrams: &BigramStats,
    params: &Bm25Params,
) -> Result<f64> {
    let unigram = bm25_score(q_terms, doc_tokens, stats, params)?;
    let mut ordered = 0.0;
    let mut unordered = 0.0;
    for pair in q_terms.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let otf = ordered_count(a, b, doc_tokens);
        if otf > 0.0 {
            let df = bigrams.ordered_df.get(&(a, b)).copied().unwrap_or(0);
            ordered += bigrams.idf(df) * stats.tf_norm(otf, doc_tokens.len(), params);
        }
        let utf = unordered_count(a, b, doc_tokens, params.window);
        if utf > 0.0 {
            let df = bigrams.unordered_df.get(&(a, b)).copied().unwrap_or(0);
            unordered += bigrams.idf(df) * stats.tf_norm(utf, doc_tokens.len(), params);
        }
    }
    Ok(params.w_t * unigram + params.w_o * ordered + params.w_u * unordered)
}

/// RM3 pseudo-relevance feedback expansion.
///
/// The relevance model is a score-normalized mixture of the feedback
/// documents' term distributions, truncated to the `fb_terms` heaviest
/// terms, then interpolated with the normalized original query:
/// `alpha * original + (1 - alpha) * relevance model`, renormalized to sum
/// to one. An empty feedback set returns the original query unchanged.
pub fn rm3_expand(
    q_terms: &[(u32, f64)],
    top_docs: &[(&[u32], f64)],
    rm3: &Rm3Params,
) -> Result<SparseVector> {
    let original = SparseVector::from_pairs(q_terms.iter().copied())?;
    let feedback = &top_docs[..rm3.fb_docs.min(top_docs.len())];
    if feedback.is_empty() {
        return Ok(original);
    }
    let q_total: f64 = original.iter().map(|(_, w)| w).sum();
    if q_total <= 0.0 {
        return Ok(original);
    }

    // score-normalized document priors; uniform when all scores are zero
    let score_total: f64 = feedback.iter().map(|&(_, s)| s.max(0.0)).sum();
    let priors: Vec<f64> = if score_total > 0.0 {
        feedback.iter().map(|&(_, s)| s.max(0.0) / score_total).collect()
    } else {
        vec![1.0 / feedback.len() as f64; feedback.len()]
    };

    let mut relevance: HashMap<u32, f64> = HashMap::new();
    for (&(tokens, _), &prior) in feedback.iter().zip(&priors) {
        if tokens.is_empty() || prior == 0.0 {
            continue;
        }
        let len = tokens.len() as f64;
        let mut tf: HashMap<u32, f64> = HashMap::new();
        for &t in tokens {
            *tf.entry(t).or_insert(0.0) += 1.0;
        }
        for (t, f) in tf {
            *relevance.entry(t).or_insert(0.0) += prior * f / len;
        }
    }

    // keep the fb_terms heaviest terms, ties broken by term id
    let mut ranked: Vec<(u32, f64)> = relevance.into_iter().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(rm3.fb_terms);

    let mut mixed: HashMap<u32, f64> = HashMap::new();
    for (t, w) in original.iter() {
        *mixed.entry(t).or_insert(0.0) += rm3.alpha * w / q_total;
    }
    for &(t, w) in &ranked {
        *mixed.entry(t).or_insert(0.0) += (1.0 - rm3.alpha) * w;
    }
    let total: f64 = mixed.values().sum();
    if total <= 0.0 {
        return Ok(original);
    }
    SparseVector::from_pairs(mixed.into_iter().map(|(t, w)| (t, w / total)))
}
