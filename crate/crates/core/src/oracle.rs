//! Exhaustive reference scorer for small instances.
//!
//! Recomputes the sequential-dependence score by literal enumeration of
//! every gram, window and position, using its own hash-map row lookups.
//! It deliberately shares no code with [`crate::sdm`] so the two can check
//! each other; it refuses inputs beyond oracle scale.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Document, Query};
use crate::sdm::{Lambdas, SdmConfig, SdmVariant};

const MAX_POSITIONS: usize = 64;
const MAX_QUERY_TERMS: usize = 8;

/// Brute-force SDM score with the same contract as [`crate::sdm::sdm_score`].
pub fn brute_force_sdm(
    query: &Query,
    doc: &Document,
    cfg: &SdmConfig,
    lam: &Lambdas,
) -> Result<f64> {
    if query.terms.len() > MAX_QUERY_TERMS {
        return Err(Error::OracleScale(format!(
            "query has {} terms, oracle allows at most {MAX_QUERY_TERMS}",
            query.terms.len()
        )));
    }

    // Materialize the truncated concatenation as hash-map rows.
    let take = cfg.num_segments.min(doc.segments.len());
    let mut rows: Vec<HashMap<u32, f64>> = Vec::new();
    let mut seg_bounds: Vec<(usize, usize)> = Vec::new();
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
        for (r, row) in logits.rows().iter().enumerate() {
            let mut map: HashMap<u32, f64> = row.iter().collect();
            if cfg.variant == SdmVariant::Exact {
                let tok = seg.tokens[r];
                let kept = map.get(&tok).copied();
                map.clear();
                if let Some(v) = kept {
                    if v > 0.0 {
                        map.insert(tok, v);
                    }
                }
            }
            rows.push(map);
        }
        seg_bounds.push((start, rows.len()));
    }
    if rows.len() > MAX_POSITIONS {
        return Err(Error::OracleScale(format!(
            "document has {} positions, oracle allows at most {MAX_POSITIONS}",
            rows.len()
        )));
    }
    if !cfg.per_segment_windows {
        seg_bounds = vec![(0, rows.len())];
    }

    let lookup = |r: usize, v: u32| -> f64 { rows[r].get(&v).copied().unwrap_or(0.0) };
    let terms = &query.terms;
    let m = terms.len();

    // unigram: per term, max over every position
    let mut st = 0.0;
    for &(v, w) in terms {
        let mut best = 0.0f64;
        for r in 0..rows.len() {
            best = best.max(lookup(r, v));
        }
        st += w * best;
    }

    // ordered: per contiguous n-gram, max over aligned full windows
    let mut so = 0.0;
    if m >= cfg.n {
        for g in 0..=m - cfg.n {
            let mut best: Option<f64> = None;
            for &(a, b) in &seg_bounds {
                if b - a < cfg.n {
                    continue;
                }
                for s in a..=b - cfg.n {
                    let mut val = 0.0;
                    for l in 0..cfg.n {
                        let (v, w) = terms[g + l];
                        val += w * lookup(s + l, v);
                    }
                    best = Some(best.map_or(val, |x: f64| x.max(val)));
                }
            }
            so += best.unwrap_or(0.0);
        }
    }

    // proximity: per n-gram (whole query when shorter than n), max over
    // width-prx windows, degraded to the whole segment when shorter
    let mut su = 0.0;
    let gram_spans: Vec<(usize, usize)> = if m == 0 {
        Vec::new()
    } else if m < cfg.n {
        vec![(0, m)]
    } else {
        (0..=m - cfg.n).map(|g| (g, g + cfg.n)).collect()
    };
    for (gs, ge) in gram_spans {
        let mut best: Option<f64> = None;
        for &(a, b) in &seg_bounds {
            if b == a {
                continue;
            }
            let starts: Vec<(usize, usize)> = if b - a < cfg.prx {
                vec![(a, b)]
            } else {
                (a..=b - cfg.prx).map(|s| (s, s + cfg.prx)).collect()
            };
            for (ws, we) in starts {
                let mut val = 0.0;
                for &(v, w) in &terms[gs..ge] {
                    let mut inner = f64::NEG_INFINITY;
                    for l in ws..we {
                        inner = inner.max(lookup(l, v));
                    }
                    val += w * inner;
                }
                best = Some(best.map_or(val, |x: f64| x.max(val)));
            }
        }
        su += best.unwrap_or(0.0);
    }

    Ok(lam.lambda_st * st + lam.lambda_so * so + lam.lambda_su * su)
}
