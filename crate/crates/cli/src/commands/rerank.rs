use std::collections::HashMap;

use anyhow::{bail, Context};
use rayon::prelude::*;

use segrank_core::aggregation::aggregate_score;
use segrank_core::bm25::{bm25_score, bm25_sdm_score, bm25_weighted_score, rm3_expand, BigramStats, CorpusStats};
use segrank_core::eval::RunFile;
use segrank_core::model::{Document, Query, OOV_ID};
use segrank_core::sdm::sdm_score;

use super::{load_corpus, load_queries, load_run, require, require_exists};
use crate::config::{header_line, Method, Settings};

/// Second-stage reranking of a candidate list with the configured method.
pub fn cmd_rerank(settings: &Settings) -> anyhow::Result<()> {
    let candidates_path = require_exists(&settings.candidates, "candidate list", "--candidates")?;
    let output = require(&settings.output, "output path", "--output")?;
    let corpus = load_corpus(settings)?;
    let queries = load_queries(settings, corpus.vocab())?;
    let candidates = load_run(candidates_path)?;

    if let Some(warning) = settings.sdm_config().warning() {
        eprintln!("warning: {warning}");
    }

    let by_qid: HashMap<&str, &Query> = queries.iter().map(|q| (q.qid.as_str(), q)).collect();
    for qid in candidates.queries() {
        if !by_qid.contains_key(qid) {
            bail!("candidate query {qid} is missing from the query file");
        }
        for entry in candidates.ranking(qid).unwrap_or_default() {
            if corpus.doc(&entry.doc_id).is_none() {
                bail!("candidate document {} is missing from the corpus", entry.doc_id);
            }
        }
    }

    // BM25-family methods score token streams truncated to the first
    // num_segments segments, with corpus statistics over the same
    // truncation.
    let truncated: Option<HashMap<String, Vec<u32>>> = match settings.method {
        Method::Bm25 | Method::Bm25Sdm | Method::Bm25Rm3 => Some(
            corpus
                .docs()
                .iter()
                .map(|d| (d.doc_id.clone(), truncate_tokens(d, settings.num_segments)))
                .collect(),
        ),
        _ => None,
    };
    let stats = truncated.as_ref().map(|docs| {
        CorpusStats::build(docs.iter().map(|(id, toks)| (id.as_str(), toks.as_slice())))
    });

    type Rankings = Vec<(String, Vec<(String, f64)>)>;
    let query_ids: Vec<&str> = candidates.queries().collect();
    let pool = crate::thread_pool(settings.threads)?;
    let rankings: anyhow::Result<Rankings> = pool.install(|| {
        query_ids
            .par_iter()
            .map(|&qid| {
                let query = by_qid[qid];
                let docs: Vec<&Document> = candidates
                    .ranking(qid)
                    .unwrap_or_default()
                    .iter()
                    .map(|e| corpus.doc(&e.doc_id).expect("validated above"))
                    .collect();
                let scored = score_candidates(settings, query, &docs, &truncated, &stats)
                    .with_context(|| format!("failed to rerank query {qid}"))?;
                Ok((qid.to_string(), scored))
            })
            .collect()
    });

    let mut run = RunFile::new(settings.run_tag.clone());
    for (qid, ranked) in rankings? {
        run.set_ranking(&qid, ranked)
            .with_context(|| format!("bad ranking for query {qid}"))?;
    }
    let hash = settings.config_hash("rerank");
    run.write_to(output, Some(&header_line(&hash, "rerank")))
        .with_context(|| format!("failed to write {}", output.display()))?;
    println!(
        "reranked {} queries with {} -> {}",
        run.query_count(),
        settings.method,
        output.display()
    );
    Ok(())
}

fn truncate_tokens(doc: &Document, num_segments: usize) -> Vec<u32> {
    doc.segments
        .iter()
        .take(num_segments.max(1))
        .flat_map(|s| s.tokens.iter().copied())
        .collect()
}

fn score_candidates(
    settings: &Settings,
    query: &Query,
    docs: &[&Document],
    truncated: &Option<HashMap<String, Vec<u32>>>,
    stats: &Option<CorpusStats>,
) -> anyhow::Result<Vec<(String, f64)>> {
    let mut scored: Vec<(String, f64)> = match settings.method {
        Method::ScoreMax | Method::RepMax | Method::RepSum | Method::RepMean => {
            let method = settings.agg_method().expect("aggregation method");
            let q_rep = query.rep();
            docs.iter()
                .map(|doc| (doc.doc_id.clone(), aggregate_score(&q_rep, doc, &method)))
                .collect()
        }
        Method::ExactSdm | Method::SoftSdm => {
            let cfg = settings.sdm_config();
            let lam = settings.lambdas();
            let scored: Result<Vec<(String, f64)>, segrank_core::Error> = docs
                .iter()
                .map(|doc| Ok((doc.doc_id.clone(), sdm_score(query, doc, &cfg, &lam)?)))
                .collect();
            scored?
        }
        Method::Bm25 | Method::Bm25Sdm | Method::Bm25Rm3 => {
            let tokens = truncated.as_ref().expect("token map built for bm25");
            let stats = stats.as_ref().expect("stats built for bm25");
            let params = settings.bm25_params();
            let q_terms: Vec<u32> = query.terms.iter().map(|&(id, _)| id).collect();
            match settings.method {
                Method::Bm25 => {
                    let scored: Result<Vec<_>, segrank_core::Error> = docs
                        .iter()
                        .map(|doc| {
                            let toks = &tokens[&doc.doc_id];
                            Ok((doc.doc_id.clone(), bm25_score(&q_terms, toks, stats, &params)?))
                        })
                        .collect();
                    scored?
                }
                Method::Bm25Sdm => {
                    let bigrams = BigramStats::build(
                        &q_terms,
                        docs.iter().map(|d| tokens[&d.doc_id].as_slice()),
                        params.window,
                    );
                    let scored: Result<Vec<_>, segrank_core::Error> = docs
                        .iter()
                        .map(|doc| {
                            let toks = &tokens[&doc.doc_id];
                            Ok((
                                doc.doc_id.clone(),
                                bm25_sdm_score(&q_terms, toks, stats, &bigrams, &params)?,
                            ))
                        })
                        .collect();
                    scored?
                }
                Method::Bm25Rm3 => {
                    // first pass: plain BM25 ordering provides the feedback set
                    let mut first: Vec<(usize, f64)> = docs
                        .iter()
                        .enumerate()
                        .map(|(i, doc)| {
                            let toks = &tokens[&doc.doc_id];
                            Ok((i, bm25_score(&q_terms, toks, stats, &params)?))
                        })
                        .collect::<Result<_, segrank_core::Error>>()?;
                    first.sort_by(|a, b| {
                        b.1.partial_cmp(&a.1)
                            .expect("finite scores")
                            .then_with(|| docs[a.0].doc_id.cmp(&docs[b.0].doc_id))
                    });
                    let feedback: Vec<(&[u32], f64)> = first
                        .iter()
                        .take(settings.fb_docs)
                        .map(|&(i, score)| (tokens[&docs[i].doc_id].as_slice(), score))
                        .collect();
                    let weighted: Vec<(u32, f64)> = query
                        .terms
                        .iter()
                        .copied()
                        .filter(|&(id, _)| id != OOV_ID)
                        .collect();
                    let expanded = rm3_expand(&weighted, &feedback, &settings.rm3_params())?;
                    let scored: Result<Vec<_>, segrank_core::Error> = docs
                        .iter()
                        .map(|doc| {
                            let toks = &tokens[&doc.doc_id];
                            Ok((
                                doc.doc_id.clone(),
                                bm25_weighted_score(&expanded, toks, stats, &params)?,
                            ))
                        })
                        .collect();
                    scored?
                }
                _ => unreachable!(),
            }
        }
    };
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite scores")
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(scored)
}
