use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use anyhow::Context;

use segrank_core::analysis::{categorize_terms, term_influence, top_segment_histogram, Influence};
use segrank_core::eval::Qrels;
use segrank_core::model::SparseVector;

use super::{load_corpus, load_queries, require, require_exists};
use crate::charts::write_bar_chart;
use crate::config::{header_line, Settings};

/// Segment and term diagnostics over a candidate list: highest-scoring
/// segment histograms, first-segment term categories, and per-pair term
/// influence shares. Writes CSV tables (and optional SVG charts) into the
/// output directory.
pub fn cmd_analyze(settings: &Settings) -> anyhow::Result<()> {
    let candidates_path = require_exists(&settings.candidates, "candidate list", "--candidates")?;
    let out_dir = require(&settings.out_dir, "output directory", "--out-dir")?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let corpus = load_corpus(settings)?;
    let queries = load_queries(settings, corpus.vocab())?;
    let candidates = super::load_run(candidates_path)?;
    let qrels: Option<Qrels> = match &settings.qrels {
        Some(path) => Some(
            Qrels::read_from(path)
                .with_context(|| format!("failed to read qrels {}", path.display()))?,
        ),
        None => None,
    };
    let hash = settings.config_hash("analyze");
    let header = header_line(&hash, "analyze");

    let query_reps: HashMap<String, SparseVector> =
        queries.iter().map(|q| (q.qid.clone(), q.rep())).collect();
    let docs: HashMap<String, segrank_core::model::Document> = corpus
        .docs()
        .iter()
        .map(|d| (d.doc_id.clone(), d.clone()))
        .collect();
    let pairs: Vec<(String, String)> = candidates
        .queries()
        .flat_map(|qid| {
            candidates
                .ranking(qid)
                .unwrap_or_default()
                .iter()
                .map(move |e| (qid.to_string(), e.doc_id.clone()))
        })
        .collect();

    // highest-scoring-segment histograms
    let all = top_segment_histogram(&query_reps, &docs, &pairs, None);
    write_histogram(out_dir, "histogram_all.csv", &header, &all.counts)?;
    println!(
        "histogram over {} pairs ({} skipped)",
        all.pairs_counted, all.pairs_skipped
    );
    let relevant = qrels.as_ref().map(|qrels| {
        let report = top_segment_histogram(&query_reps, &docs, &pairs, Some(qrels));
        (report, "histogram_relevant.csv")
    });
    if let Some((report, name)) = &relevant {
        write_histogram(out_dir, name, &header, &report.counts)?;
        println!(
            "relevant-only histogram over {} pairs ({} filtered, {} skipped)",
            report.pairs_counted, report.pairs_filtered, report.pairs_skipped
        );
    }

    // term category fractions per multi-segment candidate document
    let mut cat_rows: Vec<String> = Vec::new();
    let doc_ids: BTreeSet<&String> = pairs.iter().map(|(_, d)| d).collect();
    let mut categories: HashMap<&str, segrank_core::analysis::TermCategory> = HashMap::new();
    for doc_id in doc_ids {
        let Some(doc) = corpus.doc(doc_id) else { continue };
        let compare: Vec<usize> = match &settings.compare_segs {
            Some(list) => list
                .iter()
                .copied()
                .filter(|&i| i > 0 && i < doc.segments.len())
                .collect(),
            None => (1..doc.segments.len()).collect(),
        };
        if compare.is_empty() {
            continue;
        }
        let cats = categorize_terms(doc, &compare)?;
        let support = doc.segments[0].rep.len().max(1) as f64;
        cat_rows.push(format!(
            "{doc_id},{},{},{:.6},{},{:.6},{},{:.6}",
            compare.len(),
            cats.unique.len(),
            cats.unique.len() as f64 / support,
            cats.intersection_union().len(),
            cats.intersection_union().len() as f64 / support,
            cats.global_.len(),
            cats.global_.len() as f64 / support,
        ));
        categories.insert(doc.doc_id.as_str(), cats);
    }
    let mut cats_file = std::io::BufWriter::new(
        std::fs::File::create(out_dir.join("term_categories.csv"))
            .context("cannot write term_categories.csv")?,
    );
    writeln!(cats_file, "# {header}")?;
    writeln!(
        cats_file,
        "doc_id,segs_compared,unique_terms,unique_frac_of_seg0_support,intersection_terms,intersection_frac_of_seg0_support,global_terms,global_frac_of_seg0_support"
    )?;
    for row in &cat_rows {
        writeln!(cats_file, "{row}")?;
    }
    cats_file.flush()?;

    // per-pair influence of the categories on the first-segment score
    let mut influence_rows: Vec<String> = Vec::new();
    let mut sums = Influence {
        unique: 0.0,
        intersection: 0.0,
        global_: 0.0,
        residue: 0.0,
    };
    let mut influence_pairs = 0usize;
    let mut zero_score_pairs = 0usize;
    for (qid, doc_id) in &pairs {
        let (Some(q_rep), Some(doc)) = (query_reps.get(qid), corpus.doc(doc_id)) else {
            continue;
        };
        let Some(cats) = categories.get(doc_id.as_str()) else {
            continue;
        };
        match term_influence(qid, q_rep, doc, cats) {
            Ok(inf) => {
                influence_rows.push(format!(
                    "{qid},{doc_id},{:.6},{:.6},{:.6},{:.6}",
                    inf.unique, inf.intersection, inf.global_, inf.residue
                ));
                sums.unique += inf.unique;
                sums.intersection += inf.intersection;
                sums.global_ += inf.global_;
                sums.residue += inf.residue;
                influence_pairs += 1;
            }
            Err(segrank_core::Error::ZeroScore { .. }) => zero_score_pairs += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let mut inf_file = std::io::BufWriter::new(
        std::fs::File::create(out_dir.join("term_influence.csv"))
            .context("cannot write term_influence.csv")?,
    );
    writeln!(inf_file, "# {header}")?;
    writeln!(inf_file, "qid,doc_id,pct_unique,pct_intersection,pct_global,residue")?;
    for row in &influence_rows {
        writeln!(inf_file, "{row}")?;
    }
    inf_file.flush()?;
    if influence_pairs > 0 {
        let n = influence_pairs as f64;
        println!(
            "influence means over {influence_pairs} pairs ({zero_score_pairs} zero-score skipped): unique {:.4}, intersection {:.4}, global {:.4}",
            sums.unique / n,
            sums.intersection / n,
            sums.global_ / n
        );
    }

    if settings.plot {
        let labels: Vec<String> = all.counts.keys().map(|i| format!("seg {i}")).collect();
        let values: Vec<f64> = all.counts.values().map(|&c| c as f64).collect();
        write_bar_chart(
            &out_dir.join("histogram_all.svg"),
            "highest-scoring segment (all pairs)",
            &labels,
            &values,
        )?;
        if let Some((report, _)) = &relevant {
            let labels: Vec<String> = report.counts.keys().map(|i| format!("seg {i}")).collect();
            let values: Vec<f64> = report.counts.values().map(|&c| c as f64).collect();
            write_bar_chart(
                &out_dir.join("histogram_relevant.svg"),
                "highest-scoring segment (relevant pairs)",
                &labels,
                &values,
            )?;
        }
        if influence_pairs > 0 {
            let n = influence_pairs as f64;
            write_bar_chart(
                &out_dir.join("term_influence_mean.svg"),
                "mean influence on first-segment score",
                &["unique".into(), "intersection".into(), "global".into()],
                &[sums.unique / n, sums.intersection / n, sums.global_ / n],
            )?;
        }
    }
    Ok(())
}

fn write_histogram(
    out_dir: &std::path::Path,
    name: &str,
    header: &str,
    counts: &std::collections::BTreeMap<usize, u64>,
) -> anyhow::Result<()> {
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(out_dir.join(name)).with_context(|| format!("cannot write {name}"))?,
    );
    writeln!(file, "# {header}")?;
    writeln!(file, "seg_index,count")?;
    for (idx, count) in counts {
        writeln!(file, "{idx},{count}")?;
    }
    file.flush()?;
    Ok(())
}
