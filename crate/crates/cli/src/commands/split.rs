use std::collections::BTreeMap;
use std::io::Write;

use anyhow::Context;

use segrank_core::analysis::split_by_length;
use segrank_core::eval::RunFile;

use super::{load_corpus, load_qrels, require, require_exists};
use crate::config::{header_line, Settings};

/// Splits queries by the segment count of their relevant documents and
/// writes per-side query lists, filtered candidate runs, and statistics.
pub fn cmd_split(settings: &Settings) -> anyhow::Result<()> {
    let candidates_path = require_exists(&settings.candidates, "candidate list", "--candidates")?;
    let out_dir = require(&settings.out_dir, "output directory", "--out-dir")?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let corpus = load_corpus(settings)?;
    let qrels = load_qrels(settings)?;
    let candidates = super::load_run(candidates_path)?;

    let candidate_map: BTreeMap<String, Vec<(String, f64)>> = candidates
        .queries()
        .map(|qid| {
            let ranked = candidates
                .ranking(qid)
                .unwrap_or_default()
                .iter()
                .map(|e| (e.doc_id.clone(), e.score))
                .collect();
            (qid.to_string(), ranked)
        })
        .collect();
    let seg_counts = corpus.seg_counts();
    let split = split_by_length(&qrels, &seg_counts, settings.seg_threshold, &candidate_map)?;

    let hash = settings.config_hash("split");
    let header = header_line(&hash, "split");
    write_qid_list(out_dir, "short_qids.txt", &header, &split.short_qids)?;
    write_qid_list(out_dir, "long_qids.txt", &header, &split.long_qids)?;

    let mut short_run = RunFile::new(settings.run_tag.clone());
    for (qid, ranked) in &split.short_candidates {
        short_run.set_ranking(qid, ranked.clone())?;
    }
    short_run.write_to(&out_dir.join("candidates_short.trec"), Some(&header))?;
    let mut long_run = RunFile::new(settings.run_tag.clone());
    for (qid, ranked) in &split.long_candidates {
        long_run.set_ranking(qid, ranked.clone())?;
    }
    long_run.write_to(&out_dir.join("candidates_long.trec"), Some(&header))?;

    let short_entries: usize = split.short_candidates.values().map(Vec::len).sum();
    let long_entries: usize = split.long_candidates.values().map(Vec::len).sum();
    let mut stats = std::io::BufWriter::new(
        std::fs::File::create(out_dir.join("split_stats.csv"))
            .context("cannot write split_stats.csv")?,
    );
    writeln!(stats, "# {header}")?;
    writeln!(stats, "side,queries,candidate_entries")?;
    writeln!(stats, "short,{},{}", split.short_qids.len(), short_entries)?;
    writeln!(stats, "long,{},{}", split.long_qids.len(), long_entries)?;
    stats.flush()?;

    println!(
        "split at threshold {}: {} short queries ({} candidates), {} long queries ({} candidates)",
        settings.seg_threshold,
        split.short_qids.len(),
        short_entries,
        split.long_qids.len(),
        long_entries
    );
    Ok(())
}

fn write_qid_list(
    out_dir: &std::path::Path,
    name: &str,
    header: &str,
    qids: &std::collections::BTreeSet<String>,
) -> anyhow::Result<()> {
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(out_dir.join(name)).with_context(|| format!("cannot write {name}"))?,
    );
    writeln!(file, "# {header}")?;
    for qid in qids {
        writeln!(file, "{qid}")?;
    }
    file.flush()?;
    Ok(())
}
