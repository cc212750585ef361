use anyhow::{bail, Context};
use rayon::prelude::*;

use segrank_core::eval::RunFile;
use segrank_core::index::InvertedIndex;
use segrank_core::model::Vocabulary;

use super::{require, require_exists};
use crate::config::{header_line, Settings};

/// First-stage retrieval: top-k segments per query, collapsed into a
/// document candidate list in TREC run format.
pub fn cmd_retrieve(settings: &Settings) -> anyhow::Result<()> {
    let index_dir = require_exists(&settings.index_dir, "index directory", "--index-dir")?;
    if !index_dir.join("meta.json").exists() {
        bail!(
            "no index at {}; run `segrank index` first",
            index_dir.display()
        );
    }
    let output = require(&settings.output, "output path", "--output")?;
    let index = InvertedIndex::load(index_dir)
        .with_context(|| format!("failed to load index from {}", index_dir.display()))?;
    let vocab = Vocabulary::read_from(&index_dir.join("vocab.txt"))
        .context("failed to read vocabulary")?;
    let queries = super::load_queries(settings, &vocab)?;

    let pool = crate::thread_pool(settings.threads)?;
    let rankings: Vec<(String, Vec<(String, f64)>)> = pool.install(|| {
        queries
            .par_iter()
            .map(|q| {
                let top = index.retrieve_topk_segments(&q.rep(), settings.topk_segments);
                let candidates = index.doc_candidates(&top, settings.candidate_depth);
                (q.qid.clone(), candidates)
            })
            .collect()
    });

    let mut run = RunFile::new(settings.run_tag.clone());
    for (qid, ranked) in rankings {
        run.set_ranking(&qid, ranked)
            .with_context(|| format!("bad ranking for query {qid}"))?;
    }
    let hash = settings.config_hash("retrieve");
    run.write_to(output, Some(&header_line(&hash, "retrieve")))
        .with_context(|| format!("failed to write {}", output.display()))?;
    println!(
        "retrieved candidates for {} queries -> {}",
        run.query_count(),
        output.display()
    );
    Ok(())
}
