use anyhow::{bail, Context};

use segrank_core::index::InvertedIndex;

use super::{load_corpus, require};
use crate::config::Settings;

/// Builds and persists the inverted index (plus the vocabulary) from a
/// segment corpus, printing a build report.
pub fn cmd_index(settings: &Settings) -> anyhow::Result<()> {
    let index_dir = require(&settings.index_dir, "index directory", "--index-dir")?;
    if index_dir.join("meta.json").exists() && !settings.force {
        bail!(
            "index already exists at {}; pass --force to rebuild",
            index_dir.display()
        );
    }
    let corpus = load_corpus(settings)?;
    let index = InvertedIndex::build(corpus.vocab().len(), corpus.segments())
        .context("failed to build index")?;
    index
        .save(index_dir)
        .with_context(|| format!("failed to write index to {}", index_dir.display()))?;
    corpus
        .vocab()
        .write_to(&index_dir.join("vocab.txt"))
        .context("failed to write vocabulary")?;

    let meta = index.meta();
    let hash = settings.config_hash("index");
    println!("config {hash}");
    println!("indexed {} documents", corpus.docs().len());
    println!("segments: {}", meta.segment_count);
    println!("vocabulary terms: {}", meta.vocab_size);
    println!("posting terms: {}", meta.posting_terms);
    println!("total postings: {}", meta.total_postings);
    Ok(())
}
