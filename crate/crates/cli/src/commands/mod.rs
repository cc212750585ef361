//! Subcommand implementations. Each takes resolved [`Settings`] and is
//! callable directly from tests.

mod analyze;
mod evaluate;
mod index;
mod rerank;
mod retrieve;
mod split;
mod train;

pub use analyze::cmd_analyze;
pub use evaluate::cmd_evaluate;
pub use index::cmd_index;
pub use rerank::cmd_rerank;
pub use retrieve::cmd_retrieve;
pub use split::cmd_split;
pub use train::cmd_train;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::config::Settings;

/// Returns a required path setting or an error naming the missing artifact.
fn require<'a>(value: &'a Option<PathBuf>, what: &str, flag: &str) -> anyhow::Result<&'a Path> {
    match value {
        Some(p) => Ok(p.as_path()),
        None => bail!("missing {what}; pass {flag} or set it in the config file"),
    }
}

fn require_exists<'a>(
    value: &'a Option<PathBuf>,
    what: &str,
    flag: &str,
) -> anyhow::Result<&'a Path> {
    let path = require(value, what, flag)?;
    if !path.exists() {
        bail!("{what} not found at {}", path.display());
    }
    Ok(path)
}

fn load_corpus(settings: &Settings) -> anyhow::Result<segrank_core::corpus::Corpus> {
    let path = require_exists(&settings.corpus, "corpus", "--corpus")?;
    segrank_core::corpus::read_corpus(path)
        .with_context(|| format!("failed to read corpus {}", path.display()))
}

fn load_queries(
    settings: &Settings,
    vocab: &segrank_core::model::Vocabulary,
) -> anyhow::Result<Vec<segrank_core::model::Query>> {
    let path = require_exists(&settings.queries, "queries", "--queries")?;
    segrank_core::corpus::read_queries(path, vocab)
        .with_context(|| format!("failed to read queries {}", path.display()))
}

fn load_qrels(settings: &Settings) -> anyhow::Result<segrank_core::eval::Qrels> {
    let path = require_exists(&settings.qrels, "qrels", "--qrels")?;
    segrank_core::eval::Qrels::read_from(path)
        .with_context(|| format!("failed to read qrels {}", path.display()))
}

fn load_run(path: &Path) -> anyhow::Result<segrank_core::eval::RunFile> {
    segrank_core::eval::RunFile::read_from(path)
        .with_context(|| format!("failed to read run file {}", path.display()))
}
