//! Learned sparse retrieval for long documents.
//!
//! Documents are split into fixed-length segments, each carrying a
//! vocabulary-level sparse representation and (optionally) a per-position
//! translation matrix of term logits. On top of that this crate provides:
//!
//! - segment aggregation baselines (score-max, rep-max/sum/mean),
//! - sequential-dependence scoring over sparse logits (exact and soft
//!   variants, with n-gram and proximity-window potentials),
//! - an exact inverted index for first-stage top-k segment retrieval and
//!   document candidate generation,
//! - BM25 / BM25-SDM / RM3 lexical baselines,
//! - pairwise fitting of the potential combination weights,
//! - TREC-style run/qrels handling with MRR, nDCG and recall,
//! - diagnostic analyses of segment and term contributions.
//!
//! All types are immutable after construction and all scoring functions are
//! pure, so callers may fan out per query-document pair without locking.

pub mod aggregation;
pub mod analysis;
pub mod bm25;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod model;
pub mod oracle;
pub mod sdm;
pub mod training;

pub use error::{Error, Result};
