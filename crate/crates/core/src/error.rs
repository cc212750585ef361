//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),

    #[error("translation matrix has {rows} rows but segment has {tokens} tokens")]
    RowCountMismatch { rows: usize, tokens: usize },

    #[error("segment {seg_index} of document {doc_id} has no logits")]
    MissingLogits { doc_id: String, seg_index: usize },

    #[error("duplicate segment ({doc_id}, {seg_index})")]
    DuplicateSegment { doc_id: String, seg_index: usize },

    #[error("invalid document {doc_id}: {msg}")]
    InvalidDocument { doc_id: String, msg: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("oracle scale bounds exceeded: {0}")]
    OracleScale(String),

    #[error("first-segment score is zero for query {qid}, document {doc_id}")]
    ZeroScore { qid: String, doc_id: String },

    #[error("document {doc_id} has no segment at index {seg_index}")]
    MissingSegment { doc_id: String, seg_index: usize },

    #[error("judged documents missing from corpus: {}", .0.join(", "))]
    MissingDocuments(Vec<String>),

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("invalid run file: {0}")]
    InvalidRun(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),
}
