//! Inverted index over segment representations.
//!
//! First-stage retrieval is exhaustive term-at-a-time accumulation: every
//! posting of every query term is scored, so top-k results are exact (no
//! WAND-style pruning). Ties are broken by ascending segment reference so
//! results are deterministic across runs and platforms.
//!
//! On-disk layout (one directory per index):
//! - `postings.bin`: per non-empty term, little-endian
//!   `[term_id: u32][count: u32][delta-encoded segment refs: count * u32]`
//!   `[weights: count * f32]`
//! - `seg_table.tsv`: `segment_ref <TAB> doc_id <TAB> seg_index`
//! - `meta.json`: vocabulary size, segment count, posting stats, format
//!   version
//!
//! Weights are stored as 32-bit floats; corpora whose weights are
//! f32-representable round-trip losslessly.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Segment, SparseVector, OOV_ID};

pub type SegmentRef = u32;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexMeta {
    pub format_version: u32,
    pub vocab_size: usize,
    pub segment_count: usize,
    /// Terms with at least one posting.
    pub posting_terms: usize,
    pub total_postings: usize,
}

#[derive(Debug)]
pub struct InvertedIndex {
    /// Per term id, postings sorted by segment ref with weight > 0.
    postings: Vec<Vec<(SegmentRef, f64)>>,
    /// Segment ref -> (doc_id, seg_index), in ingestion order.
    seg_table: Vec<(String, usize)>,
}

impl InvertedIndex {
    /// Builds an index over segment representations. Segment refs are
    /// assigned in iteration order; duplicate (doc_id, seg_index) pairs are
    /// rejected.
    pub fn build<'a>(
        vocab_size: usize,
        segments: impl IntoIterator<Item = &'a Segment>,
    ) -> Result<Self> {
        let mut postings: Vec<Vec<(SegmentRef, f64)>> = vec![Vec::new(); vocab_size];
        let mut seg_table = Vec::new();
        let mut seen: HashMap<(String, usize), ()> = HashMap::new();
        for seg in segments {
            if seen
                .insert((seg.doc_id.clone(), seg.seg_index), ())
                .is_some()
            {
                return Err(Error::DuplicateSegment {
                    doc_id: seg.doc_id.clone(),
                    seg_index: seg.seg_index,
                });
            }
            let seg_ref = seg_table.len() as SegmentRef;
            seg_table.push((seg.doc_id.clone(), seg.seg_index));
            for (id, w) in seg.rep.iter() {
                if id == OOV_ID || id as usize >= vocab_size {
                    return Err(Error::InvalidIndex(format!(
                        "term id {id} outside vocabulary of size {vocab_size}"
                    )));
                }
                postings[id as usize].push((seg_ref, w));
            }
        }
        Ok(InvertedIndex {
            postings,
            seg_table,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.seg_table.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.postings.len()
    }

    pub fn posting_len(&self, term_id: u32) -> usize {
        self.postings
            .get(term_id as usize)
            .map_or(0, |p| p.len())
    }

    pub fn segment_info(&self, seg_ref: SegmentRef) -> Option<(&str, usize)> {
        self.seg_table
            .get(seg_ref as usize)
            .map(|(doc, idx)| (doc.as_str(), *idx))
    }

    pub fn meta(&self) -> IndexMeta {
        IndexMeta {
            format_version: FORMAT_VERSION,
            vocab_size: self.postings.len(),
            segment_count: self.seg_table.len(),
            posting_terms: self.postings.iter().filter(|p| !p.is_empty()).count(),
            total_postings: self.postings.iter().map(Vec::len).sum(),
        }
    }

    /// Reconstructs one segment representation from the postings.
    pub fn reconstruct_rep(&self, seg_ref: SegmentRef) -> SparseVector {
        let mut pairs = Vec::new();
        for (id, posting) in self.postings.iter().enumerate() {
            if let Ok(pos) = posting.binary_search_by_key(&seg_ref, |&(r, _)| r) {
                pairs.push((id as u32, posting[pos].1));
            }
        }
        SparseVector::from_pairs(pairs).expect("postings hold positive weights")
    }

    /// Exact top-k segments by dot product, ties broken by ascending
    /// segment ref. Only segments with a positive score are returned, so
    /// fewer than `k` results are possible.
    pub fn retrieve_topk_segments(&self, q_rep: &SparseVector, k: usize) -> Vec<(SegmentRef, f64)> {
        assert!(k >= 1, "k must be at least 1");
        let mut acc: HashMap<SegmentRef, f64> = HashMap::new();
        for (id, qw) in q_rep.iter() {
            if let Some(posting) = self.postings.get(id as usize) {
                for &(seg_ref, w) in posting {
                    *acc.entry(seg_ref).or_insert(0.0) += qw * w;
                }
            }
        }
        let mut scored: Vec<(SegmentRef, f64)> =
            acc.into_iter().filter(|&(_, s)| s > 0.0).collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("scores are finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        scored.truncate(k);
        scored
    }

    /// Collapses a ranked segment stream into up to `depth` unique
    /// documents, each scored by its best segment.
    pub fn doc_candidates(
        &self,
        ranked_segments: &[(SegmentRef, f64)],
        depth: usize,
    ) -> Vec<(String, f64)> {
        collapse_candidates(
            ranked_segments.iter().map(|&(seg_ref, score)| {
                let (doc_id, _) = self
                    .segment_info(seg_ref)
                    .expect("ranked segment refs come from this index");
                (doc_id.to_string(), score)
            }),
            depth,
        )
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut postings_out =
            std::io::BufWriter::new(std::fs::File::create(dir.join("postings.bin"))?);
        for (id, posting) in self.postings.iter().enumerate() {
            if posting.is_empty() {
                continue;
            }
            postings_out.write_all(&(id as u32).to_le_bytes())?;
            postings_out.write_all(&(posting.len() as u32).to_le_bytes())?;
            let mut prev: SegmentRef = 0;
            for &(seg_ref, _) in posting {
                postings_out.write_all(&(seg_ref - prev).to_le_bytes())?;
                prev = seg_ref;
            }
            for &(_, w) in posting {
                postings_out.write_all(&(w as f32).to_le_bytes())?;
            }
        }
        postings_out.flush()?;

        let mut table_out =
            std::io::BufWriter::new(std::fs::File::create(dir.join("seg_table.tsv"))?);
        for (seg_ref, (doc_id, seg_index)) in self.seg_table.iter().enumerate() {
            writeln!(table_out, "{seg_ref}\t{doc_id}\t{seg_index}")?;
        }
        table_out.flush()?;

        let meta = self.meta();
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let meta: IndexMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::InvalidIndex(format!(
                "unsupported format version {}",
                meta.format_version
            )));
        }

        let table_path = dir.join("seg_table.tsv");
        let mut seg_table = Vec::with_capacity(meta.segment_count);
        for (lineno, line) in std::fs::read_to_string(&table_path)?.lines().enumerate() {
            let mut fields = line.split('\t');
            let parse_err = |msg: &str| Error::Parse {
                path: table_path.display().to_string(),
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let seg_ref: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("bad segment ref"))?;
            let doc_id = fields.next().ok_or_else(|| parse_err("missing doc id"))?;
            let seg_index: usize = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err("bad segment index"))?;
            if seg_ref != seg_table.len() {
                return Err(parse_err("segment refs must be dense from 0"));
            }
            seg_table.push((doc_id.to_string(), seg_index));
        }

        let mut postings: Vec<Vec<(SegmentRef, f64)>> = vec![Vec::new(); meta.vocab_size];
        let data = std::fs::read(dir.join("postings.bin"))?;
        let mut cursor = &data[..];
        let read_u32 = |cursor: &mut &[u8]| -> Result<u32> {
            let mut buf = [0u8; 4];
            cursor
                .read_exact(&mut buf)
                .map_err(|_| Error::InvalidIndex("truncated postings file".into()))?;
            Ok(u32::from_le_bytes(buf))
        };
        while !cursor.is_empty() {
            let term_id = read_u32(&mut cursor)?;
            let count = read_u32(&mut cursor)? as usize;
            let slot = postings
                .get_mut(term_id as usize)
                .ok_or_else(|| Error::InvalidIndex(format!("term id {term_id} out of range")))?;
            let mut refs = Vec::with_capacity(count);
            let mut prev: SegmentRef = 0;
            for i in 0..count {
                let delta = read_u32(&mut cursor)?;
                // first entry is an absolute ref
                prev = if i == 0 { delta } else { prev + delta };
                refs.push(prev);
            }
            for &seg_ref in &refs {
                let mut buf = [0u8; 4];
                (&mut cursor)
                    .read_exact(&mut buf)
                    .map_err(|_| Error::InvalidIndex("truncated postings file".into()))?;
                let w = f32::from_le_bytes(buf) as f64;
                slot.push((seg_ref, w));
            }
        }
        Ok(InvertedIndex {
            postings,
            seg_table,
        })
    }
}

/// Keeps the first occurrence of each document in a ranked (doc, score)
/// stream until `depth` unique documents are collected, then orders the
/// result by (score desc, doc_id asc).
pub fn collapse_candidates(
    ranked: impl Iterator<Item = (String, f64)>,
    depth: usize,
) -> Vec<(String, f64)> {
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut out: Vec<(String, f64)> = Vec::new();
    for (doc_id, score) in ranked {
        if out.len() >= depth {
            break;
        }
        if seen.insert(doc_id.clone()) {
            out.push((doc_id, score));
        }
    }
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}
