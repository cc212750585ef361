//! Shared fixtures for the pipeline and acceptance tests: a tiny
//! hand-written corpus and a seeded synthetic corpus whose relevant
//! documents contain adjacent query bigrams while distractors carry the
//! same terms scattered beyond the proximity window.

// each test binary uses a subset of these helpers
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

/// Runs the segrank binary, panicking with stderr on failure.
pub fn segrank_ok(args: &[&str]) -> Output {
    let out = segrank(args);
    assert!(
        out.status.success(),
        "segrank {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn segrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segrank"))
        .args(args)
        .output()
        .expect("failed to spawn segrank")
}

/// Two documents with diagonal-plus-expansion logits, three segments total.
/// d1 seg0 is the canonical [dog, cat, ran] fixture.
pub fn tiny_corpus_jsonl() -> String {
    [
        json!({
            "doc_id": "d1", "seg": 0, "tokens": ["dog", "cat", "ran"],
            "logits": [
                {"cat": 0.1, "dog": 0.9},
                {"cat": 0.8, "dog": 0.2},
                {"dog": 0.1, "ran": 0.7}
            ]
        }),
        json!({
            "doc_id": "d1", "seg": 1, "tokens": ["ran", "far"],
            "logits": [{"ran": 0.6}, {"far": 0.5}]
        }),
        json!({
            "doc_id": "d2", "seg": 0, "tokens": ["cat", "cat"],
            "logits": [{"cat": 0.5}, {"cat": 0.45}]
        }),
    ]
    .iter()
    .map(|v| v.to_string())
    .collect::<Vec<_>>()
    .join("\n")
}

pub fn tiny_queries_jsonl() -> String {
    [
        json!({"qid": "q1", "terms": [["cat", 2.0], ["dog", 1.0]]}),
        json!({"qid": "q2", "terms": [["ran", 1.0]]}),
    ]
    .iter()
    .map(|v| v.to_string())
    .collect::<Vec<_>>()
    .join("\n")
}

pub struct SynthCorpus {
    pub corpus_jsonl: String,
    pub queries_jsonl: String,
    pub qrels: String,
    pub num_docs: usize,
}

const SEG_LEN: usize = 48;
const FILLER_TERMS: usize = 150;

/// Builds a corpus of `num_queries * (1 + full + partial)` documents. Per
/// query: one relevant document with the query bigram adjacent in its
/// first segment, `full` distractors with both terms separated beyond any
/// width-8 window, and `partial` distractors holding only one term.
/// Document ids are shuffled so lexicographic tie-breaks are uncorrelated
/// with relevance.
pub fn synth_bigram_corpus(
    num_queries: usize,
    full: usize,
    partial: usize,
    seed: u64,
) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = |rng: &mut ChaCha8Rng| format!("f{:03}", rng.gen_range(0..FILLER_TERMS));

    // (queries they belong to, segment lines without doc ids yet)
    struct ProtoDoc {
        segments: Vec<Vec<String>>,
        relevant_for: Option<usize>,
    }
    let mut protos: Vec<ProtoDoc> = Vec::new();
    let mut queries_jsonl = Vec::new();
    for qi in 0..num_queries {
        let qa = format!("qa{qi:03}");
        let qb = format!("qb{qi:03}");
        queries_jsonl.push(
            json!({"qid": format!("q{qi:03}"), "terms": [[qa.clone(), 1.0], [qb.clone(), 1.0]]})
                .to_string(),
        );

        let make_doc = |kind: u8, rng: &mut ChaCha8Rng| -> ProtoDoc {
            let num_segs = rng.gen_range(1..=5usize);
            let mut segments = Vec::with_capacity(num_segs);
            for seg in 0..num_segs {
                let mut tokens: Vec<String> = (0..SEG_LEN).map(|_| filler(rng)).collect();
                if seg == 0 {
                    let p = rng.gen_range(3..20usize);
                    match kind {
                        0 => {
                            // adjacent bigram
                            tokens[p] = qa.clone();
                            tokens[p + 1] = qb.clone();
                        }
                        1 => {
                            // both terms, scattered beyond the window
                            let gap = rng.gen_range(12..26usize);
                            tokens[p] = qa.clone();
                            tokens[p + gap] = qb.clone();
                        }
                        _ => {
                            // one term only
                            tokens[p] = if rng.gen_bool(0.5) { qa.clone() } else { qb.clone() };
                        }
                    }
                }
                segments.push(tokens);
            }
            ProtoDoc {
                segments,
                relevant_for: (kind == 0).then_some(qi),
            }
        };
        protos.push(make_doc(0, &mut rng));
        for _ in 0..full {
            protos.push(make_doc(1, &mut rng));
        }
        for _ in 0..partial {
            protos.push(make_doc(2, &mut rng));
        }
    }

    protos.shuffle(&mut rng);
    let mut corpus_lines = Vec::new();
    let mut qrels_lines = Vec::new();
    for (di, proto) in protos.iter().enumerate() {
        let doc_id = format!("d{di:04}");
        if let Some(qi) = proto.relevant_for {
            qrels_lines.push(format!("q{qi:03} 0 {doc_id} 1"));
        }
        for (seg, tokens) in proto.segments.iter().enumerate() {
            let logits: Vec<serde_json::Value> = tokens
                .iter()
                .map(|tok| {
                    // self translation plus one weak filler expansion
                    let expansion = filler(&mut rng);
                    if expansion == *tok {
                        json!({ (tok.as_str()): 1.0 })
                    } else {
                        json!({ (tok.as_str()): 1.0, (expansion.as_str()): 0.125 })
                    }
                })
                .collect();
            corpus_lines.push(
                json!({"doc_id": doc_id.as_str(), "seg": seg, "tokens": tokens, "logits": logits})
                    .to_string(),
            );
        }
    }
    qrels_lines.sort();

    SynthCorpus {
        corpus_jsonl: corpus_lines.join("\n"),
        queries_jsonl: queries_jsonl.join("\n"),
        qrels: qrels_lines.join("\n"),
        num_docs: protos.len(),
    }
}
