//! TREC-style evaluation: qrels and run files, MRR@k, nDCG@k, Recall@k.
//!
//! File formats follow the TREC conventions, with one extension: lines
//! starting with `#` are treated as comments (run files written by this
//! crate carry a config-hash header).
//!
//! Metric conventions match common trec_eval behavior: a metric averages
//! over the run's queries that have at least one relevant judgment; run
//! queries that are unjudged, or judged with no relevant document, are
//! excluded and counted as warnings. Averages are taken in sorted query
//! order so results do not depend on input ordering.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Graded relevance judgments: (qid, doc_id) -> grade >= 0.
#[derive(Debug, Clone, Default)]
pub struct Qrels {
    grades: BTreeMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Qrels::default()
    }

    pub fn insert(&mut self, qid: &str, doc_id: &str, grade: u32) {
        self.grades
            .entry(qid.to_string())
            .or_default()
            .insert(doc_id.to_string(), grade);
    }

    pub fn grade(&self, qid: &str, doc_id: &str) -> Option<u32> {
        self.grades.get(qid)?.get(doc_id).copied()
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    pub fn judged(&self, qid: &str) -> Option<&HashMap<String, u32>> {
        self.grades.get(qid)
    }

    /// Documents with grade >= threshold for a query.
    pub fn relevant_docs(&self, qid: &str, threshold: u32) -> Vec<&str> {
        let mut docs: Vec<&str> = self
            .grades
            .get(qid)
            .map(|m| {
                m.iter()
                    .filter(|&(_, &g)| g >= threshold)
                    .map(|(d, _)| d.as_str())
                    .collect()
            })
            .unwrap_or_default();
        docs.sort_unstable();
        docs
    }

    /// Parses whitespace-separated `qid 0 doc_id grade` lines.
    pub fn read_from(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut qrels = Qrels::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_err = |msg: String| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg,
            };
            if fields.len() != 4 {
                return Err(parse_err(format!(
                    "expected 4 fields `qid 0 doc_id grade`, found {}",
                    fields.len()
                )));
            }
            let grade: u32 = fields[3]
                .parse()
                .map_err(|_| parse_err(format!("bad relevance grade {:?}", fields[3])))?;
            qrels.insert(fields[0], fields[2], grade);
        }
        Ok(qrels)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (qid, docs) in &self.grades {
            let mut sorted: Vec<(&String, &u32)> = docs.iter().collect();
            sorted.sort();
            for (doc_id, grade) in sorted {
                writeln!(out, "{qid} 0 {doc_id} {grade}")?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
}

/// A ranked retrieval run: per query, entries with contiguous 1-based
/// ranks, non-increasing scores, and unique documents.
#[derive(Debug, Clone)]
pub struct RunFile {
    pub tag: String,
    rankings: BTreeMap<String, Vec<RunEntry>>,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        RunFile {
            tag: tag.into(),
            rankings: BTreeMap::new(),
        }
    }

    /// Installs a ranking from (doc_id, score) pairs already ordered by
    /// decreasing score; ranks are assigned 1..n.
    pub fn set_ranking(&mut self, qid: &str, ranked: Vec<(String, f64)>) -> Result<()> {
        let mut entries = Vec::with_capacity(ranked.len());
        let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
        let mut prev = f64::INFINITY;
        for (rank0, (doc_id, score)) in ranked.into_iter().enumerate() {
            if !seen.insert(doc_id.clone()) {
                return Err(Error::InvalidRun(format!(
                    "duplicate document {doc_id} for query {qid}"
                )));
            }
            if score > prev {
                return Err(Error::InvalidRun(format!(
                    "scores must be non-increasing for query {qid}"
                )));
            }
            prev = score;
            entries.push(RunEntry {
                doc_id,
                rank: rank0 + 1,
                score,
            });
        }
        self.rankings.insert(qid.to_string(), entries);
        Ok(())
    }

    pub fn ranking(&self, qid: &str) -> Option<&[RunEntry]> {
        self.rankings.get(qid).map(Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    pub fn query_count(&self) -> usize {
        self.rankings.len()
    }

    /// Parses `qid Q0 doc_id rank score tag` lines, skipping `#` comments,
    /// and validates rank contiguity, score monotonicity and document
    /// uniqueness per query.
    pub fn read_from(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut tag = String::new();
        let mut per_query: BTreeMap<String, Vec<RunEntry>> = BTreeMap::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_err = |msg: String| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg,
            };
            if fields.len() != 6 {
                return Err(parse_err(format!(
                    "expected 6 fields `qid Q0 doc_id rank score tag`, found {}",
                    fields.len()
                )));
            }
            let rank: usize = fields[3]
                .parse()
                .map_err(|_| parse_err(format!("bad rank {:?}", fields[3])))?;
            let score: f64 = fields[4]
                .parse()
                .map_err(|_| parse_err(format!("bad score {:?}", fields[4])))?;
            tag = fields[5].to_string();
            per_query.entry(fields[0].to_string()).or_default().push(RunEntry {
                doc_id: fields[2].to_string(),
                rank,
                score,
            });
        }
        let mut run = RunFile::new(tag);
        for (qid, mut entries) in per_query {
            entries.sort_by_key(|e| e.rank);
            for (i, e) in entries.iter().enumerate() {
                if e.rank != i + 1 {
                    return Err(Error::InvalidRun(format!(
                        "query {qid}: ranks are not contiguous from 1"
                    )));
                }
            }
            run.set_ranking(&qid, entries.into_iter().map(|e| (e.doc_id, e.score)).collect())?;
        }
        Ok(run)
    }

    /// Writes TREC lines with six-decimal scores, preceded by optional `#`
    /// header comments.
    pub fn write_to(&self, path: &Path, header: Option<&str>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        if let Some(header) = header {
            for line in header.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        for (qid, entries) in &self.rankings {
            for e in entries {
                writeln!(
                    out,
                    "{qid} Q0 {} {} {:.6} {}",
                    e.doc_id, e.rank, e.score, self.tag
                )?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// A metric average plus bookkeeping on which queries contributed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOutcome {
    pub value: f64,
    /// Queries that entered the average.
    pub evaluated: usize,
    /// Run queries excluded for having no relevant judgment.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainScheme {
    /// gain(g) = g (trec_eval convention).
    Linear,
    /// gain(g) = 2^g - 1.
    Exponential,
}

impl GainScheme {
    fn gain(&self, grade: u32) -> f64 {
        match self {
            GainScheme::Linear => f64::from(grade),
            GainScheme::Exponential => (2.0f64).powi(grade as i32) - 1.0,
        }
    }
}

fn evaluable_queries<'a>(run: &'a RunFile, qrels: &Qrels, threshold: u32) -> (Vec<&'a str>, usize) {
    let mut eligible = Vec::new();
    let mut skipped = 0;
    for qid in run.queries() {
        if qrels.relevant_docs(qid, threshold).is_empty() {
            skipped += 1;
        } else {
            eligible.push(qid);
        }
    }
    (eligible, skipped)
}

/// Mean reciprocal rank of the first document with grade >= threshold
/// within the top k; a query with no relevant document in the top k
/// contributes zero.
pub fn mrr_at_k(run: &RunFile, qrels: &Qrels, k: usize, threshold: u32) -> MetricOutcome {
    let (queries, skipped) = evaluable_queries(run, qrels, threshold);
    let mut total = 0.0;
    for qid in &queries {
        let entries = run.ranking(qid).expect("query came from the run");
        for e in entries.iter().take(k) {
            if qrels.grade(qid, &e.doc_id).unwrap_or(0) >= threshold {
                total += 1.0 / e.rank as f64;
                break;
            }
        }
    }
    MetricOutcome {
        value: if queries.is_empty() { 0.0 } else { total / queries.len() as f64 },
        evaluated: queries.len(),
        skipped,
    }
}

/// Mean nDCG@k with `DCG = sum gain(rel_i) / log2(i + 1)`; the ideal DCG
/// ranks all judged documents by grade.
pub fn ndcg_at_k(run: &RunFile, qrels: &Qrels, k: usize, gain: GainScheme) -> MetricOutcome {
    let (queries, skipped) = evaluable_queries(run, qrels, 1);
    let mut total = 0.0;
    for qid in &queries {
        let entries = run.ranking(qid).expect("query came from the run");
        let mut dcg = 0.0;
        for (i, e) in entries.iter().take(k).enumerate() {
            let grade = qrels.grade(qid, &e.doc_id).unwrap_or(0);
            if grade > 0 {
                dcg += gain.gain(grade) / ((i + 2) as f64).log2();
            }
        }
        let mut grades: Vec<u32> = qrels
            .judged(qid)
            .map(|m| m.values().copied().filter(|&g| g > 0).collect())
            .unwrap_or_default();
        grades.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 = grades
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, &g)| gain.gain(g) / ((i + 2) as f64).log2())
            .sum();
        total += dcg / idcg;
    }
    MetricOutcome {
        value: if queries.is_empty() { 0.0 } else { total / queries.len() as f64 },
        evaluated: queries.len(),
        skipped,
    }
}

/// Mean fraction of relevant documents (grade >= threshold) retrieved in
/// the top k.
pub fn recall_at_k(run: &RunFile, qrels: &Qrels, k: usize, threshold: u32) -> MetricOutcome {
    let (queries, skipped) = evaluable_queries(run, qrels, threshold);
    let mut total = 0.0;
    for qid in &queries {
        let relevant = qrels.relevant_docs(qid, threshold);
        let entries = run.ranking(qid).expect("query came from the run");
        let hit = entries
            .iter()
            .take(k)
            .filter(|e| qrels.grade(qid, &e.doc_id).unwrap_or(0) >= threshold)
            .count();
        total += hit as f64 / relevant.len() as f64;
    }
    MetricOutcome {
        value: if queries.is_empty() { 0.0 } else { total / queries.len() as f64 },
        evaluated: queries.len(),
        skipped,
    }
}
