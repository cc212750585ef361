use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use segrank_cli::commands;
use segrank_cli::config::{FileConfig, Method, Overrides, Settings};

/// Sparse retrieval over segmented long documents: indexing, candidate
/// generation, segment-aware reranking, weight training, evaluation and
/// diagnostics.
#[derive(Parser)]
#[command(name = "segrank", version)]
struct Cli {
    /// JSON run-config file; command-line flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master random seed (default 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-query stages; results are independent of the
    /// thread count
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the inverted segment index from a JSONL corpus
    Index(IndexArgs),
    /// First-stage retrieval: top-k segments into document candidates
    Retrieve(RetrieveArgs),
    /// Rerank a candidate list with an aggregation, SDM or BM25 method
    Rerank(RerankArgs),
    /// Fit the SDM combination weights on a candidate list with judgments
    TrainLambdas(TrainArgs),
    /// Score a run file against qrels (MRR, nDCG, recall)
    Evaluate(EvaluateArgs),
    /// Segment and term diagnostics over a candidate list
    Analyze(AnalyzeArgs),
    /// Split queries by relevant-document length and filter candidates
    Split(SplitArgs),
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    index_dir: Option<PathBuf>,
    /// Rebuild even if the index directory already holds an index
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    index_dir: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Segments retrieved per query before document collapse
    #[arg(long)]
    k: Option<usize>,
    /// Unique documents kept per query
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    run_tag: Option<String>,
}

#[derive(Args)]
struct SdmFlags {
    /// n-gram width for the ordered and proximity potentials
    #[arg(long)]
    n: Option<usize>,
    /// Proximity window width
    #[arg(long)]
    prx: Option<usize>,
    /// Leading segments scored per document
    #[arg(long)]
    segs: Option<usize>,
    /// SDM variant: exact (self-translation only) or soft
    #[arg(long)]
    variant: Option<String>,
    /// Confine n-gram and proximity windows within segments
    #[arg(long)]
    per_segment_windows: bool,
    #[arg(long)]
    lambda_st: Option<f64>,
    #[arg(long)]
    lambda_so: Option<f64>,
    #[arg(long)]
    lambda_su: Option<f64>,
}

#[derive(Args)]
struct Bm25Flags {
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Unigram/ordered/unordered feature weights, e.g. `0.85,0.1,0.05`
    #[arg(long)]
    sdm_weights: Option<String>,
    /// Unordered co-occurrence window width
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    rm3_alpha: Option<f64>,
    #[arg(long)]
    fb_docs: Option<usize>,
    #[arg(long)]
    fb_terms: Option<usize>,
}

#[derive(Args)]
struct RerankArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Scoring method
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Aggregation shorthand; equivalent to --method with the same value
    #[arg(long, value_enum)]
    agg: Option<Method>,
    #[command(flatten)]
    sdm: SdmFlags,
    #[command(flatten)]
    bm25: Bm25Flags,
    #[arg(long)]
    run_tag: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Path of the emitted run-config carrying the fitted lambdas
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for the training log (defaults next to --output)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Project the lambdas to be non-negative after each step
    #[arg(long)]
    nonneg: bool,
    /// Minimum grade counting as relevant
    #[arg(long)]
    rel_threshold: Option<u32>,
    #[command(flatten)]
    sdm: SdmFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Optional CSV output
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    mrr_k: Option<usize>,
    #[arg(long)]
    ndcg_k: Option<usize>,
    #[arg(long)]
    recall_k: Option<usize>,
    /// Use exponential nDCG gain (2^grade - 1) instead of linear
    #[arg(long)]
    exp_gain: bool,
    #[arg(long)]
    rel_threshold: Option<u32>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Segment indices compared against the first segment, e.g. `1,2,5`
    /// (default: all later segments)
    #[arg(long)]
    compare_segs: Option<String>,
    /// Also emit SVG charts
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Documents with at most this many segments count as short
    #[arg(long)]
    seg_threshold: Option<usize>,
    #[arg(long)]
    run_tag: Option<String>,
}

fn parse_triple(text: &str) -> anyhow::Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        anyhow::bail!("expected three comma-separated values, got {text:?}");
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .with_context(|| format!("bad number {part:?}"))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn parse_usize_list(text: &str) -> anyhow::Result<Vec<usize>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .with_context(|| format!("bad segment index {p:?}"))
        })
        .collect()
}

impl SdmFlags {
    fn apply(self, o: &mut Overrides) {
        o.n = self.n;
        o.prx = self.prx;
        o.segs = self.segs;
        o.variant = self.variant;
        o.per_segment_windows = self.per_segment_windows;
        o.lambda_st = self.lambda_st;
        o.lambda_so = self.lambda_so;
        o.lambda_su = self.lambda_su;
    }
}

impl Bm25Flags {
    fn apply(self, o: &mut Overrides) -> anyhow::Result<()> {
        o.k1 = self.k1;
        o.b = self.b;
        if let Some(weights) = &self.sdm_weights {
            let (w_t, w_o, w_u) = parse_triple(weights)?;
            o.w_t = Some(w_t);
            o.w_o = Some(w_o);
            o.w_u = Some(w_u);
        }
        o.window = self.window;
        o.rm3_alpha = self.rm3_alpha;
        o.fb_docs = self.fb_docs;
        o.fb_terms = self.fb_terms;
        Ok(())
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut overrides = Overrides {
        seed: cli.seed,
        threads: cli.threads,
        ..Overrides::default()
    };

    let run: fn(&Settings) -> anyhow::Result<()> = match cli.command {
        Command::Index(args) => {
            overrides.corpus = args.corpus;
            overrides.index_dir = args.index_dir;
            overrides.force = args.force;
            commands::cmd_index
        }
        Command::Retrieve(args) => {
            overrides.index_dir = args.index_dir;
            overrides.queries = args.queries;
            overrides.output = args.output;
            overrides.k = args.k;
            overrides.depth = args.depth;
            overrides.run_tag = args.run_tag;
            commands::cmd_retrieve
        }
        Command::Rerank(args) => {
            overrides.corpus = args.corpus;
            overrides.queries = args.queries;
            overrides.candidates = args.candidates;
            overrides.output = args.output;
            overrides.method = args.method;
            overrides.agg = args.agg;
            args.sdm.apply(&mut overrides);
            args.bm25.apply(&mut overrides)?;
            overrides.run_tag = args.run_tag;
            commands::cmd_rerank
        }
        Command::TrainLambdas(args) => {
            overrides.corpus = args.corpus;
            overrides.queries = args.queries;
            overrides.candidates = args.candidates;
            overrides.qrels = args.qrels;
            overrides.output = args.output;
            overrides.out_dir = args.out_dir;
            overrides.lr = args.lr;
            overrides.epochs = args.epochs;
            overrides.nonneg = args.nonneg;
            overrides.rel_threshold = args.rel_threshold;
            args.sdm.apply(&mut overrides);
            commands::cmd_train
        }
        Command::Evaluate(args) => {
            overrides.run = args.run;
            overrides.qrels = args.qrels;
            overrides.output = args.output;
            overrides.mrr_k = args.mrr_k;
            overrides.ndcg_k = args.ndcg_k;
            overrides.recall_k = args.recall_k;
            overrides.exp_gain = args.exp_gain;
            overrides.rel_threshold = args.rel_threshold;
            commands::cmd_evaluate
        }
        Command::Analyze(args) => {
            overrides.corpus = args.corpus;
            overrides.queries = args.queries;
            overrides.candidates = args.candidates;
            overrides.qrels = args.qrels;
            overrides.out_dir = args.out_dir;
            overrides.compare_segs = match &args.compare_segs {
                Some(list) => Some(parse_usize_list(list)?),
                None => None,
            };
            overrides.plot = args.plot;
            commands::cmd_analyze
        }
        Command::Split(args) => {
            overrides.corpus = args.corpus;
            overrides.qrels = args.qrels;
            overrides.candidates = args.candidates;
            overrides.out_dir = args.out_dir;
            overrides.seg_threshold = args.seg_threshold;
            overrides.run_tag = args.run_tag;
            commands::cmd_split
        }
    };

    let settings = Settings::resolve(overrides, file)?;
    run(&settings)
}
