//! Run configuration: JSON config file, flag overrides, and the config
//! hash stamped into every output file.
//!
//! Precedence is flags over config file over built-in defaults. The hash
//! covers the fully resolved settings of the command actually run, so two
//! invocations producing the same hash used the same inputs and
//! parameters.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use segrank_core::aggregation::{AggKind, AggMethod};
use segrank_core::bm25::{Bm25Params, Rm3Params};
use segrank_core::sdm::{Lambdas, SdmConfig, SdmVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ScoreMax,
    RepMax,
    RepSum,
    RepMean,
    ExactSdm,
    SoftSdm,
    Bm25,
    Bm25Sdm,
    Bm25Rm3,
}

impl Method {
    pub fn is_sdm(self) -> bool {
        matches!(self, Method::ExactSdm | Method::SoftSdm)
    }

    pub fn agg_kind(self) -> Option<AggKind> {
        match self {
            Method::ScoreMax => Some(AggKind::ScoreMax),
            Method::RepMax => Some(AggKind::RepMax),
            Method::RepSum => Some(AggKind::RepSum),
            Method::RepMean => Some(AggKind::RepMean),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::ScoreMax => "score-max",
            Method::RepMax => "rep-max",
            Method::RepSum => "rep-sum",
            Method::RepMean => "rep-mean",
            Method::ExactSdm => "exact-sdm",
            Method::SoftSdm => "soft-sdm",
            Method::Bm25 => "bm25",
            Method::Bm25Sdm => "bm25-sdm",
            Method::Bm25Rm3 => "bm25-rm3",
        };
        write!(f, "{name}")
    }
}

/// On-disk run configuration. All keys optional; unknown keys rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    // paths
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub run: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    // method selection
    pub method: Option<Method>,
    // sdm
    pub n: Option<usize>,
    pub prx: Option<usize>,
    pub variant: Option<String>,
    pub num_segments: Option<usize>,
    pub per_segment_windows: Option<bool>,
    pub lambda_st: Option<f64>,
    pub lambda_so: Option<f64>,
    pub lambda_su: Option<f64>,
    // bm25
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub w_t: Option<f64>,
    pub w_o: Option<f64>,
    pub w_u: Option<f64>,
    pub window: Option<usize>,
    pub fb_docs: Option<usize>,
    pub fb_terms: Option<usize>,
    pub alpha: Option<f64>,
    // retrieval
    pub topk_segments: Option<usize>,
    pub candidate_depth: Option<usize>,
    // evaluation
    pub mrr_k: Option<usize>,
    pub ndcg_k: Option<usize>,
    pub recall_k: Option<usize>,
    pub exp_gain: Option<bool>,
    pub rel_threshold: Option<u32>,
    // training
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub nonneg: Option<bool>,
    // analysis / split
    pub compare_segs: Option<Vec<usize>>,
    pub seg_threshold: Option<usize>,
    // misc
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub run_tag: Option<String>,
    /// Provenance of the run that wrote this config, if any.
    pub config_hash: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))
    }
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub run: Option<PathBuf>,
    /// Output destinations do not affect results and stay out of the
    /// config hash, so identical inputs give byte-identical files wherever
    /// they are written.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    pub method: Method,
    pub n: usize,
    pub prx: usize,
    pub num_segments: usize,
    pub per_segment_windows: bool,
    pub lambda_st: f64,
    pub lambda_so: f64,
    pub lambda_su: f64,
    pub k1: f64,
    pub b: f64,
    pub w_t: f64,
    pub w_o: f64,
    pub w_u: f64,
    pub window: usize,
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub alpha: f64,
    pub topk_segments: usize,
    pub candidate_depth: usize,
    pub mrr_k: usize,
    pub ndcg_k: usize,
    pub recall_k: usize,
    pub exp_gain: bool,
    pub rel_threshold: u32,
    pub lr: f64,
    pub epochs: usize,
    pub nonneg: bool,
    pub compare_segs: Option<Vec<usize>>,
    pub seg_threshold: usize,
    pub seed: u64,
    /// Execution knob only; results are thread-count independent, so this
    /// stays out of the config hash.
    #[serde(skip)]
    pub threads: Option<usize>,
    pub run_tag: String,
    #[serde(skip)]
    pub force: bool,
    #[serde(skip)]
    pub plot: bool,
    pub max_seg_len: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let bm25 = Bm25Params::default();
        let rm3 = Rm3Params::default();
        Settings {
            corpus: None,
            queries: None,
            qrels: None,
            index_dir: None,
            candidates: None,
            run: None,
            output: None,
            out_dir: None,
            method: Method::ScoreMax,
            n: 2,
            prx: 8,
            num_segments: 1,
            per_segment_windows: false,
            lambda_st: 1.0,
            lambda_so: 1.0,
            lambda_su: 1.0,
            k1: bm25.k1,
            b: bm25.b,
            w_t: bm25.w_t,
            w_o: bm25.w_o,
            w_u: bm25.w_u,
            window: bm25.window,
            fb_docs: rm3.fb_docs,
            fb_terms: rm3.fb_terms,
            alpha: rm3.alpha,
            topk_segments: 10_000,
            candidate_depth: 200,
            mrr_k: 10,
            ndcg_k: 10,
            recall_k: 200,
            exp_gain: false,
            rel_threshold: 1,
            lr: 0.01,
            epochs: 200,
            nonneg: false,
            compare_segs: None,
            seg_threshold: 2,
            seed: 0,
            threads: None,
            run_tag: "segrank".into(),
            force: false,
            plot: false,
            max_seg_len: 512,
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_path(flag: Option<PathBuf>, file: Option<PathBuf>) -> Option<PathBuf> {
    flag.or(file)
}

impl Settings {
    /// Merges flag-level overrides (left) over a config file (middle) over
    /// defaults.
    pub fn resolve(flags: Overrides, file: FileConfig) -> anyhow::Result<Settings> {
        let d = Settings::default();
        let variant_str = flags
            .variant
            .map(|v| v.to_string())
            .or(file.variant.clone());
        let mut method = pick(flags.method, file.method, d.method);
        if let Some(agg) = flags.agg {
            method = agg;
        }
        // an explicit variant flips the matching sdm method
        if let Some(v) = &variant_str {
            match (v.as_str(), method) {
                ("exact", Method::SoftSdm) => method = Method::ExactSdm,
                ("soft", Method::ExactSdm) => method = Method::SoftSdm,
                ("exact" | "soft", _) => {}
                (other, _) => bail!("unknown variant {other:?}, expected `exact` or `soft`"),
            }
        }
        Ok(Settings {
            corpus: pick_path(flags.corpus, file.corpus),
            queries: pick_path(flags.queries, file.queries),
            qrels: pick_path(flags.qrels, file.qrels),
            index_dir: pick_path(flags.index_dir, file.index_dir),
            candidates: pick_path(flags.candidates, file.candidates),
            run: pick_path(flags.run, file.run),
            output: pick_path(flags.output, file.output),
            out_dir: pick_path(flags.out_dir, file.out_dir),
            method,
            n: pick(flags.n, file.n, d.n),
            prx: pick(flags.prx, file.prx, d.prx),
            num_segments: pick(flags.segs, file.num_segments, d.num_segments),
            per_segment_windows: pick(
                flags.per_segment_windows.then_some(true),
                file.per_segment_windows,
                d.per_segment_windows,
            ),
            lambda_st: pick(flags.lambda_st, file.lambda_st, d.lambda_st),
            lambda_so: pick(flags.lambda_so, file.lambda_so, d.lambda_so),
            lambda_su: pick(flags.lambda_su, file.lambda_su, d.lambda_su),
            k1: pick(flags.k1, file.k1, d.k1),
            b: pick(flags.b, file.b, d.b),
            w_t: pick(flags.w_t, file.w_t, d.w_t),
            w_o: pick(flags.w_o, file.w_o, d.w_o),
            w_u: pick(flags.w_u, file.w_u, d.w_u),
            window: pick(flags.window, file.window, d.window),
            fb_docs: pick(flags.fb_docs, file.fb_docs, d.fb_docs),
            fb_terms: pick(flags.fb_terms, file.fb_terms, d.fb_terms),
            alpha: pick(flags.rm3_alpha, file.alpha, d.alpha),
            topk_segments: pick(flags.k, file.topk_segments, d.topk_segments),
            candidate_depth: pick(flags.depth, file.candidate_depth, d.candidate_depth),
            mrr_k: pick(flags.mrr_k, file.mrr_k, d.mrr_k),
            ndcg_k: pick(flags.ndcg_k, file.ndcg_k, d.ndcg_k),
            recall_k: pick(flags.recall_k, file.recall_k, d.recall_k),
            exp_gain: pick(flags.exp_gain.then_some(true), file.exp_gain, d.exp_gain),
            rel_threshold: pick(flags.rel_threshold, file.rel_threshold, d.rel_threshold),
            lr: pick(flags.lr, file.lr, d.lr),
            epochs: pick(flags.epochs, file.epochs, d.epochs),
            nonneg: pick(flags.nonneg.then_some(true), file.nonneg, d.nonneg),
            compare_segs: flags.compare_segs.or(file.compare_segs),
            seg_threshold: pick(flags.seg_threshold, file.seg_threshold, d.seg_threshold),
            seed: pick(flags.seed, file.seed, d.seed),
            threads: flags.threads.or(file.threads),
            run_tag: pick(flags.run_tag, file.run_tag, d.run_tag),
            force: flags.force,
            plot: flags.plot,
            max_seg_len: d.max_seg_len,
        })
    }

    pub fn sdm_config(&self) -> SdmConfig {
        let variant = match self.method {
            Method::SoftSdm => SdmVariant::Soft,
            _ => SdmVariant::Exact,
        };
        SdmConfig {
            n: self.n,
            prx: self.prx,
            variant,
            num_segments: self.num_segments,
            per_segment_windows: self.per_segment_windows,
        }
    }

    pub fn lambdas(&self) -> Lambdas {
        Lambdas::new(self.lambda_st, self.lambda_so, self.lambda_su)
    }

    pub fn agg_method(&self) -> Option<AggMethod> {
        self.method.agg_kind().map(|kind| AggMethod {
            kind,
            num_segments: self.num_segments,
        })
    }

    pub fn bm25_params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.k1,
            b: self.b,
            w_t: self.w_t,
            w_o: self.w_o,
            w_u: self.w_u,
            window: self.window,
        }
    }

    pub fn rm3_params(&self) -> Rm3Params {
        Rm3Params {
            fb_docs: self.fb_docs,
            fb_terms: self.fb_terms,
            alpha: self.alpha,
        }
    }

    /// Short hex digest over the command name and the resolved settings.
    pub fn config_hash(&self, command: &str) -> String {
        use sha2::{Digest, Sha256};
        let payload = serde_json::to_string(self).expect("settings serialize");
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(b"\n");
        hasher.update(payload.as_bytes());
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..12].to_string()
    }

    /// Serializes the settings back into a config file shape (used by
    /// train-lambdas to emit the fitted lambdas).
    pub fn to_file_config(&self, hash: &str) -> FileConfig {
        FileConfig {
            corpus: self.corpus.clone(),
            queries: self.queries.clone(),
            qrels: self.qrels.clone(),
            index_dir: self.index_dir.clone(),
            candidates: self.candidates.clone(),
            run: self.run.clone(),
            output: None,
            out_dir: None,
            method: Some(self.method),
            n: Some(self.n),
            prx: Some(self.prx),
            variant: Some(
                match self.sdm_config().variant {
                    SdmVariant::Exact => "exact",
                    SdmVariant::Soft => "soft",
                }
                .to_string(),
            ),
            num_segments: Some(self.num_segments),
            per_segment_windows: Some(self.per_segment_windows),
            lambda_st: Some(self.lambda_st),
            lambda_so: Some(self.lambda_so),
            lambda_su: Some(self.lambda_su),
            k1: Some(self.k1),
            b: Some(self.b),
            w_t: Some(self.w_t),
            w_o: Some(self.w_o),
            w_u: Some(self.w_u),
            window: Some(self.window),
            fb_docs: Some(self.fb_docs),
            fb_terms: Some(self.fb_terms),
            alpha: Some(self.alpha),
            topk_segments: Some(self.topk_segments),
            candidate_depth: Some(self.candidate_depth),
            mrr_k: Some(self.mrr_k),
            ndcg_k: Some(self.ndcg_k),
            recall_k: Some(self.recall_k),
            exp_gain: Some(self.exp_gain),
            rel_threshold: Some(self.rel_threshold),
            lr: Some(self.lr),
            epochs: Some(self.epochs),
            nonneg: Some(self.nonneg),
            compare_segs: self.compare_segs.clone(),
            seg_threshold: Some(self.seg_threshold),
            seed: Some(self.seed),
            threads: self.threads,
            run_tag: Some(self.run_tag.clone()),
            config_hash: Some(hash.to_string()),
        }
    }
}

/// Flag-level values collected by the clap layer; `None` means the flag was
/// not given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub run: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub method: Option<Method>,
    pub agg: Option<Method>,
    pub variant: Option<String>,
    pub n: Option<usize>,
    pub prx: Option<usize>,
    pub segs: Option<usize>,
    pub per_segment_windows: bool,
    pub lambda_st: Option<f64>,
    pub lambda_so: Option<f64>,
    pub lambda_su: Option<f64>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub w_t: Option<f64>,
    pub w_o: Option<f64>,
    pub w_u: Option<f64>,
    pub window: Option<usize>,
    pub fb_docs: Option<usize>,
    pub fb_terms: Option<usize>,
    pub rm3_alpha: Option<f64>,
    pub k: Option<usize>,
    pub depth: Option<usize>,
    pub mrr_k: Option<usize>,
    pub ndcg_k: Option<usize>,
    pub recall_k: Option<usize>,
    pub exp_gain: bool,
    pub rel_threshold: Option<u32>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub nonneg: bool,
    pub compare_segs: Option<Vec<usize>>,
    pub seg_threshold: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub run_tag: Option<String>,
    pub force: bool,
    pub plot: bool,
}

/// Writes the standard header comment carried by text output files.
pub fn header_line(hash: &str, command: &str) -> String {
    format!("config {hash} ({command})")
}
