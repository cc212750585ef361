use std::collections::HashSet;
use std::io::Write;

use anyhow::{bail, Context};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use segrank_core::model::Query;
use segrank_core::training::{
    compute_features, fit_lambdas, pairwise_accuracy, FitOptions, TrainExample,
};

use super::{load_corpus, load_qrels, load_queries, load_run, require, require_exists};
use crate::config::{header_line, Settings};

/// Fits the potential combination weights on pairwise examples drawn from a
/// candidate list, writing an updated run config and a per-epoch loss log.
///
/// For every query, each candidate judged relevant is paired with one
/// negative sampled uniformly (seed-controlled) from the query's remaining
/// candidates.
pub fn cmd_train(settings: &Settings) -> anyhow::Result<()> {
    let candidates_path = require_exists(&settings.candidates, "candidate list", "--candidates")?;
    let out_config = require(&settings.output, "output config path", "--output")?;
    let corpus = load_corpus(settings)?;
    let queries = load_queries(settings, corpus.vocab())?;
    let qrels = load_qrels(settings)?;
    let candidates = load_run(candidates_path)?;
    let cfg = settings.sdm_config();
    if let Some(warning) = cfg.warning() {
        eprintln!("warning: {warning}");
    }

    let by_qid: std::collections::HashMap<&str, &Query> =
        queries.iter().map(|q| (q.qid.as_str(), q)).collect();

    // Phase 1 (sequential, seeded): choose positive/negative document pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut pair_ids: Vec<(String, String, String)> = Vec::new();
    for qid in candidates.queries() {
        if !by_qid.contains_key(qid) {
            bail!("candidate query {qid} is missing from the query file");
        }
        let ranking = candidates.ranking(qid).unwrap_or_default();
        let relevant: HashSet<&str> = qrels
            .relevant_docs(qid, settings.rel_threshold)
            .into_iter()
            .collect();
        if relevant.is_empty() {
            continue;
        }
        let negatives: Vec<&str> = ranking
            .iter()
            .map(|e| e.doc_id.as_str())
            .filter(|d| !relevant.contains(d))
            .collect();
        if negatives.is_empty() {
            continue;
        }
        for entry in ranking {
            if relevant.contains(entry.doc_id.as_str()) {
                let neg = negatives.choose(&mut rng).expect("non-empty");
                pair_ids.push((qid.to_string(), entry.doc_id.clone(), neg.to_string()));
            }
        }
    }
    if pair_ids.is_empty() {
        bail!("no training pairs: no candidate query has both relevant and non-relevant documents");
    }

    // Phase 2 (parallel, order-preserving): feature computation.
    let pool = crate::thread_pool(settings.threads)?;
    let examples: anyhow::Result<Vec<TrainExample>> = pool.install(|| {
        pair_ids
            .par_iter()
            .map(|(qid, pos_id, neg_id)| {
                let query = by_qid[qid.as_str()];
                let pos_doc = corpus
                    .doc(pos_id)
                    .with_context(|| format!("document {pos_id} missing from corpus"))?;
                let neg_doc = corpus
                    .doc(neg_id)
                    .with_context(|| format!("document {neg_id} missing from corpus"))?;
                Ok(TrainExample {
                    qid: qid.clone(),
                    positive: compute_features(query, pos_doc, &cfg)?,
                    negative: compute_features(query, neg_doc, &cfg)?,
                })
            })
            .collect()
    });
    let examples = examples?;

    let fit = fit_lambdas(
        &examples,
        settings.lambdas(),
        &FitOptions {
            lr: settings.lr,
            epochs: settings.epochs,
            nonneg: settings.nonneg,
        },
    )?;
    let accuracy = pairwise_accuracy(&fit.lambdas, &examples);

    let mut trained = settings.clone();
    trained.lambda_st = fit.lambdas.lambda_st;
    trained.lambda_so = fit.lambdas.lambda_so;
    trained.lambda_su = fit.lambdas.lambda_su;
    let hash = settings.config_hash("train-lambdas");
    let file_config = trained.to_file_config(&hash);
    std::fs::write(out_config, serde_json::to_string_pretty(&file_config)?)
        .with_context(|| format!("failed to write {}", out_config.display()))?;

    if let Some(log_path) = &settings.out_dir {
        std::fs::create_dir_all(log_path)?;
    }
    let log_path = settings
        .out_dir
        .as_ref()
        .map(|d| d.join("training_log.csv"))
        .unwrap_or_else(|| out_config.with_extension("log.csv"));
    let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
    writeln!(log, "# {}", header_line(&hash, "train-lambdas"))?;
    writeln!(log, "epoch,loss")?;
    for (epoch, loss) in fit.loss_log.iter().enumerate() {
        writeln!(log, "{epoch},{loss:.12}")?;
    }
    log.flush()?;

    println!(
        "trained on {} pairs: lambda_st={:.6} lambda_so={:.6} lambda_su={:.6}",
        examples.len(),
        fit.lambdas.lambda_st,
        fit.lambdas.lambda_so,
        fit.lambdas.lambda_su
    );
    println!(
        "final loss {:.6}, pairwise accuracy {:.4} -> {}",
        fit.loss_log.last().copied().unwrap_or(f64::NAN),
        accuracy,
        out_config.display()
    );
    Ok(())
}
