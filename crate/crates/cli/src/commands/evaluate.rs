use std::io::Write;

use anyhow::Context;

use segrank_core::eval::{mrr_at_k, ndcg_at_k, recall_at_k, GainScheme, MetricOutcome};

use super::{load_qrels, require_exists};
use crate::config::{header_line, Settings};

/// Scores a run file against qrels, printing MRR, nDCG and recall at the
/// configured cutoffs and optionally writing them as CSV.
pub fn cmd_evaluate(settings: &Settings) -> anyhow::Result<()> {
    let run_path = require_exists(&settings.run, "run file", "--run")?;
    let run = super::load_run(run_path)?;
    let qrels = load_qrels(settings)?;
    let gain = if settings.exp_gain {
        GainScheme::Exponential
    } else {
        GainScheme::Linear
    };

    let metrics: Vec<(String, MetricOutcome)> = vec![
        (
            format!("MRR@{}", settings.mrr_k),
            mrr_at_k(&run, &qrels, settings.mrr_k, settings.rel_threshold),
        ),
        (
            format!("nDCG@{}", settings.ndcg_k),
            ndcg_at_k(&run, &qrels, settings.ndcg_k, gain),
        ),
        (
            format!("Recall@{}", settings.recall_k),
            recall_at_k(&run, &qrels, settings.recall_k, settings.rel_threshold),
        ),
    ];

    for (name, outcome) in &metrics {
        println!(
            "{name} {:.4} (queries evaluated: {}, skipped without relevant judgments: {})",
            outcome.value, outcome.evaluated, outcome.skipped
        );
    }

    if let Some(output) = &settings.output {
        let hash = settings.config_hash("evaluate");
        let mut out = std::io::BufWriter::new(
            std::fs::File::create(output)
                .with_context(|| format!("failed to write {}", output.display()))?,
        );
        writeln!(out, "# {}", header_line(&hash, "evaluate"))?;
        writeln!(out, "metric,value,evaluated,skipped")?;
        for (name, outcome) in &metrics {
            writeln!(
                out,
                "{name},{:.6},{},{}",
                outcome.value, outcome.evaluated, outcome.skipped
            )?;
        }
        out.flush()?;
    }
    Ok(())
}
