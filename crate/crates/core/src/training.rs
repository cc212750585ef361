//! Fitting the potential combination weights with encoders frozen.
//!
//! Each training pair holds the unit-lambda potentials of a relevant and a
//! non-relevant document for the same query. The score is linear in the
//! lambdas, so the logistic pairwise loss is convex and plain full-batch
//! gradient descent converges deterministically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Document, Query};
use crate::sdm::{unit_potentials, Lambdas, SdmConfig};

/// The three potentials evaluated at unit lambda.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureTriple {
    pub psi_st: f64,
    pub psi_so: f64,
    pub psi_su: f64,
}

impl FeatureTriple {
    pub fn combine(&self, lam: &Lambdas) -> f64 {
        lam.lambda_st * self.psi_st + lam.lambda_so * self.psi_so + lam.lambda_su * self.psi_su
    }
}

/// One pairwise example: features of a relevant and a sampled non-relevant
/// document from the same query's candidate list.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub qid: String,
    pub positive: FeatureTriple,
    pub negative: FeatureTriple,
}

/// Unit-lambda potentials of a document for a query; recombining them with
/// any lambdas reproduces the SDM score.
pub fn compute_features(query: &Query, doc: &Document, cfg: &SdmConfig) -> Result<FeatureTriple> {
    let (psi_st, psi_so, psi_su) = unit_potentials(query, doc, cfg)?;
    Ok(FeatureTriple {
        psi_st,
        psi_so,
        psi_su,
    })
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic pairwise loss `ln(1 + exp(-(s_pos - s_neg)))` and its
/// analytic gradient with respect to the lambdas.
pub fn pairwise_loss_grad(lam: &Lambdas, batch: &[TrainExample]) -> (f64, [f64; 3]) {
    assert!(!batch.is_empty(), "batch must be non-empty");
    let mut loss = 0.0;
    let mut grad = [0.0; 3];
    for ex in batch {
        let delta = [
            ex.positive.psi_st - ex.negative.psi_st,
            ex.positive.psi_so - ex.negative.psi_so,
            ex.positive.psi_su - ex.negative.psi_su,
        ];
        let margin = lam.lambda_st * delta[0] + lam.lambda_so * delta[1] + lam.lambda_su * delta[2];
        loss += softplus(-margin);
        let coeff = -sigmoid(-margin);
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += coeff * d;
        }
    }
    let n = batch.len() as f64;
    (loss / n, [grad[0] / n, grad[1] / n, grad[2] / n])
}

/// Fraction of pairs the lambdas order correctly (strict margin).
pub fn pairwise_accuracy(lam: &Lambdas, examples: &[TrainExample]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let correct = examples
        .iter()
        .filter(|ex| ex.positive.combine(lam) > ex.negative.combine(lam))
        .count();
    correct as f64 / examples.len() as f64
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub lr: f64,
    pub epochs: usize,
    /// Project the lambdas onto the non-negative orthant after each step.
    pub nonneg: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lr: 0.01,
            epochs: 200,
            nonneg: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub lambdas: Lambdas,
    /// Loss at the start of each epoch, before that epoch's step.
    pub loss_log: Vec<f64>,
}

/// Full-batch gradient descent on the pairwise loss. Deterministic: the
/// same examples and options always produce the same lambdas. With zero
/// epochs the initial lambdas are returned unchanged.
pub fn fit_lambdas(
    examples: &[TrainExample],
    init: Lambdas,
    opts: &FitOptions,
) -> Result<FitResult> {
    assert!(!examples.is_empty(), "at least one training example required");
    let mut lam = init;
    let mut loss_log = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        let (loss, grad) = pairwise_loss_grad(&lam, examples);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        lam.lambda_st -= opts.lr * grad[0];
        lam.lambda_so -= opts.lr * grad[1];
        lam.lambda_su -= opts.lr * grad[2];
        if opts.nonneg {
            lam.lambda_st = lam.lambda_st.max(0.0);
            lam.lambda_so = lam.lambda_so.max(0.0);
            lam.lambda_su = lam.lambda_su.max(0.0);
        }
        loss_log.push(loss);
    }
    Ok(FitResult {
        lambdas: lam,
        loss_log,
    })
}
