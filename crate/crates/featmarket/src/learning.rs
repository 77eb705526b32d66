//! Losses and training.
//!
//! The market hinge loss shifts each user's margin by the distance their
//! budget buys at the going price, `(b / rho) * ||w||`. Training minimizes
//! its batch mean with the exact price replaced by the smoothed one, so
//! gradients flow through the price: both directly via the loss term and
//! indirectly via every user's distance to the boundary.
//!
//! Three trainers share the Adam loop: `train_naive` (plain hinge,
//! market-blind), `train_strat` (fixes weights to the naive-induced price
//! vector and tunes the threshold against that frozen price), and
//! `train_market_aware` (market-aware, end-to-end through the smoothed price).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::{demand_profile, Dataset, LinearClassifier};
use crate::pricing::{classifier_price_vector, exact_price};
use crate::response::simulate_market;
use crate::smooth::{smooth_price_gradient, SmoothPriceConfig};

/// Clamp applied by the standalone loss when handed a degenerate price.
const M_HINGE_RHO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Coefficient on the squared 2-norm of the weights (tau unregularized).
    pub lambda_reg: f64,
    pub smooth: SmoothPriceConfig,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 500,
            epochs: 100,
            lambda_reg: 0.1,
            smooth: SmoothPriceConfig::default(),
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(MarketError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(MarketError::InvalidConfig(
                "batch_size must be at least 2 (a one-point market is degenerate)".into(),
            ));
        }
        if self.lambda_reg < 0.0 {
            return Err(MarketError::InvalidConfig("lambda_reg must be non-negative".into()));
        }
        self.smooth.validate()
    }
}

/// One epoch of training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub loss: f64,
    /// Mean smoothed price over the epoch's batches, when the loss had one.
    pub rho_smooth_mean: Option<f64>,
    /// Long-term validation accuracy (prices re-equilibrated), when tracked.
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    /// Batches with no demand, trained on the plain hinge instead.
    pub hinge_fallback_batches: u64,
    /// Batches whose smoothed price hit the floor clamp.
    pub rho_floor_clamps: u64,
}

/// Trained model plus optimizer state and history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub classifier: LinearClassifier,
    /// Adam first moments, weights then tau.
    pub adam_m: Vec<f64>,
    /// Adam second moments, weights then tau.
    pub adam_v: Vec<f64>,
    pub step: u64,
    pub history: Vec<EpochRecord>,
    /// The fixed deployment price a method was tuned against, if any.
    pub frozen_rho: Option<f64>,
    pub diagnostics: TrainDiagnostics,
}

impl ModelState {
    pub fn new(classifier: LinearClassifier) -> Self {
        let n = classifier.dim() + 1;
        Self {
            classifier,
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
            step: 0,
            history: Vec::new(),
            frozen_rho: None,
            diagnostics: TrainDiagnostics::default(),
        }
    }
}

/// Plain hinge on a signed label.
fn hinge(y: f64, score: f64) -> f64 {
    (1.0 - y * score).max(0.0)
}

/// Market hinge loss: `max(0, 1 - y (w'x + tau + (b / rho) ||w||))` for
/// `y` in {-1, +1}.
///
/// With `b = 0` this is the plain hinge; with `b / rho = 2` it matches the
/// strategic hinge for fixed 2-norm costs. Non-positive prices are clamped.
pub fn m_hinge(x: &[f64], y: f64, budget: f64, h: &LinearClassifier, rho: f64) -> f64 {
    let rho = rho.max(M_HINGE_RHO_FLOOR);
    hinge(y, h.score(x) + (budget / rho) * h.weight_norm())
}

/// Loss and gradient of the market objective on one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub loss: f64,
    pub grad_weights: Vec<f64>,
    pub grad_tau: f64,
    /// The smoothed price the batch cleared at, absent when the batch had no
    /// demand and the loss fell back to the plain hinge.
    pub rho_smooth: Option<f64>,
    pub hinge_fallback: bool,
    pub rho_clamped: bool,
}

/// Mean market hinge at the batch's smoothed price plus `lambda ||w||^2`,
/// with the exact gradient over `(w, tau)`.
///
/// The gradient chains through the smoothed price: each profile member's
/// units depend on `(w, tau)`, and the price depends on the units. Batches
/// with no demand (or a zero weight vector) fall back to the plain hinge and
/// are flagged.
pub fn objective(batch: &Dataset, h: &LinearClassifier, cfg: &TrainConfig) -> Result<ObjectiveEval> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    if batch.dim() != h.dim() {
        return Err(MarketError::DimensionMismatch { expected: h.dim(), got: batch.dim() });
    }
    let d = h.dim();
    let m = batch.len() as f64;
    let norm = h.weight_norm();

    let profile = if norm > 0.0 {
        demand_profile(h, batch)?
    } else {
        crate::market::DemandProfile { points: vec![], source_size: batch.len() }
    };

    if profile.is_empty() {
        // no market: plain regularized hinge
        let mut grad_w = vec![0.0; d];
        let mut grad_tau = 0.0;
        let mut loss = 0.0;
        for rec in batch.records() {
            let y = rec.signed_label();
            let s = h.score(&rec.features);
            let l = hinge(y, s);
            loss += l / m;
            if l > 0.0 {
                for (g, xi) in grad_w.iter_mut().zip(&rec.features) {
                    *g += -y * xi / m;
                }
                grad_tau += -y / m;
            }
        }
        for (g, wi) in grad_w.iter_mut().zip(&h.weights) {
            *g += 2.0 * cfg.lambda_reg * wi;
        }
        loss += cfg.lambda_reg * norm * norm;
        return Ok(ObjectiveEval {
            loss,
            grad_weights: grad_w,
            grad_tau,
            rho_smooth: None,
            hinge_fallback: true,
            rho_clamped: false,
        });
    }

    let smooth = smooth_price_gradient(&profile, &cfg.smooth)?;
    let rho = smooth.rho_smooth;

    let mut loss = 0.0;
    let mut d_score = vec![0.0; batch.len()]; // dL/d(w'x_i + tau)
    let mut d_norm = 0.0; // dL/d||w||, direct term
    let mut d_rho = 0.0; // dL/d rho_smooth
    for (i, rec) in batch.records().iter().enumerate() {
        let y = rec.signed_label();
        let s = h.score(&rec.features);
        let l = hinge(y, s + (rec.budget / rho) * norm);
        loss += l / m;
        if l > 0.0 {
            d_score[i] = -y / m;
            d_norm += -y * (rec.budget / rho) / m;
            d_rho += y * rec.budget * norm / (rho * rho * m);
        }
    }

    // chain d rho / d units into per-user score and norm sensitivities
    if !smooth.clamped {
        for (pt, &du) in profile.points.iter().zip(&smooth.d_rho_d_units) {
            let pull = d_rho * du;
            d_score[pt.origin_index] += pull * (-1.0 / norm);
            d_norm += pull * (-pt.units / norm);
        }
    }

    let mut grad_w = vec![0.0; d];
    let mut grad_tau = 0.0;
    for (i, rec) in batch.records().iter().enumerate() {
        if d_score[i] != 0.0 {
            for (g, xi) in grad_w.iter_mut().zip(&rec.features) {
                *g += d_score[i] * xi;
            }
            grad_tau += d_score[i];
        }
    }
    for (g, wi) in grad_w.iter_mut().zip(&h.weights) {
        *g += d_norm * wi / norm + 2.0 * cfg.lambda_reg * wi;
    }
    loss += cfg.lambda_reg * norm * norm;

    Ok(ObjectiveEval {
        loss,
        grad_weights: grad_w,
        grad_tau,
        rho_smooth: Some(rho),
        hinge_fallback: false,
        rho_clamped: smooth.clamped,
    })
}

/// Plain regularized hinge objective (the market-blind loss).
fn plain_objective(batch: &Dataset, h: &LinearClassifier, lambda: f64) -> (f64, Vec<f64>, f64) {
    let d = h.dim();
    let m = batch.len() as f64;
    let mut grad_w = vec![0.0; d];
    let mut grad_tau = 0.0;
    let mut loss = 0.0;
    for rec in batch.records() {
        let y = rec.signed_label();
        let l = hinge(y, h.score(&rec.features));
        loss += l / m;
        if l > 0.0 {
            for (g, xi) in grad_w.iter_mut().zip(&rec.features) {
                *g += -y * xi / m;
            }
            grad_tau += -y / m;
        }
    }
    let norm = h.weight_norm();
    for (g, wi) in grad_w.iter_mut().zip(&h.weights) {
        *g += 2.0 * lambda * wi;
    }
    (loss + lambda * norm * norm, grad_w, grad_tau)
}

/// One bias-corrected Adam update. The gradient lays out weights first,
/// then tau. Deterministic given its inputs.
pub fn adam_step(state: &mut ModelState, grad: &[f64], cfg: &TrainConfig) {
    let d = state.classifier.dim();
    assert_eq!(grad.len(), d + 1, "gradient must cover weights and tau");
    state.step += 1;
    let t = state.step as i32;
    let b1 = cfg.adam_beta1;
    let b2 = cfg.adam_beta2;
    let bias1 = 1.0 - b1.powi(t);
    let bias2 = 1.0 - b2.powi(t);
    for (k, &g) in grad.iter().enumerate() {
        state.adam_m[k] = b1 * state.adam_m[k] + (1.0 - b1) * g;
        state.adam_v[k] = b2 * state.adam_v[k] + (1.0 - b2) * g * g;
        let m_hat = state.adam_m[k] / bias1;
        let v_hat = state.adam_v[k] / bias2;
        let update = cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        if k < d {
            state.classifier.weights[k] -= update;
        } else {
            state.classifier.tau -= update;
        }
    }
}

fn batch_of(train: &Dataset, idx: &[usize]) -> Dataset {
    let records = idx.iter().map(|&i| train.records()[i].clone()).collect();
    Dataset::with_dim(records, train.dim()).expect("batch of a valid dataset is valid")
}

/// Post-market accuracy at a given price; crossers are positive by
/// construction (they bought their way exactly onto the boundary).
fn market_accuracy(h: &LinearClassifier, s: &Dataset, rho: f64) -> Result<f64> {
    let out = simulate_market(h, s, rho)?;
    let correct = s
        .records()
        .iter()
        .zip(&out.crossed)
        .filter(|(rec, &crossed)| {
            let positive = h.score(&rec.features) >= 0.0 || crossed;
            positive == (rec.label == 1)
        })
        .count();
    Ok(correct as f64 / s.len() as f64)
}

/// Post-market accuracy on `s` with prices re-equilibrated under `h`.
fn long_term_accuracy(h: &LinearClassifier, s: &Dataset) -> Result<f64> {
    let profile = demand_profile(h, s)?;
    let rho = exact_price(&profile).rho;
    market_accuracy(h, s, rho)
}

/// Market-blind baseline: minimizes the mean plain hinge plus the weight
/// regularizer by mini-batch Adam, from zero initialization.
pub fn train_naive(train: &Dataset, cfg: &TrainConfig) -> Result<ModelState> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    let mut state = ModelState::new(LinearClassifier::new(vec![0.0; train.dim()], 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = train.len();
    for _ in 0..cfg.epochs {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in idx.chunks(cfg.batch_size) {
            let batch = batch_of(train, chunk);
            let (loss, gw, gt) = plain_objective(&batch, &state.classifier, cfg.lambda_reg);
            epoch_loss += loss * chunk.len() as f64 / n as f64;
            let mut grad = gw;
            grad.push(gt);
            adam_step(&mut state, &grad, cfg);
        }
        state.history.push(EpochRecord {
            loss: epoch_loss,
            rho_smooth_mean: None,
            val_accuracy: None,
        });
    }
    Ok(state)
}

/// Market-aware training: mini-batch Adam on [`objective`], initialized from
/// the naive weights, tracking long-term validation accuracy per epoch and
/// returning the best-validation state.
pub fn train_market_aware(train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<ModelState> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    let naive = train_naive(train, cfg)?;
    let mut state = ModelState::new(naive.classifier);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = train.len();

    let mut best_classifier = state.classifier.clone();
    let mut best_acc = long_term_accuracy(&state.classifier, val)?;

    for _ in 0..cfg.epochs {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut rho_sum = 0.0;
        let mut rho_batches = 0u32;
        for chunk in idx.chunks(cfg.batch_size) {
            let batch = batch_of(train, chunk);
            let eval = objective(&batch, &state.classifier, cfg)?;
            epoch_loss += eval.loss * chunk.len() as f64 / n as f64;
            if let Some(rho) = eval.rho_smooth {
                rho_sum += rho;
                rho_batches += 1;
            }
            if eval.hinge_fallback {
                state.diagnostics.hinge_fallback_batches += 1;
            }
            if eval.rho_clamped {
                state.diagnostics.rho_floor_clamps += 1;
            }
            let mut grad = eval.grad_weights;
            grad.push(eval.grad_tau);
            adam_step(&mut state, &grad, cfg);
        }
        let val_acc = long_term_accuracy(&state.classifier, val)?;
        // ties keep the latest epoch: validation accuracy is a step function
        // of the induced market, and late snapshots sit in the interior of
        // the winning regime rather than on its edge
        if val_acc >= best_acc {
            best_acc = val_acc;
            best_classifier = state.classifier.clone();
        }
        state.history.push(EpochRecord {
            loss: epoch_loss,
            rho_smooth_mean: (rho_batches > 0).then(|| rho_sum / f64::from(rho_batches)),
            val_accuracy: Some(val_acc),
        });
    }
    state.classifier = best_classifier;
    Ok(state)
}

/// Candidate taus spanning the observed scores: `count` evenly spaced cut
/// points over `[min, max]` of `w'x`, widened by one inter-quartile range on
/// each side, negated into taus.
pub fn default_tau_grid(w: &[f64], train: &Dataset, count: usize) -> Vec<f64> {
    let h = LinearClassifier::new(w.to_vec(), 0.0);
    let mut scores: Vec<f64> = train.records().iter().map(|r| h.score(&r.features)).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if scores.is_empty() || count == 0 {
        return vec![];
    }
    let lo = scores[0];
    let hi = scores[scores.len() - 1];
    let q1 = scores[scores.len() / 4];
    let q3 = scores[(scores.len() * 3) / 4];
    let iqr = q3 - q1;
    let (lo, hi) = (lo - iqr, hi + iqr);
    (0..count)
        .map(|k| {
            let cut = if count == 1 {
                (lo + hi) / 2.0
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            };
            -cut
        })
        .collect()
}

/// The weight vector the strategic baseline adopts: the price vector the
/// naive classifier induces, or the naive direction at unit norm when the
/// market is inert (`rho = 0`).
pub fn strat_weight_vector(naive: &LinearClassifier, rho: f64) -> Result<Vec<f64>> {
    if rho > 0.0 {
        classifier_price_vector(rho, naive)
    } else {
        let norm = naive.weight_norm();
        if norm > 0.0 {
            Ok(naive.weights.iter().map(|w| w / norm).collect())
        } else {
            Ok(naive.weights.clone())
        }
    }
}

/// Price-taking strategic baseline: trains the naive model, fixes the
/// weights to the price vector it induces on the training demand, and picks
/// the tau from the grid that maximizes held-out accuracy under that frozen
/// price. When the naive market is empty the weights stay in the naive
/// direction (unit norm) and the frozen price is zero.
pub fn train_strat(
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    tau_grid: &[f64],
) -> Result<ModelState> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    if tau_grid.is_empty() {
        return Err(MarketError::InvalidConfig("tau grid must be non-empty".into()));
    }
    let naive = train_naive(train, cfg)?;
    let profile = demand_profile(&naive.classifier, train)?;
    let quote = exact_price(&profile);
    let weights = strat_weight_vector(&naive.classifier, quote.rho)?;

    let mut best_tau = tau_grid[0];
    let mut best_acc = -1.0;
    for &tau in tau_grid {
        let h = LinearClassifier::new(weights.clone(), tau);
        let acc = market_accuracy(&h, val, quote.rho)?;
        if acc > best_acc {
            best_acc = acc;
            best_tau = tau;
        }
    }

    let mut state = ModelState::new(LinearClassifier::new(weights, best_tau));
    state.frozen_rho = Some(quote.rho);
    state.history = naive.history;
    Ok(state)
}
