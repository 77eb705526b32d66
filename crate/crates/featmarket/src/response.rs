//! User best responses to posted prices and whole-market simulation.
//!
//! Under proportional prices `p = rho * w / ||w||`, a rational negatively
//! classified user moves straight to the decision boundary along `w / ||w||`
//! iff the trip is affordable (`rho * u <= b`), paying `rho * u`. Purchases
//! can equivalently be restricted to any single feature with positive
//! weight; outcomes (movers and revenue) are the same, which
//! [`ResponseMode::SingleFeature`] exposes for verification.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::{Dataset, LinearClassifier};
use crate::pricing::affords;

/// Movement convention used by the simulator.
///
/// `Directional` moves users along `w / ||w||` (entries of `x` may decrease
/// where `w` is negative). `SingleFeature(j)` restricts purchases to feature
/// `j` (requires `w_j > 0`), keeping bundles non-negative; the price passed
/// alongside must then be quoted per unit of that feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseMode {
    Directional,
    SingleFeature(usize),
}

/// The simulated world after the market clears at a shared price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    /// Post-response feature vectors, in dataset order.
    pub post_features: Vec<Vec<f64>>,
    /// Whether each user changed their features.
    pub moved: Vec<bool>,
    /// Whether each user's prediction flipped from -1 to +1.
    pub crossed: Vec<bool>,
    /// Amount each user paid.
    pub spend: Vec<f64>,
    pub total_revenue: f64,
    pub mode: ResponseMode,
}

/// The cheapest bundle that flips a negative prediction under a general
/// price vector: all mass goes to the feature minimizing `p_i / w_i` among
/// `w_i > 0` (ties to the lowest index; the tied features are perfect
/// substitutes), scaled so the score reaches exactly zero.
pub fn least_cost_bundle(h: &LinearClassifier, x: &[f64], prices: &[f64]) -> Result<Vec<f64>> {
    if x.len() != h.dim() || prices.len() != h.dim() {
        return Err(MarketError::DimensionMismatch { expected: h.dim(), got: x.len() });
    }
    let kappa = -h.score(x);
    let mut best: Option<usize> = None;
    for i in 0..h.dim() {
        if h.weights[i] > 0.0 {
            let better = match best {
                None => true,
                Some(k) => prices[i] / h.weights[i] < prices[k] / h.weights[k],
            };
            if better {
                best = Some(i);
            }
        }
    }
    let i = best.ok_or(MarketError::InfeasibleResponse)?;
    let mut delta = vec![0.0; h.dim()];
    delta[i] = kappa.max(0.0) / h.weights[i];
    Ok(delta)
}

/// Best response of one user at a scalar per-unit price: move to the
/// boundary iff negatively classified and `rho * u <= b`. A zero price moves
/// every negatively classified user for free.
///
/// Returns the post-response features, whether the user moved, and the spend.
pub fn best_response(
    h: &LinearClassifier,
    x: &[f64],
    budget: f64,
    rho: f64,
) -> Result<(Vec<f64>, bool, f64)> {
    if x.len() != h.dim() {
        return Err(MarketError::DimensionMismatch { expected: h.dim(), got: x.len() });
    }
    let norm = h.weight_norm();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(MarketError::DegenerateClassifier);
    }
    let units = (-h.score(x) / norm).max(0.0);
    if units <= 0.0 {
        return Ok((x.to_vec(), false, 0.0));
    }
    let can_buy = if rho == 0.0 {
        true
    } else if budget > 0.0 {
        affords(units / budget, rho)
    } else {
        false
    };
    if !can_buy {
        return Ok((x.to_vec(), false, 0.0));
    }
    let moved: Vec<f64> = x
        .iter()
        .zip(&h.weights)
        .map(|(xi, wi)| xi + units * wi / norm)
        .collect();
    Ok((moved, true, rho * units))
}

/// Applies [`best_response`] independently to every user at a shared price.
pub fn simulate_market(h: &LinearClassifier, s: &Dataset, rho: f64) -> Result<MarketOutcome> {
    simulate_market_mode(h, s, rho, ResponseMode::Directional)
}

/// Market simulation with an explicit movement convention. For
/// `SingleFeature(j)`, `rho` must be the price per unit of feature `j`
/// (i.e. the equilibrium of the single-feature demand profile).
pub fn simulate_market_mode(
    h: &LinearClassifier,
    s: &Dataset,
    rho: f64,
    mode: ResponseMode,
) -> Result<MarketOutcome> {
    if !s.is_empty() && s.dim() != h.dim() {
        return Err(MarketError::DimensionMismatch { expected: h.dim(), got: s.dim() });
    }
    let norm = h.weight_norm();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(MarketError::DegenerateClassifier);
    }
    if let ResponseMode::SingleFeature(j) = mode {
        if j >= h.dim() || h.weights[j] <= 0.0 {
            return Err(MarketError::InfeasibleResponse);
        }
    }

    let m = s.len();
    let mut outcome = MarketOutcome {
        post_features: Vec::with_capacity(m),
        moved: vec![false; m],
        crossed: vec![false; m],
        spend: vec![0.0; m],
        total_revenue: 0.0,
        mode,
    };

    for (i, rec) in s.records().iter().enumerate() {
        let score = h.score(&rec.features);
        let units = match mode {
            ResponseMode::Directional => (-score / norm).max(0.0),
            ResponseMode::SingleFeature(j) => (-score / h.weights[j]).max(0.0),
        };
        if units <= 0.0 {
            outcome.post_features.push(rec.features.clone());
            continue;
        }
        let can_buy = if rho == 0.0 {
            true
        } else if rec.budget > 0.0 {
            affords(units / rec.budget, rho)
        } else {
            false
        };
        if !can_buy {
            outcome.post_features.push(rec.features.clone());
            continue;
        }
        let post: Vec<f64> = match mode {
            ResponseMode::Directional => rec
                .features
                .iter()
                .zip(&h.weights)
                .map(|(xi, wi)| xi + units * wi / norm)
                .collect(),
            ResponseMode::SingleFeature(j) => {
                let mut p = rec.features.clone();
                p[j] += units;
                p
            }
        };
        outcome.moved[i] = true;
        outcome.crossed[i] = true;
        outcome.spend[i] = rho * units;
        outcome.total_revenue += rho * units;
        outcome.post_features.push(post);
    }
    Ok(outcome)
}
