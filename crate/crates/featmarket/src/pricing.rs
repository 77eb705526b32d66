//! Exact empirical equilibrium prices.
//!
//! Revenue as a function of the scalar price is discontinuous piecewise
//! linear, and every local maximum sits at a reciprocal of some user's
//! normalized demand. The optimal price is therefore found by sorting users
//! by units-per-budget and scanning candidates with a running unit total.
//!
//! A buyer at price `rho` is any profile point with `normalized * rho <= 1`,
//! i.e. anyone who can afford their required units. The product form of the
//! predicate is used everywhere (pricing, simulation, brute force) so the
//! marginal buyer is treated identically across modules.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::market::{DemandPoint, DemandProfile, LinearClassifier};
use crate::MarketError;

/// The cleared market price: scalar price per unit of demand, the index of
/// the price-setting user, total revenue, and the buyer count.
///
/// An empty market quotes `rho = 0` (no trade) with no setter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub rho: f64,
    pub setter_index: Option<usize>,
    pub revenue: f64,
    pub buyers: usize,
}

impl PriceQuote {
    fn empty() -> Self {
        Self { rho: 0.0, setter_index: None, revenue: 0.0, buyers: 0 }
    }
}

/// One candidate price on the revenue curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueCandidate {
    pub rho: f64,
    pub revenue: f64,
    pub origin_index: usize,
}

/// The full revenue landscape: one candidate per profile point, in ascending
/// order of normalized demand (descending price).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueCurve {
    pub candidates: Vec<RevenueCandidate>,
}

/// Whether a point can afford its demand at price `rho`. A zero price is
/// free for everyone.
#[inline]
pub(crate) fn affords(normalized: f64, rho: f64) -> bool {
    rho == 0.0 || normalized * rho <= 1.0
}

/// Profile points sorted by (normalized, origin_index); the fixed
/// accumulation order for every revenue sum in this module.
fn sorted_points(profile: &DemandProfile) -> Vec<&DemandPoint> {
    let mut pts: Vec<&DemandPoint> = profile.points.iter().collect();
    pts.sort_by(|a, b| {
        (a.normalized, a.origin_index)
            .partial_cmp(&(b.normalized, b.origin_index))
            .expect("demand must be finite")
    });
    pts
}

/// Revenue and buyer count at price `rho`, accumulated over the sorted
/// prefix of affordable points.
fn revenue_over_sorted(sorted: &[&DemandPoint], rho: f64) -> (f64, usize) {
    let mut total_units = 0.0;
    let mut buyers = 0;
    for pt in sorted {
        if !affords(pt.normalized, rho) {
            break;
        }
        total_units += pt.units;
        buyers += 1;
    }
    (rho * total_units, buyers)
}

/// Total revenue at price `rho > 0`: `rho` times the units of every point
/// that can afford its demand. Ties (spending exactly the budget) buy.
pub fn revenue_at(rho: f64, profile: &DemandProfile) -> f64 {
    if profile.is_empty() {
        return 0.0;
    }
    let sorted = sorted_points(profile);
    revenue_over_sorted(&sorted, rho).0
}

/// The revenue-maximizing price over a demand profile.
///
/// Scans candidates `rho_i = 1 / normalized_i` in ascending normalized order,
/// keeping a running unit total; a strict improvement rule keeps the highest
/// price among revenue ties. The reported revenue is recomputed through the
/// same affordability path as [`revenue_at`], so the two agree exactly.
pub fn exact_price(profile: &DemandProfile) -> PriceQuote {
    if profile.is_empty() {
        return PriceQuote::empty();
    }
    let sorted = sorted_points(profile);
    let mut best_rev = 0.0;
    let mut best: Option<&DemandPoint> = None;
    let mut total_units = 0.0;
    for pt in &sorted {
        total_units += pt.units;
        let rev = (1.0 / pt.normalized) * total_units;
        if rev > best_rev {
            best_rev = rev;
            best = Some(pt);
        }
    }
    let setter = best.expect("non-empty profile has a candidate");
    let rho = 1.0 / setter.normalized;
    let (revenue, buyers) = revenue_over_sorted(&sorted, rho);
    PriceQuote { rho, setter_index: Some(setter.origin_index), revenue, buyers }
}

/// The full revenue curve: candidate prices and their revenues in ascending
/// normalized-demand order. O(m log m).
pub fn revenue_curve(profile: &DemandProfile) -> RevenueCurve {
    let sorted = sorted_points(profile);
    let mut total_units = 0.0;
    let mut candidates = Vec::with_capacity(sorted.len());
    for pt in sorted {
        total_units += pt.units;
        let rho = 1.0 / pt.normalized;
        candidates.push(RevenueCandidate {
            rho,
            revenue: rho * total_units,
            origin_index: pt.origin_index,
        });
    }
    RevenueCurve { candidates }
}

/// The induced price vector `p = rho * w / ||w||`: moving one Euclidean unit
/// along `w / ||w||` costs exactly `rho`.
pub fn price_vector(rho: f64, w: &[f64]) -> Result<Vec<f64>> {
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(MarketError::DegenerateClassifier);
    }
    Ok(w.iter().map(|v| rho * v / norm).collect())
}

/// Applies the proportional price vector of a classifier at a given scalar
/// price.
pub fn classifier_price_vector(rho: f64, h: &LinearClassifier) -> Result<Vec<f64>> {
    price_vector(rho, &h.weights)
}

/// Verification oracle: maximizes [`revenue_at`] over a dense geometric price
/// grid joined with every candidate price. Intended for small profiles.
pub fn brute_force_price(profile: &DemandProfile, grid: usize) -> PriceQuote {
    if profile.is_empty() {
        return PriceQuote::empty();
    }
    let sorted = sorted_points(profile);
    let mut prices: Vec<f64> = sorted.iter().map(|p| 1.0 / p.normalized).collect();
    let lo = prices.iter().cloned().fold(f64::INFINITY, f64::min) * 0.5;
    let hi = prices.iter().cloned().fold(0.0, f64::max) * 2.0;
    if grid >= 2 {
        let ratio = (hi / lo).ln() / (grid - 1) as f64;
        prices.extend((0..grid).map(|k| lo * (ratio * k as f64).exp()));
    }
    let mut best_rho = 0.0;
    let mut best_rev = 0.0;
    for rho in prices {
        let (rev, _) = revenue_over_sorted(&sorted, rho);
        if rev > best_rev {
            best_rev = rev;
            best_rho = rho;
        }
    }
    let (revenue, buyers) = revenue_over_sorted(&sorted, best_rho);
    let setter = buyers.checked_sub(1).map(|k| sorted[k].origin_index);
    PriceQuote { rho: best_rho, setter_index: setter, revenue, buyers }
}
