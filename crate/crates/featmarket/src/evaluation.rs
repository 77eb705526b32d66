//! Post-market metrics and the short/long-term evaluation protocol.
//!
//! Short-term metrics freeze the train-time price; long-term metrics let the
//! market re-equilibrate on the evaluation population before responses are
//! simulated.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::{demand_profile, Dataset, LinearClassifier};
use crate::pricing::exact_price;
use crate::response::{simulate_market, MarketOutcome};

/// Post-response metrics at one price.
///
/// Crossing ratios are computed per class over the users predicted negative
/// before responding; an empty denominator yields 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Budget-normalized aggregate user profit (prediction gains minus
    /// spend), in [0, 1] under rational responses.
    pub welfare: f64,
    /// Budget-normalized total cost for truly positive users to reach a
    /// positive prediction; 0 when there is nothing to pay for.
    pub burden: f64,
    pub crossed_pos_ratio: f64,
    pub crossed_neg_ratio: f64,
    pub rho_used: f64,
    pub n_movers: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn metrics_from_outcome(
    h: &LinearClassifier,
    s: &Dataset,
    rho: f64,
    out: &MarketOutcome,
) -> Metrics {
    let norm = h.weight_norm();
    let mut correct = 0usize;
    let mut pre_neg = [0usize; 2];
    let mut crossed = [0usize; 2];
    let mut welfare_sum = 0.0;
    let mut total_budget = 0.0;
    let mut burden_sum = 0.0;
    let mut pos_budget = 0.0;

    for (i, rec) in s.records().iter().enumerate() {
        // movers land on the boundary and are positive by the sign(0) = +1
        // convention; re-scoring their post features would flip on rounding
        // residue, so crossing is authoritative
        let pre_score = h.score(&rec.features);
        let post_positive = pre_score >= 0.0 || out.crossed[i];
        let pred = if post_positive { 1.0 } else { -1.0 };
        if pred == rec.signed_label() {
            correct += 1;
        }
        let pre_units = (-pre_score / norm).max(0.0);
        if pre_units > 0.0 {
            pre_neg[rec.label as usize] += 1;
            if out.crossed[i] {
                crossed[rec.label as usize] += 1;
            }
        }
        total_budget += rec.budget;
        if post_positive {
            welfare_sum += rec.budget;
        }
        welfare_sum -= out.spend[i];
        if rec.label == 1 {
            pos_budget += rec.budget;
            burden_sum += rho * pre_units;
        }
    }

    Metrics {
        accuracy: correct as f64 / s.len() as f64,
        welfare: if total_budget > 0.0 { welfare_sum / total_budget } else { 0.0 },
        burden: if pos_budget > 0.0 { burden_sum / pos_budget } else { 0.0 },
        crossed_pos_ratio: ratio(crossed[1], pre_neg[1]),
        crossed_neg_ratio: ratio(crossed[0], pre_neg[0]),
        rho_used: rho,
        n_movers: out.moved.iter().filter(|&&m| m).count(),
    }
}

/// Budget-normalized welfare: `(1/B) sum_i [b_i 1{h(x_i^h)=1} - spend_i]`
/// with `B` the total budget. Errors when the total budget is zero.
pub fn welfare(h: &LinearClassifier, s: &Dataset, rho: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    let total: f64 = s.records().iter().map(|r| r.budget).sum();
    if total <= 0.0 {
        return Err(MarketError::ZeroTotalBudget);
    }
    let out = simulate_market(h, s, rho)?;
    Ok(metrics_from_outcome(h, s, rho, &out).welfare)
}

/// Budget-normalized social burden: the cost for every truly positive user
/// to reach a positive prediction, `(1/B+) sum_{y_i=1} rho * u_i`. The inner
/// cost ignores budgets (it is a pure cost-to-boundary, not a feasibility
/// statement). Errors when no positive-labeled user has a positive budget.
pub fn social_burden(h: &LinearClassifier, s: &Dataset, rho: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    let pos_budget: f64 =
        s.records().iter().filter(|r| r.label == 1).map(|r| r.budget).sum();
    if pos_budget <= 0.0 {
        return Err(MarketError::NoPositiveBudget);
    }
    let norm = h.weight_norm();
    if norm <= 0.0 || !norm.is_finite() {
        return Err(MarketError::DegenerateClassifier);
    }
    let mut burden_sum = 0.0;
    for rec in s.records().iter().filter(|r| r.label == 1) {
        let units = (-h.score(&rec.features) / norm).max(0.0);
        burden_sum += rho * units;
    }
    Ok(burden_sum / pos_budget)
}

/// Simulates the market at `rho` and computes all metrics.
pub fn evaluate(h: &LinearClassifier, s: &Dataset, rho: f64) -> Result<Metrics> {
    if s.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    let out = simulate_market(h, s, rho)?;
    Ok(metrics_from_outcome(h, s, rho, &out))
}

/// Short-term metrics at the frozen train-time price, and long-term metrics
/// at the price re-equilibrated on this dataset's own demand.
pub fn evaluate_short_long(
    h: &LinearClassifier,
    test: &Dataset,
    rho_train: f64,
) -> Result<(Metrics, Metrics)> {
    let short = evaluate(h, test, rho_train)?;
    let profile = demand_profile(h, test)?;
    let rho_long = exact_price(&profile).rho;
    let long = evaluate(h, test, rho_long)?;
    Ok((short, long))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::UserRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h(w: &[f64], tau: f64) -> LinearClassifier {
        LinearClassifier::new(w.to_vec(), tau)
    }

    fn ds(rows: &[(f64, f64, u8)]) -> Dataset {
        Dataset::new(
            rows.iter().map(|&(x, b, y)| UserRecord::new(vec![x], b, y)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn welfare_known_values() {
        let c = h(&[1.0], -1.0);
        // already positive: full budget, no spend
        assert!((welfare(&c, &ds(&[(2.0, 2.0, 1)]), 0.5).unwrap() - 1.0).abs() < 1e-15);
        // moves at cost 1: (2 - 1) / 2
        assert!((welfare(&c, &ds(&[(0.0, 2.0, 1)]), 1.0).unwrap() - 0.5).abs() < 1e-15);
        // nobody affords: zero
        assert_eq!(welfare(&c, &ds(&[(0.0, 0.4, 0)]), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn burden_known_values() {
        let c = h(&[1.0], -1.0);
        // all positives already positive
        assert_eq!(social_burden(&c, &ds(&[(2.0, 1.0, 1)]), 0.5).unwrap(), 0.0);
        // one positive at u = 2, rho = 0.5, b = 4 -> 1/4
        assert!((social_burden(&c, &ds(&[(-1.0, 4.0, 1)]), 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(social_burden(&c, &ds(&[(-1.0, 4.0, 1)]), 0.0).unwrap(), 0.0);
        assert!(social_burden(&c, &ds(&[(0.0, 1.0, 0)]), 0.5).is_err());
    }

    #[test]
    fn evaluate_limiting_prices() {
        let c = h(&[1.0], -1.0);
        let data = ds(&[(0.2, 1.0, 1), (0.5, 1.0, 0), (1.5, 1.0, 1), (-0.5, 1.0, 0)]);
        // a price nobody affords reproduces pre-market predictions:
        // only the positive at 0.2 is misclassified
        let frozen = evaluate(&c, &data, 1e12).unwrap();
        assert_eq!(frozen.n_movers, 0);
        assert!((frozen.accuracy - 0.75).abs() < 1e-15);
        // free features: every negative-side user crosses
        let free = evaluate(&c, &data, 0.0).unwrap();
        assert_eq!(free.n_movers, 3);
        assert!((free.accuracy - 0.5).abs() < 1e-15); // positives correct, negatives wrong
        assert!((free.crossed_neg_ratio - 1.0).abs() < 1e-15);
        assert!((free.crossed_pos_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_three_user_worked_case() {
        // users at x = 0 (y=1, b=2), x = 0.5 (y=0, b=0.2), x = 2 (y=1, b=1)
        // rho = 1: u = 1 and 0.5; the positive affords (1 <= 2), the negative
        // does not (0.5 > 0.2); the third is already positive.
        let c = h(&[1.0], -1.0);
        let data = ds(&[(0.0, 2.0, 1), (0.5, 0.2, 0), (2.0, 1.0, 1)]);
        let m = evaluate(&c, &data, 1.0).unwrap();
        assert_eq!(m.n_movers, 1);
        assert!((m.accuracy - 1.0).abs() < 1e-15);
        assert!((m.crossed_pos_ratio - 1.0).abs() < 1e-15);
        assert_eq!(m.crossed_neg_ratio, 0.0);
        // welfare: (2 - 1) + 0 + 1 over B = 3.2
        assert!((m.welfare - 2.0 / 3.2).abs() < 1e-12);
        // burden: positives at u=1 and u=0: rho*1 / (2+1)
        assert!((m.burden - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn movers_match_buyers_at_the_long_term_price() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let c = h(&[rng.gen_range(0.5..2.0)], rng.gen_range(-2.0..0.0));
            let rows: Vec<(f64, f64, u8)> = (0..30)
                .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0), rng.gen_range(0..=1)))
                .collect();
            let data = ds(&rows);
            let profile = demand_profile(&c, &data).unwrap();
            let quote = exact_price(&profile);
            let m = evaluate(&c, &data, quote.rho).unwrap();
            assert_eq!(m.n_movers, quote.buyers);
            assert!(m.welfare >= -1e-12 && m.welfare <= 1.0 + 1e-12);
            assert!(m.burden >= 0.0);
        }
    }

    #[test]
    fn short_equals_long_when_demand_is_unchanged() {
        let c = h(&[1.0], -1.0);
        let data = ds(&[(0.0, 1.0, 1), (0.5, 2.0, 0), (-0.3, 0.7, 0)]);
        let profile = demand_profile(&c, &data).unwrap();
        let rho_train = exact_price(&profile).rho;
        let (short, long) = evaluate_short_long(&c, &data, rho_train).unwrap();
        assert_eq!(short, long);
    }

    #[test]
    fn doubled_demand_halves_the_long_term_price() {
        let c = h(&[1.0], -1.0);
        let train = ds(&[(0.0, 1.0, 1), (0.4, 2.0, 0), (-0.6, 0.7, 0)]);
        let rho_train = exact_price(&demand_profile(&c, &train).unwrap()).rho;
        // shift users so every distance doubles, same budgets
        let test_rows: Vec<(f64, f64, u8)> = train
            .records()
            .iter()
            .map(|r| (2.0 * r.features[0] - 1.0, r.budget, r.label))
            .collect();
        let test = ds(&test_rows);
        let (_, long) = evaluate_short_long(&c, &test, rho_train).unwrap();
        assert!((long.rho_used - rho_train / 2.0).abs() <= 1e-9 * rho_train);
    }

    #[test]
    fn empty_demand_keeps_premarket_metrics() {
        let c = h(&[1.0], 1.0);
        let data = ds(&[(0.0, 1.0, 1), (1.0, 1.0, 0)]);
        let (short, long) = evaluate_short_long(&c, &data, 0.7).unwrap();
        assert_eq!(short.n_movers, 0);
        assert_eq!(long.n_movers, 0);
        assert_eq!(long.rho_used, 0.0);
        assert_eq!(short.accuracy, long.accuracy);
    }
}
