//! Domain types and demand extraction.
//!
//! A linear classifier deployed over a population of budgeted users creates
//! demand: every negatively classified user would buy enough feature mass to
//! reach the decision boundary, if they can afford it. This module maps a
//! dataset and a classifier to the uni-dimensional demand profile that drives
//! all pricing downstream.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};

/// One market participant: a non-negative feature vector, a monetary budget,
/// and a binary label stored as {0, 1}.
///
/// Internally labels are used in signed form, `y = 2*label - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub features: Vec<f64>,
    pub budget: f64,
    pub label: u8,
}

impl UserRecord {
    pub fn new(features: Vec<f64>, budget: f64, label: u8) -> Self {
        Self { features, budget, label }
    }

    /// Label mapped to {-1.0, +1.0}.
    pub fn signed_label(&self) -> f64 {
        2.0 * f64::from(self.label) - 1.0
    }
}

/// An ordered list of user records sharing one feature dimension.
///
/// Iteration order is stable: indices into the dataset identify users in
/// every downstream report (price setters, movers, spends).
///
/// In-memory datasets tolerate zero budgets (such users simply cannot buy)
/// and unconstrained feature signs; the strict non-negativity rules apply at
/// file ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<UserRecord>,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset, inferring the dimension from the first record.
    pub fn new(records: Vec<UserRecord>) -> Result<Self> {
        let dim = records.first().map_or(0, |r| r.features.len());
        Self::with_dim(records, dim)
    }

    /// Builds a dataset with an explicit dimension (needed when empty).
    pub fn with_dim(records: Vec<UserRecord>, dim: usize) -> Result<Self> {
        for (index, rec) in records.iter().enumerate() {
            if rec.features.len() != dim {
                return Err(MarketError::DimensionMismatch {
                    expected: dim,
                    got: rec.features.len(),
                });
            }
            if !rec.budget.is_finite() || rec.budget < 0.0 {
                return Err(MarketError::InvalidBudget { index, budget: rec.budget });
            }
            if rec.label > 1 {
                return Err(MarketError::InvalidLabel { index, label: rec.label });
            }
            if rec.features.iter().any(|v| !v.is_finite()) {
                return Err(MarketError::NonFiniteFeature { index });
            }
        }
        Ok(Self { records, dim })
    }

    pub fn records(&self) -> &[UserRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Consumes the dataset, returning its records.
    pub fn into_records(self) -> Vec<UserRecord> {
        self.records
    }
}

/// A linear decision rule `sign(w'x + tau)`, with `sign(0) = +1`: boundary
/// points count as positive, so a user who buys exactly up to the boundary
/// obtains the positive prediction they paid for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub tau: f64,
}

impl LinearClassifier {
    pub fn new(weights: Vec<f64>, tau: f64) -> Self {
        Self { weights, tau }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Euclidean norm of the weight vector.
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Raw score `w'x + tau`. Dimensions are the caller's responsibility.
    pub fn score(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.tau
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.weights.len() {
            return Err(MarketError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_nondegenerate(&self) -> Result<f64> {
        let norm = self.weight_norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(MarketError::DegenerateClassifier);
        }
        Ok(norm)
    }
}

/// Prediction in {-1, +1}; `sign(0) = +1`.
pub fn predict(h: &LinearClassifier, x: &[f64]) -> Result<i8> {
    h.check_dim(x)?;
    Ok(if h.score(x) >= 0.0 { 1 } else { -1 })
}

/// Demand in units: the Euclidean distance from `x` to the decision boundary
/// when `x` is negatively classified, zero otherwise.
///
/// `u = max(0, -(w'x + tau) / ||w||)`
pub fn demand_units(h: &LinearClassifier, x: &[f64]) -> Result<f64> {
    h.check_dim(x)?;
    let norm = h.check_nondegenerate()?;
    Ok((-h.score(x) / norm).max(0.0))
}

/// Demand when purchases are restricted to feature `j` alone: the distance to
/// the boundary measured along that axis, `u_j = max(0, -(w'x + tau) / w_j)`.
/// Requires `w_j > 0`.
pub fn demand_units_single_feature(h: &LinearClassifier, x: &[f64], j: usize) -> Result<f64> {
    h.check_dim(x)?;
    if j >= h.dim() || h.weights[j] <= 0.0 {
        return Err(MarketError::InfeasibleResponse);
    }
    Ok((-h.score(x) / h.weights[j]).max(0.0))
}

/// One unit of market demand: a user's required units, their budget, and the
/// units-per-budget ratio that orders the market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandPoint {
    /// Units demanded, strictly positive.
    pub units: f64,
    /// Budget, strictly positive.
    pub budget: f64,
    /// `units / budget`.
    pub normalized: f64,
    /// Index of the user in the source dataset.
    pub origin_index: usize,
}

/// The demand side of the market: exactly the users with positive demand and
/// positive budget. `source_size` counts everyone in the originating dataset,
/// including the excluded users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    pub points: Vec<DemandPoint>,
    pub source_size: usize,
}

impl DemandProfile {
    /// Builds a profile from raw (units, budgets) pairs, using positions as
    /// origin indices. Pairs with `units <= 0` are excluded; budgets must be
    /// strictly positive.
    pub fn from_units_budgets(units: &[f64], budgets: &[f64]) -> Result<Self> {
        if units.len() != budgets.len() {
            return Err(MarketError::DimensionMismatch {
                expected: units.len(),
                got: budgets.len(),
            });
        }
        let mut points = Vec::new();
        for (i, (&u, &b)) in units.iter().zip(budgets).enumerate() {
            if !(b > 0.0) || !b.is_finite() {
                return Err(MarketError::InvalidBudget { index: i, budget: b });
            }
            if u > 0.0 {
                points.push(DemandPoint { units: u, budget: b, normalized: u / b, origin_index: i });
            }
        }
        Ok(Self { points, source_size: units.len() })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Extracts the demand profile a classifier induces over a dataset.
///
/// One point per user with `u > 0`, preserving origin indices. Users with a
/// zero budget carry no demand (they cannot buy at any positive price) and
/// are excluded alongside the positively classified.
pub fn demand_profile(h: &LinearClassifier, s: &Dataset) -> Result<DemandProfile> {
    if !s.is_empty() && s.dim() != h.dim() {
        return Err(MarketError::DimensionMismatch { expected: h.dim(), got: s.dim() });
    }
    let norm = h.check_nondegenerate()?;
    let mut points = Vec::new();
    for (i, rec) in s.records().iter().enumerate() {
        let u = (-h.score(&rec.features) / norm).max(0.0);
        if u > 0.0 && rec.budget > 0.0 {
            points.push(DemandPoint {
                units: u,
                budget: rec.budget,
                normalized: u / rec.budget,
                origin_index: i,
            });
        }
    }
    Ok(DemandProfile { points, source_size: s.len() })
}

/// Demand profile when purchases are restricted to feature `j` (`w_j > 0`).
/// Units are distances along that axis; the same users participate as in the
/// Euclidean profile.
pub fn demand_profile_single_feature(
    h: &LinearClassifier,
    s: &Dataset,
    j: usize,
) -> Result<DemandProfile> {
    if !s.is_empty() && s.dim() != h.dim() {
        return Err(MarketError::DimensionMismatch { expected: h.dim(), got: s.dim() });
    }
    if j >= h.dim() || h.weights[j] <= 0.0 {
        return Err(MarketError::InfeasibleResponse);
    }
    let mut points = Vec::new();
    for (i, rec) in s.records().iter().enumerate() {
        let u = (-h.score(&rec.features) / h.weights[j]).max(0.0);
        if u > 0.0 && rec.budget > 0.0 {
            points.push(DemandPoint {
                units: u,
                budget: rec.budget,
                normalized: u / rec.budget,
                origin_index: i,
            });
        }
    }
    Ok(DemandProfile { points, source_size: s.len() })
}

/// Gini coefficient of a budget list, in population (biased) form:
///
/// `sum_ij |b_i - b_j| / (2 n^2 mean(b))`
///
/// computed via the O(n log n) sorted identity. Scale invariant; zero for
/// perfect equality.
pub fn gini(budgets: &[f64]) -> Result<f64> {
    if budgets.is_empty() {
        return Err(MarketError::EmptyDataset);
    }
    let n = budgets.len() as f64;
    let total: f64 = budgets.iter().sum();
    if total <= 0.0 {
        return Err(MarketError::UndefinedInequality);
    }
    let mut sorted = budgets.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("budgets must not be NaN"));
    // sum_ij |b_i - b_j| = 2 * sum_i (2i - n + 1) * b_(i)  with i zero-based
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &b)| (2.0 * i as f64 - n + 1.0) * b)
        .sum();
    Ok(weighted / (n * total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(w: &[f64], tau: f64) -> LinearClassifier {
        LinearClassifier::new(w.to_vec(), tau)
    }

    #[test]
    fn predict_sign_convention() {
        let c = h(&[1.0, 0.0], -1.0);
        assert_eq!(predict(&c, &[2.0, 0.0]).unwrap(), 1);
        // boundary point is positive
        assert_eq!(predict(&c, &[1.0, 0.0]).unwrap(), 1);
        assert_eq!(predict(&c, &[0.0, 0.0]).unwrap(), -1);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let c = h(&[1.0, 0.0], 0.0);
        assert!(matches!(
            predict(&c, &[1.0]),
            Err(MarketError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn demand_is_distance_to_boundary() {
        let c = h(&[3.0, 4.0], -10.0);
        assert!((demand_units(&c, &[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        let c = h(&[1.0, 0.0], -1.0);
        assert_eq!(demand_units(&c, &[2.0, 0.0]).unwrap(), 0.0);
        let c = h(&[1.0, 0.0], 0.0);
        assert_eq!(demand_units(&c, &[0.5, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn demand_rejects_zero_weights() {
        let c = h(&[0.0, 0.0], 1.0);
        assert!(matches!(
            demand_units(&c, &[1.0, 1.0]),
            Err(MarketError::DegenerateClassifier)
        ));
    }

    #[test]
    fn demand_zero_iff_positive_prediction() {
        let c = h(&[2.0, -1.0], 0.3);
        for x in [[0.0, 0.0], [1.0, 5.0], [-2.0, 0.4], [0.1, 0.9]] {
            let u = demand_units(&c, &x).unwrap();
            let pred = predict(&c, &x).unwrap();
            assert_eq!(u == 0.0, pred == 1, "x={x:?}");
        }
    }

    #[test]
    fn demand_invariant_to_positive_rescaling() {
        let c = h(&[2.0, -1.0], 0.3);
        let x = [0.1, 0.9];
        let u = demand_units(&c, &x).unwrap();
        for alpha in [0.25, 3.0, 117.0] {
            let scaled = h(&[2.0 * alpha, -alpha], 0.3 * alpha);
            let us = demand_units(&scaled, &x).unwrap();
            assert!((u - us).abs() <= 1e-12 * u.max(1.0), "alpha={alpha}");
        }
    }

    #[test]
    fn profile_excludes_exactly_zero_demand_users() {
        let c = h(&[1.0], -1.0);
        let s = Dataset::new(vec![
            UserRecord::new(vec![0.0], 1.0, 0),
            UserRecord::new(vec![0.5], 1.0, 0),
            UserRecord::new(vec![2.0], 1.0, 1),
        ])
        .unwrap();
        let p = demand_profile(&c, &s).unwrap();
        assert_eq!(p.source_size, 3);
        assert_eq!(p.len(), 2);
        assert!((p.points[0].units - 1.0).abs() < 1e-15);
        assert!((p.points[0].normalized - 1.0).abs() < 1e-15);
        assert!((p.points[1].units - 0.5).abs() < 1e-15);
        assert_eq!(p.points[0].origin_index, 0);
        assert_eq!(p.points[1].origin_index, 1);
    }

    #[test]
    fn profile_normalizes_by_budget() {
        let c = h(&[1.0], -1.0);
        let s = Dataset::new(vec![
            UserRecord::new(vec![0.0], 2.0, 0),
            UserRecord::new(vec![0.5], 1.0, 0),
        ])
        .unwrap();
        let p = demand_profile(&c, &s).unwrap();
        assert!((p.points[0].normalized - 0.5).abs() < 1e-15);
        assert!((p.points[1].normalized - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profile_of_all_positive_users_is_empty() {
        let c = h(&[1.0], 0.0);
        let s = Dataset::new(vec![
            UserRecord::new(vec![1.0], 1.0, 1),
            UserRecord::new(vec![2.0], 1.0, 1),
        ])
        .unwrap();
        let p = demand_profile(&c, &s).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.source_size, 2);
    }

    #[test]
    fn empty_dataset_gives_empty_profile() {
        let c = h(&[1.0], 0.0);
        let s = Dataset::with_dim(vec![], 1).unwrap();
        let p = demand_profile(&c, &s).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.source_size, 0);
    }

    #[test]
    fn zero_budget_users_carry_no_demand() {
        let c = h(&[1.0], -1.0);
        let s = Dataset::new(vec![
            UserRecord::new(vec![0.0], 0.0, 0),
            UserRecord::new(vec![0.0], 1.0, 0),
        ])
        .unwrap();
        let p = demand_profile(&c, &s).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.points[0].origin_index, 1);
    }

    #[test]
    fn dataset_rejects_negative_budget_and_mixed_dims() {
        assert!(Dataset::new(vec![UserRecord::new(vec![1.0], -0.5, 0)]).is_err());
        assert!(Dataset::new(vec![
            UserRecord::new(vec![1.0], 1.0, 0),
            UserRecord::new(vec![1.0, 2.0], 1.0, 0),
        ])
        .is_err());
    }

    #[test]
    fn gini_known_values() {
        assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert!((gini(&[0.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
        // pairwise |differences| of (1,2,3,4) sum to 20; 2 n^2 mean = 80
        assert!((gini(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gini_matches_pairwise_oracle() {
        let budgets = [0.3, 2.0, 2.0, 7.5, 0.01, 1.2, 4.4];
        let n = budgets.len() as f64;
        let mean = budgets.iter().sum::<f64>() / n;
        let mut pairwise = 0.0;
        for a in budgets {
            for b in budgets {
                pairwise += (a - b).abs();
            }
        }
        let oracle = pairwise / (2.0 * n * n * mean);
        assert!((gini(&budgets).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn gini_scale_invariant() {
        let budgets = [1.0, 2.0, 3.0, 4.0, 10.0];
        let base = gini(&budgets).unwrap();
        for alpha in [0.01, 7.0, 1000.0] {
            let scaled: Vec<f64> = budgets.iter().map(|b| b * alpha).collect();
            assert!((gini(&scaled).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn gini_rejects_all_zero() {
        assert!(matches!(
            gini(&[0.0, 0.0]),
            Err(MarketError::UndefinedInequality)
        ));
    }
}
