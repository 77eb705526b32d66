//! Synthetic scenario generators.
//!
//! Each generator is deterministic under its seed. "Scaled to [lo, hi]"
//! means affine min-max rescaling of the drawn sample, so the stated
//! endpoints are hit exactly; a degenerate (all-equal) sample maps to the
//! interval midpoint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::{Dataset, DemandProfile, UserRecord};

/// How budgets are assigned to generated demand units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum BudgetRule {
    /// Everyone holds budget 1.
    Uniform,
    /// `b = u^(-alpha)`: budgets shrink as demand grows.
    Power { alpha: f64 },
}

/// A fully specified synthetic construction, including its sample size and
/// seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Demand units drawn from Beta(a, b), sample-rescaled to [lo, hi].
    BetaDemand { a: f64, b: f64, lo: f64, hi: f64, m: usize, budgets: BudgetRule, seed: u64 },
    /// 1-D two-Gaussian threshold construction: negatives scaled into
    /// [-1, 0], positives into [0, 1], budgets linear in the feature from
    /// b_min to b_max.
    GaussianThreshold { m: usize, b_min: f64, b_max: f64, p1: f64, seed: u64 },
    /// 2-D construction where feature 1 separates the classes (means at
    /// -mu, +mu), feature 2 is uninformative, and budgets are 1 + 4*label.
    TwoFeature { m: usize, mu: f64, sigma: f64, p1: f64, seed: u64 },
    /// 2-D construction where budgets track feature 1 and labels track
    /// feature 2, so budgets are label-independent.
    BudgetLabelIndependent { m: usize, seed: u64 },
    /// 1-D class-conditional Gaussians with a signed mean gap; negatives
    /// hold zero budget and can never buy.
    InvertedGap { m: usize, mu0: f64, mu1: f64, sigma: f64, p1: f64, b1: f64, seed: u64 },
    /// The recursive equal-revenue demand profile (every candidate beyond
    /// the first attains the same revenue).
    AdversarialEqualRevenue { m: usize },
}

/// A generated scenario: either a labeled dataset or a bare demand profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Dataset(Dataset),
    Profile(DemandProfile),
}

impl ScenarioSpec {
    pub fn generate(&self) -> Result<Generated> {
        match *self {
            ScenarioSpec::BetaDemand { a, b, lo, hi, m, ref budgets, seed } => {
                Ok(Generated::Profile(beta_demand(a, b, lo, hi, m, budgets, seed)?))
            }
            ScenarioSpec::GaussianThreshold { m, b_min, b_max, p1, seed } => {
                Ok(Generated::Dataset(gaussian_threshold_scenario(m, b_min, b_max, p1, seed)?))
            }
            ScenarioSpec::TwoFeature { m, mu, sigma, p1, seed } => {
                Ok(Generated::Dataset(two_feature_scenario(m, mu, sigma, p1, seed)?))
            }
            ScenarioSpec::BudgetLabelIndependent { m, seed } => {
                Ok(Generated::Dataset(budget_label_independent_scenario(m, seed)?))
            }
            ScenarioSpec::InvertedGap { m, mu0, mu1, sigma, p1, b1, seed } => {
                Ok(Generated::Dataset(inverted_gap_scenario(m, mu0, mu1, sigma, p1, b1, seed)?))
            }
            ScenarioSpec::AdversarialEqualRevenue { m } => {
                Ok(Generated::Profile(adversarial_equal_revenue(m)?))
            }
        }
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(MarketError::InvalidScenario(msg.into()))
    }
}

/// Affine min-max rescale of `values` so the sample minimum maps to `lo` and
/// the maximum to `hi`. An all-equal sample maps to the midpoint.
pub fn minmax_rescale(values: &mut [f64], lo: f64, hi: f64) {
    if values.is_empty() {
        return;
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        for v in values.iter_mut() {
            *v = lo + (*v - min) * (hi - lo) / (max - min);
        }
    } else {
        values.iter_mut().for_each(|v| *v = (lo + hi) / 2.0);
    }
}

/// Power-law budgets `b_i = u_i^(-alpha)`; alpha = 0 gives uniform budgets.
pub fn power_budgets(units: &[f64], alpha: f64) -> Vec<f64> {
    units.iter().map(|u| u.powf(-alpha)).collect()
}

/// Demand profile with units drawn from Beta(a, b) and sample-rescaled to
/// [lo, hi]; budgets per the rule.
pub fn beta_demand(
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    m: usize,
    budgets: &BudgetRule,
    seed: u64,
) -> Result<DemandProfile> {
    check(a > 0.0 && b > 0.0, "Beta shapes must be positive")?;
    check(lo < hi, "lo must be below hi")?;
    check(lo >= 0.0, "demand units must be non-negative")?;
    check(m >= 1, "m must be at least 1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Beta::new(a, b).map_err(|e| MarketError::InvalidScenario(e.to_string()))?;
    let mut units: Vec<f64> = (0..m).map(|_| dist.sample(&mut rng)).collect();
    minmax_rescale(&mut units, lo, hi);
    let budgets = match budgets {
        BudgetRule::Uniform => vec![1.0; m],
        BudgetRule::Power { alpha } => power_budgets(&units, *alpha),
    };
    DemandProfile::from_units_budgets(&units, &budgets)
}

/// Two class-conditional Gaussians on a line: the negative sample is scaled
/// into [-1, 0], the positive one into [0, 1], and budgets rise linearly
/// with the feature from `b_min` to `b_max` (equal values give uniform
/// budgets).
pub fn gaussian_threshold_scenario(
    m: usize,
    b_min: f64,
    b_max: f64,
    p1: f64,
    seed: u64,
) -> Result<Dataset> {
    check(m >= 1, "m must be at least 1")?;
    check(p1 > 0.0 && p1 < 1.0, "class prior must lie in (0, 1)")?;
    check(b_min > 0.0 && b_max >= b_min, "budgets must satisfy 0 < b_min <= b_max")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let labels: Vec<u8> = (0..m).map(|_| u8::from(rng.gen::<f64>() < p1)).collect();
    let mut z: Vec<f64> = (0..m).map(|_| normal.sample(&mut rng)).collect();

    for class in [0u8, 1u8] {
        let mut vals: Vec<f64> = labels
            .iter()
            .zip(&z)
            .filter(|(l, _)| **l == class)
            .map(|(_, v)| *v)
            .collect();
        let (lo, hi) = if class == 0 { (-1.0, 0.0) } else { (0.0, 1.0) };
        minmax_rescale(&mut vals, lo, hi);
        let mut it = vals.into_iter();
        for (l, v) in labels.iter().zip(z.iter_mut()) {
            if *l == class {
                *v = it.next().unwrap();
            }
        }
    }

    let records = labels
        .iter()
        .zip(&z)
        .map(|(&label, &zi)| {
            let budget = b_min + (zi + 1.0) / 2.0 * (b_max - b_min);
            UserRecord::new(vec![zi], budget, label)
        })
        .collect();
    Dataset::new(records)
}

/// 2-D scenario: feature 1 separates the classes with means -mu and +mu,
/// feature 2 has one distribution for both classes, budgets are
/// `1 + 4 * label`.
pub fn two_feature_scenario(m: usize, mu: f64, sigma: f64, p1: f64, seed: u64) -> Result<Dataset> {
    check(m >= 1, "m must be at least 1")?;
    check(sigma > 0.0, "sigma must be positive")?;
    check(p1 > 0.0 && p1 < 1.0, "class prior must lie in (0, 1)")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let records = (0..m)
        .map(|_| {
            let label = u8::from(rng.gen::<f64>() < p1);
            let sign = 2.0 * f64::from(label) - 1.0;
            let x1 = sign * mu + noise.sample(&mut rng);
            let x2 = noise.sample(&mut rng);
            UserRecord::new(vec![x1, x2], 1.0 + 4.0 * f64::from(label), label)
        })
        .collect();
    Dataset::new(records)
}

/// 2-D scenario with label-independent budgets: feature 1 ~ N(0, 0.4)
/// everywhere and drives budgets `max(0.1, 2.5 x1 + eps)`, feature 2 is
/// class-conditional N(2y - 1, 0.3), prior 0.25.
pub fn budget_label_independent_scenario(m: usize, seed: u64) -> Result<Dataset> {
    check(m >= 1, "m must be at least 1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1_dist = Normal::new(0.0, 0.4).unwrap();
    let x2_noise = Normal::new(0.0, 0.3).unwrap();
    let eps = Normal::new(0.0, 0.2).unwrap();
    let records = (0..m)
        .map(|_| {
            let label = u8::from(rng.gen::<f64>() < 0.25);
            let x1 = x1_dist.sample(&mut rng);
            let x2 = 2.0 * f64::from(label) - 1.0 + x2_noise.sample(&mut rng);
            let budget = f64::max(2.5 * x1 + eps.sample(&mut rng), 0.1);
            UserRecord::new(vec![x1, x2], budget, label)
        })
        .collect();
    Dataset::new(records)
}

/// 1-D class-conditional Gaussians with signed mean gap `mu1 - mu0`;
/// budgets are `b1 * label`, so negatives can never buy.
pub fn inverted_gap_scenario(
    m: usize,
    mu0: f64,
    mu1: f64,
    sigma: f64,
    p1: f64,
    b1: f64,
    seed: u64,
) -> Result<Dataset> {
    check(m >= 1, "m must be at least 1")?;
    check(sigma > 0.0, "sigma must be positive")?;
    check(p1 > 0.0 && p1 < 1.0, "class prior must lie in (0, 1)")?;
    check(b1 > 0.0, "b1 must be positive")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let records = (0..m)
        .map(|_| {
            let label = u8::from(rng.gen::<f64>() < p1);
            let mean = if label == 1 { mu1 } else { mu0 };
            let x = mean + noise.sample(&mut rng);
            UserRecord::new(vec![x], b1 * f64::from(label), label)
        })
        .collect();
    Dataset::new(records)
}

/// The recursive demand sequence `u_1 = 1, u_2 = 2, u_i = 2 * sum_{j<i} u_j`
/// with uniform budgets: every candidate price beyond the first attains the
/// same revenue.
pub fn adversarial_equal_revenue(m: usize) -> Result<DemandProfile> {
    check(m >= 3, "the construction needs at least 3 points")?;
    let mut units = vec![1.0, 2.0];
    let mut total = 3.0;
    for _ in 2..m {
        let next = 2.0 * total;
        units.push(next);
        total += next;
    }
    let budgets = vec![1.0; m];
    DemandProfile::from_units_budgets(&units, &budgets)
}
