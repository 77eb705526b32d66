//! Strategic classification where manipulation costs come from a market the
//! classifier itself induces.
//!
//! A deployed linear classifier creates demand: negatively classified users
//! would buy feature mass to cross the decision boundary. With features sold
//! at per-unit prices, competition drives prices proportional to the
//! classifier's weights, and the scalar equilibrium price is the revenue
//! maximizer over units-per-budget demand. This crate computes those prices
//! exactly and differentiably, simulates user best responses, trains
//! market-aware linear classifiers against them, and generates the synthetic
//! populations used to study the resulting dynamics.
//!
//! Modules:
//! - [`market`]: domain types and demand extraction
//! - [`pricing`]: exact equilibrium prices and revenue curves
//! - [`smooth`]: differentiable surrogate prices with exact gradients
//! - [`response`]: user best responses and market simulation
//! - [`learning`]: losses, the training objective, and the trainers
//! - [`evaluation`]: post-market metrics, short- vs long-term protocol
//! - [`synthetic`]: seeded scenario generators
//! - [`analysis`]: expected-revenue theory checks and sweep studies

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod learning;
pub mod market;
pub mod pricing;
pub mod response;
pub mod smooth;
pub mod synthetic;

pub use analysis::{
    convergence_with_m, expected_maximizer, expected_revenue, price_setter_percentile,
    sensitivity_add_point, threshold_sweep, ConvergenceRecord, PdfFamily, PdfSpec,
    SensitivityRecord, ThresholdRecord,
};
pub use error::{MarketError, Result};
pub use evaluation::{evaluate, evaluate_short_long, social_burden, welfare, Metrics};
pub use learning::{
    adam_step, default_tau_grid, m_hinge, objective, strat_weight_vector, train_market_aware,
    train_naive, train_strat, EpochRecord, ModelState, ObjectiveEval, TrainConfig,
    TrainDiagnostics,
};
pub use market::{
    demand_profile, demand_profile_single_feature, demand_units, demand_units_single_feature,
    gini, predict, Dataset, DemandPoint, DemandProfile, LinearClassifier, UserRecord,
};
pub use pricing::{
    brute_force_price, classifier_price_vector, exact_price, price_vector, revenue_at,
    revenue_curve, PriceQuote, RevenueCandidate, RevenueCurve,
};
pub use response::{
    best_response, least_cost_bundle, simulate_market, simulate_market_mode, MarketOutcome,
    ResponseMode,
};
pub use smooth::{smooth_price, smooth_price_gradient, soft_sort, SmoothPriceConfig, SmoothPriceResult};
pub use synthetic::{
    adversarial_equal_revenue, beta_demand, budget_label_independent_scenario,
    gaussian_threshold_scenario, inverted_gap_scenario, minmax_rescale, power_budgets,
    two_feature_scenario, BudgetRule, Generated, ScenarioSpec,
};
