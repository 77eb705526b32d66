//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate classifier: weight vector has zero norm")]
    DegenerateClassifier,

    #[error("record {index}: budget must be finite and non-negative (got {budget})")]
    InvalidBudget { index: usize, budget: f64 },

    #[error("record {index}: label must be 0 or 1 (got {label})")]
    InvalidLabel { index: usize, label: u8 },

    #[error("record {index}: features must be finite")]
    NonFiniteFeature { index: usize },

    #[error("empty demand profile")]
    EmptyProfile,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("temperature must be strictly positive (got {0})")]
    InvalidTemperature(f64),

    #[error("no purchasable feature: every weight is non-positive")]
    InfeasibleResponse,

    #[error("inequality undefined: all budgets are zero")]
    UndefinedInequality,

    #[error("total budget is zero")]
    ZeroTotalBudget,

    #[error("no positive-labeled user with positive budget")]
    NoPositiveBudget,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("point {0} lies outside the pdf support")]
    OutsideSupport(f64),
}

pub type Result<T> = std::result::Result<T, MarketError>;
