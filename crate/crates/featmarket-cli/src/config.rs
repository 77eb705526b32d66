//! Experiment configuration: a single JSON document. Unknown keys are
//! rejected so sweep configs fail loudly on typos.

use std::path::{Path, PathBuf};

use featmarket::{ScenarioSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Price,
    Simulate,
    Train,
    Eval,
    Sweep,
    Synth,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CommandKind::Price => "price",
            CommandKind::Simulate => "simulate",
            CommandKind::Train => "train",
            CommandKind::Eval => "eval",
            CommandKind::Sweep => "sweep",
            CommandKind::Synth => "synth",
        };
        f.write_str(name)
    }
}

/// Where the data comes from: a CSV file or a generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Path(PathBuf),
    Scenario(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub weights: Vec<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.7, val: 0.1, test: 0.2 }
    }
}

fn default_repetitions() -> usize {
    10
}

fn default_tau_grid_size() -> usize {
    64
}

fn default_sweep_alphas() -> Vec<f64> {
    vec![2.0, 4.0, 6.0, 8.0, 10.0]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional command echo; when present it must match the subcommand.
    #[serde(default)]
    pub command: Option<CommandKind>,
    pub data: DataSource,
    /// Fixed classifier for price/simulate/eval.
    #[serde(default)]
    pub classifier: Option<ClassifierSpec>,
    /// Fixed price for simulate/eval; defaults to the equilibrium price on
    /// the loaded data.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_tau_grid_size")]
    pub tau_grid_size: usize,
    /// Budget rescale exponent: budgets affinely mapped to [1, 2^alpha].
    #[serde(default)]
    pub rescale_alpha: Option<f64>,
    /// Exponents for the sweep command.
    #[serde(default = "default_sweep_alphas")]
    pub sweep_alphas: Vec<f64>,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self, command: CommandKind) -> Result<(), CliError> {
        if let Some(declared) = self.command {
            if declared != command {
                return Err(CliError::input(format!(
                    "config declares command '{declared}' but '{command}' was invoked"
                )));
            }
        }
        let s = &self.split;
        if s.train <= 0.0 || s.val <= 0.0 || s.test <= 0.0 {
            return Err(CliError::input("split fractions must be positive"));
        }
        if (s.train + s.val + s.test - 1.0).abs() > 1e-9 {
            return Err(CliError::input("split fractions must sum to 1"));
        }
        if self.repetitions == 0 {
            return Err(CliError::input("repetitions must be at least 1"));
        }
        if let Some(alpha) = self.rescale_alpha {
            if alpha < 0.0 || !alpha.is_finite() {
                return Err(CliError::input("rescale_alpha must be non-negative"));
            }
        }
        if matches!(command, CommandKind::Sweep) && self.sweep_alphas.is_empty() {
            return Err(CliError::input("sweep requires a non-empty sweep_alphas list"));
        }
        Ok(())
    }
}
