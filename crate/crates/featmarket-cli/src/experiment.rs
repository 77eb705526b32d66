//! Experiment orchestration: splits, training protocols, sweeps, and report
//! files. All randomness derives from the config seed, so a rerun with the
//! same config reproduces every report byte for byte.

use std::path::Path;

use featmarket::{
    default_tau_grid, demand_profile, evaluate_short_long, exact_price, revenue_curve,
    simulate_market, strat_weight_vector, train_market_aware, train_naive, train_strat, Dataset,
    DemandProfile, Generated, LinearClassifier, ModelState, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{CommandKind, DataSource, ExperimentConfig};
use crate::dataio::{load_dataset, rescale_budgets, write_dataset};
use crate::error::CliError;
use crate::report::{
    aggregate, write_aggregates_csv, write_jsonl, EpochHistoryRecord, MetricsRecord, PriceRecord,
    SimulationRecord,
};

enum LoadedData {
    Dataset(Dataset),
    Profile(DemandProfile),
}

fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData, CliError> {
    let loaded = match &cfg.data {
        DataSource::Path(path) => LoadedData::Dataset(load_dataset(path)?),
        DataSource::Scenario(spec) => match spec.generate()? {
            Generated::Dataset(d) => LoadedData::Dataset(d),
            Generated::Profile(p) => LoadedData::Profile(p),
        },
    };
    if let (LoadedData::Dataset(d), Some(alpha)) = (&loaded, cfg.rescale_alpha) {
        return Ok(LoadedData::Dataset(rescale_budgets(d, alpha)?));
    }
    Ok(loaded)
}

fn require_dataset(loaded: LoadedData, command: CommandKind) -> Result<Dataset, CliError> {
    match loaded {
        LoadedData::Dataset(d) => Ok(d),
        LoadedData::Profile(_) => Err(CliError::input(format!(
            "the {command} command needs a labeled dataset, but the scenario produces a bare demand profile"
        ))),
    }
}

fn require_classifier(cfg: &ExperimentConfig) -> Result<LinearClassifier, CliError> {
    cfg.classifier
        .as_ref()
        .map(|c| LinearClassifier::new(c.weights.clone(), c.tau))
        .ok_or_else(|| CliError::input("this command needs a 'classifier' entry in the config"))
}

/// splitmix64-style seed derivation for independent substreams.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn split_dataset(
    data: &Dataset,
    fractions: &crate::config::SplitFractions,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), CliError> {
    let n = data.len();
    if n < 3 {
        return Err(CliError::input("need at least 3 records to split"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((fractions.train * n as f64).round() as usize).clamp(1, n - 2);
    let n_val = ((fractions.val * n as f64).round() as usize).clamp(1, n - n_train - 1);
    let take = |slice: &[usize]| -> Dataset {
        let records = slice.iter().map(|&i| data.records()[i].clone()).collect();
        Dataset::with_dim(records, data.dim()).expect("slices of a valid dataset are valid")
    };
    Ok((
        take(&idx[..n_train]),
        take(&idx[n_train..n_train + n_val]),
        take(&idx[n_train + n_val..]),
    ))
}

fn premarket_accuracy(h: &LinearClassifier, s: &Dataset) -> f64 {
    let correct = s
        .records()
        .iter()
        .filter(|r| {
            let pred = if h.score(&r.features) >= 0.0 { 1.0 } else { -1.0 };
            pred == r.signed_label()
        })
        .count();
    correct as f64 / s.len() as f64
}

fn train_time_price(h: &LinearClassifier, train: &Dataset) -> Result<f64, CliError> {
    Ok(exact_price(&demand_profile(h, train)?).rho)
}

/// Runs the naive / strat / market protocol over seeded splits, appending
/// one record per (method, horizon, split) and, when requested, per-epoch
/// training history.
fn run_protocol(
    data: &Dataset,
    alpha: Option<f64>,
    cfg: &ExperimentConfig,
    records: &mut Vec<MetricsRecord>,
    mut history: Option<&mut Vec<EpochHistoryRecord>>,
) -> Result<(), CliError> {
    for rep in 0..cfg.repetitions {
        let rep_seed = mix(cfg.seed, rep as u64 + 1);
        let (train, val, test) = split_dataset(data, &cfg.split, rep_seed)?;
        let train_cfg = TrainConfig { seed: mix(rep_seed, 0x7ea1), ..cfg.train.clone() };

        let naive = train_naive(&train, &train_cfg)?;
        let rho_naive = train_time_price(&naive.classifier, &train)?;

        let strat_w = strat_weight_vector(&naive.classifier, rho_naive)?;
        let grid = default_tau_grid(&strat_w, &train, cfg.tau_grid_size);
        let strat = train_strat(&train, &val, &train_cfg, &grid)?;

        let market_aware = train_market_aware(&train, &val, &train_cfg)?;
        let rho_market = train_time_price(&market_aware.classifier, &train)?;

        let entries: [(&str, &ModelState, f64); 3] = [
            ("naive", &naive, rho_naive),
            ("strat", &strat, strat.frozen_rho.unwrap_or(0.0)),
            ("market", &market_aware, rho_market),
        ];
        for (method, state, rho_short) in entries {
            let (short, long) = evaluate_short_long(&state.classifier, &test, rho_short)?;
            records.push(MetricsRecord::from_metrics(alpha, rep, method, "short", &short));
            records.push(MetricsRecord::from_metrics(alpha, rep, method, "long", &long));
        }
        records.push(MetricsRecord::benchmark(
            alpha,
            rep,
            "naive",
            premarket_accuracy(&naive.classifier, &test),
        ));
        if let Some(history) = history.as_deref_mut() {
            for (method, state) in [("naive", &naive), ("market", &market_aware)] {
                for (epoch, e) in state.history.iter().enumerate() {
                    history.push(EpochHistoryRecord {
                        record: "epoch",
                        split: rep,
                        method: method.into(),
                        epoch,
                        loss: e.loss,
                        rho_smooth_mean: e.rho_smooth_mean,
                        val_accuracy: e.val_accuracy,
                    });
                }
            }
        }
    }
    Ok(())
}

fn write_config(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| CliError::internal(format!("config serialization failed: {e}")))?;
    std::fs::write(out_dir.join("config.json"), text + "\n")
        .map_err(|e| CliError::internal(format!("cannot write config.json: {e}")))
}

/// Executes one command against a resolved config, emitting report files
/// into the output directory.
pub fn run_experiment(command: CommandKind, cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.validate(command)?;
    let out_dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", out_dir.display())))?;
    write_config(cfg, &out_dir)?;

    match command {
        CommandKind::Price => {
            let profile = match load_data(cfg)? {
                LoadedData::Profile(p) => p,
                LoadedData::Dataset(d) => {
                    let h = require_classifier(cfg)?;
                    demand_profile(&h, &d)?
                }
            };
            let quote = exact_price(&profile);
            let record = PriceRecord {
                record: "price",
                rho: quote.rho,
                setter_index: quote.setter_index,
                revenue: quote.revenue,
                buyers: quote.buyers,
                profile_size: profile.len(),
                source_size: profile.source_size,
                setter_percentile: (!profile.is_empty())
                    .then(|| quote.buyers as f64 / profile.len() as f64),
            };
            write_jsonl(&out_dir.join("records.jsonl"), &[record])?;
            let curve = revenue_curve(&profile);
            let mut csv = String::from("rho,revenue,origin_index\n");
            for c in &curve.candidates {
                csv.push_str(&format!("{},{},{}\n", c.rho, c.revenue, c.origin_index));
            }
            std::fs::write(out_dir.join("revenue_curve.csv"), csv)
                .map_err(|e| CliError::internal(format!("cannot write revenue_curve.csv: {e}")))?;
        }
        CommandKind::Simulate => {
            let data = require_dataset(load_data(cfg)?, command)?;
            let h = require_classifier(cfg)?;
            let rho = match cfg.rho {
                Some(r) => r,
                None => train_time_price(&h, &data)?,
            };
            let out = simulate_market(&h, &data, rho)?;
            let record = SimulationRecord {
                record: "simulation",
                rho,
                total_revenue: out.total_revenue,
                n_movers: out.moved.iter().filter(|&&m| m).count(),
                n_users: data.len(),
                response_mode: "directional".into(),
            };
            write_jsonl(&out_dir.join("records.jsonl"), &[record])?;
            let mut csv = String::from("user_index,label,budget,moved,crossed,spend");
            for k in 0..data.dim() {
                csv.push_str(&format!(",post_feature_{k}"));
            }
            csv.push('\n');
            for (i, rec) in data.records().iter().enumerate() {
                csv.push_str(&format!(
                    "{i},{},{},{},{},{}",
                    rec.label, rec.budget, out.moved[i], out.crossed[i], out.spend[i]
                ));
                for v in &out.post_features[i] {
                    csv.push_str(&format!(",{v}"));
                }
                csv.push('\n');
            }
            std::fs::write(out_dir.join("outcome.csv"), csv)
                .map_err(|e| CliError::internal(format!("cannot write outcome.csv: {e}")))?;
        }
        CommandKind::Eval => {
            let data = require_dataset(load_data(cfg)?, command)?;
            let h = require_classifier(cfg)?;
            let rho_train = match cfg.rho {
                Some(r) => r,
                None => train_time_price(&h, &data)?,
            };
            let (short, long) = evaluate_short_long(&h, &data, rho_train)?;
            let records = vec![
                MetricsRecord::from_metrics(None, 0, "classifier", "short", &short),
                MetricsRecord::from_metrics(None, 0, "classifier", "long", &long),
            ];
            write_jsonl(&out_dir.join("records.jsonl"), &records)?;
            write_aggregates_csv(&out_dir.join("aggregates.csv"), &aggregate(&records))?;
        }
        CommandKind::Train => {
            let data = require_dataset(load_data(cfg)?, command)?;
            let mut records = Vec::new();
            let mut history = Vec::new();
            run_protocol(&data, None, cfg, &mut records, Some(&mut history))?;
            write_jsonl(&out_dir.join("records.jsonl"), &records)?;
            write_jsonl(&out_dir.join("history.jsonl"), &history)?;
            write_aggregates_csv(&out_dir.join("aggregates.csv"), &aggregate(&records))?;
        }
        CommandKind::Sweep => {
            if cfg.rescale_alpha.is_some() {
                return Err(CliError::input(
                    "sweep uses sweep_alphas; drop the rescale_alpha entry",
                ));
            }
            let data = require_dataset(load_data(cfg)?, command)?;
            let mut records = Vec::new();
            for &alpha in &cfg.sweep_alphas {
                let rescaled = rescale_budgets(&data, alpha)?;
                run_protocol(&rescaled, Some(alpha), cfg, &mut records, None)?;
            }
            write_jsonl(&out_dir.join("records.jsonl"), &records)?;
            write_aggregates_csv(&out_dir.join("aggregates.csv"), &aggregate(&records))?;
        }
        CommandKind::Synth => {
            if !matches!(cfg.data, DataSource::Scenario(_)) {
                return Err(CliError::input("synth requires a 'scenario' data entry"));
            }
            let data = require_dataset(load_data(cfg)?, command)?;
            write_dataset(&out_dir.join("dataset.csv"), &data)?;
        }
    }
    Ok(())
}
