//! Seeded experiment sweeps over models, qubit counts, noise rates and runs.
//!
//! Every run is keyed by `(model, n, noise_rate, run)`. Its seed is
//! `derive_seed(base_seed, "run/n={n}/run={run}")`, so all models and noise
//! rates at the same `(n, run)` train on the same circuit, input state,
//! initial parameters and noise direction. Results are sorted by key before
//! aggregation, making output independent of scheduling.

pub mod metrics;
pub mod output;

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{train_loop, ModelTag, RunRecord, TrainConfig};
use crate::seed::derive_seed;

pub use metrics::{
    convergence_efficiency, efficiency_from_iterations, fluctuation_rate, mean, population_std, ModelSummary,
    NoiseSpread, RunFailure, SummaryRow, SummaryTable,
};
pub use output::{
    emit_plot_data, load_results, loss_band, read_trace, recompute_summary, write_outputs, LossBandRow, ScalingRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunKey {
    pub model: ModelTag,
    pub n_qubits: usize,
    pub noise_rate: f64,
    pub run: usize,
}

impl Eq for RunKey {}

impl Ord for RunKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.model, self.n_qubits)
            .cmp(&(other.model, other.n_qubits))
            .then(self.noise_rate.total_cmp(&other.noise_rate))
            .then(self.run.cmp(&other.run))
    }
}

impl PartialOrd for RunKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Outcome of one run. Errors are kept as messages so a failed run does
/// not abort the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub key: RunKey,
    pub seed: u64,
    pub outcome: std::result::Result<RunRecord, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub qubits: Vec<usize>,
    pub models: Vec<ModelTag>,
    pub runs_per_config: usize,
    pub noise_rates: Vec<f64>,
    /// Shared hyperparameters; `n_qubits` and `noise_rate` are set per run.
    pub train: TrainConfig,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            qubits: (7..=12).collect(),
            models: ModelTag::ALL.to_vec(),
            runs_per_config: 5,
            noise_rates: vec![0.01],
            train: TrainConfig::default(),
            base_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.runs_per_config == 0 {
            return bad("runs_per_config must be >= 1");
        }
        if self.qubits.is_empty() || self.models.is_empty() || self.noise_rates.is_empty() {
            return bad("qubits, models and noise_rates must be nonempty");
        }
        if self.qubits.iter().any(|&n| n < 2) {
            return bad("qubit counts must be >= 2");
        }
        for &rate in &self.noise_rates {
            self.train_for(rate, 2).validate()?;
        }
        Ok(())
    }

    fn train_for(&self, noise_rate: f64, n_qubits: usize) -> TrainConfig {
        TrainConfig { n_qubits, noise_rate, ..self.train.clone() }
    }

    /// Every run key, sorted.
    pub fn keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for &model in &self.models {
            for &n_qubits in &self.qubits {
                for &noise_rate in &self.noise_rates {
                    for run in 0..self.runs_per_config {
                        keys.push(RunKey { model, n_qubits, noise_rate, run });
                    }
                }
            }
        }
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn seed_for(&self, key: &RunKey) -> u64 {
        run_seed(self.base_seed, key.n_qubits, key.run)
    }

    /// Replays a single run.
    pub fn run_one(&self, key: RunKey) -> RunResult {
        let seed = self.seed_for(&key);
        let cfg = self.train_for(key.noise_rate, key.n_qubits);
        let outcome = train_loop(key.model, &cfg, seed).map_err(|e| e.to_string());
        RunResult { key, seed, outcome }
    }
}

pub fn run_seed(base_seed: u64, n_qubits: usize, run: usize) -> u64 {
    derive_seed(base_seed, &format!("run/n={n_qubits}/run={run}"))
}

/// Runs every configuration in parallel. `on_done` sees each result as it
/// finishes; the returned list is sorted by key.
pub fn run_sweep<F>(cfg: &ExperimentConfig, on_done: F) -> Result<Vec<RunResult>>
where
    F: Fn(&RunResult) + Sync,
{
    cfg.validate()?;
    let mut keys = cfg.keys();
    // Largest problems first keeps workers busy at the tail of the sweep.
    keys.sort_by_key(|k| std::cmp::Reverse(k.n_qubits));
    let mut results: Vec<RunResult> = keys
        .into_par_iter()
        .map(|key| {
            let r = cfg.run_one(key);
            on_done(&r);
            r
        })
        .collect();
    results.sort_by_key(|r| r.key);
    Ok(results)
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub results: Vec<RunResult>,
    pub summary: SummaryTable,
}

/// Runs the sweep, aggregates it and, if `out_dir` is given, writes traces,
/// `summary.json`, `config.json` and `plots/`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Experiment> {
    run_experiment_with(cfg, out_dir, |_| {})
}

pub fn run_experiment_with<F>(cfg: &ExperimentConfig, out_dir: Option<&Path>, on_done: F) -> Result<Experiment>
where
    F: Fn(&RunResult) + Sync,
{
    let results = run_sweep(cfg, on_done)?;
    let summary = SummaryTable::from_results(&results, cfg.train.max_iters, cfg.train.target_loss)?;
    if let Some(dir) = out_dir {
        write_outputs(dir, cfg, &results, &summary)?;
    }
    Ok(Experiment { results, summary })
}
