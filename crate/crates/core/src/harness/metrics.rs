//! Convergence metrics and the summary table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RunKey, RunResult};
use crate::error::{Error, Result};
use crate::optim::{ModelTag, RunRecord};

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("mean of an empty list"));
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Standard deviation with divisor `len`, not `len - 1`.
pub fn population_std(xs: &[f64]) -> Result<f64> {
    let m = mean(xs)?;
    Ok((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt())
}

/// Population standard deviation over mean, in percent.
pub fn fluctuation_rate(iterations: &[f64]) -> Result<f64> {
    let m = mean(iterations)?;
    if m == 0.0 || !m.is_finite() {
        return Err(Error::InvalidArgument(format!("fluctuation rate needs a nonzero mean, got {m}")));
    }
    Ok(population_std(iterations)? / m * 100.0)
}

/// Mean of `max_iters / conv` over the given per-run iteration counts.
pub fn efficiency_from_iterations(iterations: &[f64], max_iters: f64) -> Result<f64> {
    if let Some(bad) = iterations.iter().find(|c| c.is_nan() || **c <= 0.0) {
        return Err(Error::InvalidArgument(format!("iteration counts must be positive, got {bad}")));
    }
    mean(&iterations.iter().map(|c| max_iters / c).collect::<Vec<_>>())
}

/// Average convergence efficiency. A run that never reaches the target
/// counts `max_iters` iterations and so contributes exactly 1.
pub fn convergence_efficiency(records: &[RunRecord], max_iters: usize) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("convergence efficiency of no runs"));
    }
    let iters: Vec<f64> = records.iter().map(|r| r.iterations_to_converge(max_iters) as f64).collect();
    efficiency_from_iterations(&iters, max_iters as f64)
}

/// Aggregate over the runs of one `(model, n, noise_rate)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelTag,
    pub n_qubits: usize,
    pub noise_rate: f64,
    pub runs: usize,
    pub converged_runs: usize,
    /// Zero-based index of the first iteration below target, per run.
    pub converged_at: Vec<Option<usize>>,
    /// Iterations spent per run, `max_iters` when unconverged.
    pub iterations: Vec<usize>,
    pub mean_iterations: f64,
    pub std_iterations: f64,
    /// `max_iters / iterations` per run.
    pub ratios: Vec<f64>,
    pub efficiency: f64,
    pub mean_final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub key: RunKey,
    pub error: String,
}

/// Spread of mean iterations across noise rates at one qubit count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpread {
    pub n_qubits: usize,
    pub noise_rates: Vec<f64>,
    pub mean_iterations: Vec<f64>,
    pub fluctuation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelTag,
    /// Efficiency over every completed run of the model.
    pub efficiency: f64,
    /// Present for qubit counts swept over more than one noise rate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise_spread: Vec<NoiseSpread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub max_iters: usize,
    pub target_loss: f64,
    pub rows: Vec<SummaryRow>,
    pub models: Vec<ModelSummary>,
    /// Runs that errored; they are left out of every metric.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<RunFailure>,
}

impl SummaryTable {
    /// Aggregates results in any order; rows come out sorted by
    /// `(model, n, noise_rate)`.
    pub fn from_results(results: &[RunResult], max_iters: usize, target_loss: f64) -> Result<Self> {
        let mut groups: BTreeMap<(ModelTag, usize, u64), Vec<&RunResult>> = BTreeMap::new();
        let mut failures = Vec::new();
        for r in results {
            match &r.outcome {
                Ok(_) => {
                    // Rates are non-negative, so their bit patterns sort like the values.
                    let RunKey { model, n_qubits, noise_rate, .. } = r.key;
                    groups.entry((model, n_qubits, noise_rate.to_bits())).or_default().push(r);
                }
                Err(e) => failures.push(RunFailure { key: r.key, error: e.clone() }),
            }
        }
        failures.sort_by_key(|f| f.key);

        let mut rows = Vec::with_capacity(groups.len());
        for ((model, n_qubits, _), mut group) in groups {
            group.sort_by_key(|r| r.key.run);
            let noise_rate = group[0].key.noise_rate;
            let records: Vec<&RunRecord> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let iterations: Vec<usize> = records.iter().map(|r| r.iterations_to_converge(max_iters)).collect();
            let iters_f: Vec<f64> = iterations.iter().map(|&i| i as f64).collect();
            let finals: Vec<f64> = records.iter().filter_map(|r| r.losses.last().copied()).collect();
            rows.push(SummaryRow {
                model,
                n_qubits,
                noise_rate,
                runs: records.len(),
                converged_runs: records.iter().filter(|r| r.converged_at.is_some()).count(),
                converged_at: records.iter().map(|r| r.converged_at).collect(),
                mean_iterations: mean(&iters_f)?,
                std_iterations: population_std(&iters_f)?,
                ratios: iters_f.iter().map(|c| max_iters as f64 / c).collect(),
                efficiency: efficiency_from_iterations(&iters_f, max_iters as f64)?,
                mean_final_loss: mean(&finals)?,
                iterations,
            });
        }

        let mut models = Vec::new();
        let mut tags: Vec<ModelTag> = rows.iter().map(|r| r.model).collect();
        tags.dedup();
        for model in tags {
            let mine: Vec<&SummaryRow> = rows.iter().filter(|r| r.model == model).collect();
            let all_ratios: Vec<f64> = mine.iter().flat_map(|r| r.ratios.iter().copied()).collect();
            let mut noise_spread = Vec::new();
            let mut qubits: Vec<usize> = mine.iter().map(|r| r.n_qubits).collect();
            qubits.dedup();
            for n in qubits {
                let at_n: Vec<&&SummaryRow> = mine.iter().filter(|r| r.n_qubits == n).collect();
                if at_n.len() < 2 {
                    continue;
                }
                let means: Vec<f64> = at_n.iter().map(|r| r.mean_iterations).collect();
                noise_spread.push(NoiseSpread {
                    n_qubits: n,
                    noise_rates: at_n.iter().map(|r| r.noise_rate).collect(),
                    fluctuation_rate: fluctuation_rate(&means)?,
                    mean_iterations: means,
                });
            }
            models.push(ModelSummary { model, efficiency: mean(&all_ratios)?, noise_spread });
        }

        Ok(Self { max_iters, target_loss, rows, models, failures })
    }

    pub fn row(&self, model: ModelTag, n_qubits: usize, noise_rate: f64) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.model == model && r.n_qubits == n_qubits && r.noise_rate == noise_rate)
    }

    pub fn model(&self, model: ModelTag) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == model)
    }

    /// Pretty JSON with fields in declaration order.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
