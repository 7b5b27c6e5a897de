//! Files written by a sweep and read back by `metrics`.
//!
//! ```text
//! DIR/config.json
//! DIR/summary.json
//! DIR/trace_<model>_<n>_<rate>_<run>.csv    iter,loss[,grad_norm]
//! DIR/plots/loss_<model>_<n>_<rate>.csv     iter,mean,std
//! DIR/plots/iterations_vs_qubits.csv
//! DIR/plots/iterations_vs_noise.csv
//! ```
//!
//! Trace values are written with 17 significant digits, enough to recover
//! every `f64` exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::metrics::{mean, population_std, SummaryRow, SummaryTable};
use super::{ExperimentConfig, RunKey, RunResult};
use crate::error::{Error, Result};
use crate::optim::{ModelTag, RunRecord};

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOTS_DIR: &str = "plots";

pub fn trace_file_name(key: &RunKey) -> String {
    format!("trace_{}_{}_{}_{}.csv", key.model, key.n_qubits, key.noise_rate, key.run)
}

/// Inverse of [`trace_file_name`].
pub fn parse_trace_file_name(name: &str) -> Option<RunKey> {
    let stem = name.strip_prefix("trace_")?.strip_suffix(".csv")?;
    let mut parts = stem.split('_');
    let key = RunKey {
        model: parts.next()?.parse().ok()?,
        n_qubits: parts.next()?.parse().ok()?,
        noise_rate: parts.next()?.parse().ok()?,
        run: parts.next()?.parse().ok()?,
    };
    parts.next().is_none().then_some(key)
}

pub fn write_trace(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let norms = record.grad_norms.as_deref();
    if norms.is_some() {
        w.write_record(["iter", "loss", "grad_norm"])?;
    } else {
        w.write_record(["iter", "loss"])?;
    }
    for (i, loss) in record.losses.iter().enumerate() {
        let mut row = vec![i.to_string(), format!("{loss:.16e}")];
        if let Some(g) = norms.and_then(|n| n.get(i)) {
            row.push(format!("{g:.16e}"));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Loss and optional gradient-norm columns of a trace file.
pub fn read_trace(path: &Path) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let has_norms = r.headers()?.iter().any(|h| h == "grad_norm");
    let mut losses = Vec::new();
    let mut norms = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let field = |j: usize| -> Result<f64> {
            row.get(j)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("{}: bad value on row {i}", path.display())))
        };
        losses.push(field(1)?);
        if has_norms {
            norms.push(field(2)?);
        }
    }
    Ok((losses, has_norms.then_some(norms)))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Per-iteration statistics across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBandRow {
    pub iter: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation of the loss at each iteration.
/// Runs that stopped early are padded with their final loss.
pub fn loss_band(records: &[&RunRecord]) -> Result<Vec<LossBandRow>> {
    let len = records.iter().map(|r| r.losses.len()).max().ok_or(Error::Empty("loss band of no runs"))?;
    (0..len)
        .map(|iter| {
            let at: Vec<f64> = records.iter().filter_map(|r| r.losses.get(iter).or(r.losses.last()).copied()).collect();
            Ok(LossBandRow { iter, mean: mean(&at)?, std: population_std(&at)? })
        })
        .collect()
}

/// One point of the iterations-vs-qubits and iterations-vs-noise series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub model: ModelTag,
    pub n_qubits: usize,
    pub noise_rate: f64,
    pub mean_iterations: f64,
    pub std_iterations: f64,
    pub efficiency: f64,
}

impl From<&SummaryRow> for ScalingRow {
    fn from(r: &SummaryRow) -> Self {
        Self {
            model: r.model,
            n_qubits: r.n_qubits,
            noise_rate: r.noise_rate,
            mean_iterations: r.mean_iterations,
            std_iterations: r.std_iterations,
            efficiency: r.efficiency,
        }
    }
}

/// Writes loss bands per configuration and the two scaling series into
/// `dir`. Returns the files written.
pub fn emit_plot_data(results: &[RunResult], summary: &SummaryTable, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for row in &summary.rows {
        let records: Vec<&RunRecord> = results
            .iter()
            .filter(|r| {
                r.key.model == row.model && r.key.n_qubits == row.n_qubits && r.key.noise_rate == row.noise_rate
            })
            .filter_map(|r| r.outcome.as_ref().ok())
            .collect();
        let path = dir.join(format!("loss_{}_{}_{}.csv", row.model, row.n_qubits, row.noise_rate));
        write_csv(&path, &loss_band(&records)?)?;
        written.push(path);
    }

    let mut scaling: Vec<ScalingRow> = summary.rows.iter().map(ScalingRow::from).collect();
    let by_noise = dir.join("iterations_vs_noise.csv");
    write_csv(&by_noise, &scaling)?;
    scaling.sort_by_key(|r| (r.model, r.noise_rate.to_bits(), r.n_qubits));
    let by_qubits = dir.join("iterations_vs_qubits.csv");
    write_csv(&by_qubits, &scaling)?;
    written.extend([by_qubits, by_noise]);
    Ok(written)
}

/// Writes everything a sweep produces into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, results: &[RunResult], summary: &SummaryTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), serde_json::to_string_pretty(cfg)?)?;
    for r in results {
        if let Ok(record) = &r.outcome {
            write_trace(&dir.join(trace_file_name(&r.key)), record)?;
        }
    }
    fs::write(dir.join(SUMMARY_FILE), summary.to_json()?)?;
    emit_plot_data(results, summary, &dir.join(PLOTS_DIR))?;
    Ok(())
}

/// Rebuilds run results from `config.json` and the trace files in `dir`.
/// Convergence is recomputed from the stored losses; NPID gains are not
/// stored and come back empty.
pub fn load_results(dir: &Path) -> Result<(ExperimentConfig, Vec<RunResult>)> {
    let cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
    let mut results = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(key) = path.file_name().and_then(|n| n.to_str()).and_then(parse_trace_file_name) else {
            continue;
        };
        let (losses, grad_norms) = read_trace(&path)?;
        let seed = cfg.seed_for(&key);
        let record = RunRecord {
            model_tag: key.model,
            seed,
            n_qubits: key.n_qubits,
            noise_rate: key.noise_rate,
            converged_at: losses.iter().position(|l| *l < cfg.train.target_loss),
            losses,
            grad_norms,
            gains: Vec::new(),
        };
        results.push(RunResult { key, seed, outcome: Ok(record) });
    }
    if results.is_empty() {
        return Err(Error::InvalidArgument(format!("no trace files in {}", dir.display())));
    }
    results.sort_by_key(|r| r.key);
    Ok((cfg, results))
}

/// Recomputes the summary table from a sweep directory.
pub fn recompute_summary(dir: &Path) -> Result<SummaryTable> {
    let (cfg, results) = load_results(dir)?;
    SummaryTable::from_results(&results, cfg.train.max_iters, cfg.train.target_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(losses: Vec<f64>) -> RunRecord {
        RunRecord {
            model_tag: ModelTag::Qv,
            seed: 0,
            n_qubits: 3,
            noise_rate: 0.01,
            converged_at: None,
            losses,
            grad_norms: None,
            gains: vec![],
        }
    }

    #[test]
    fn trace_names_round_trip() {
        for model in ModelTag::ALL {
            let key = RunKey { model, n_qubits: 11, noise_rate: 0.07, run: 4 };
            assert_eq!(parse_trace_file_name(&trace_file_name(&key)), Some(key));
        }
        assert_eq!(
            trace_file_name(&RunKey { model: ModelTag::NeqpS, n_qubits: 7, noise_rate: 0.01, run: 0 }),
            "trace_neqp-s_7_0.01_0.csv"
        );
        assert_eq!(parse_trace_file_name("trace_qv_7_0.01.csv"), None);
    }

    #[test]
    fn single_run_band_has_zero_std() {
        let r = record(vec![0.9, 0.5, 0.1]);
        let band = loss_band(&[&r]).unwrap();
        assert_eq!(band.len(), 3);
        assert!(band.iter().all(|b| b.std == 0.0));
        assert_eq!(band[1].mean, 0.5);
    }

    #[test]
    fn short_runs_are_padded_with_final_loss() {
        let a = record(vec![0.8, 0.2]);
        let b = record(vec![0.6, 0.4, 0.3, 0.1]);
        let band = loss_band(&[&a, &b]).unwrap();
        assert_eq!(band.len(), 4);
        assert!((band[3].mean - 0.15).abs() < 1e-15);
        assert!((band[3].std - 0.05).abs() < 1e-15);
    }

    #[test]
    fn trace_keeps_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut r = record(vec![0.1 + 0.2, 1.0 / 3.0, 5e-320, 0.0]);
        r.grad_norms = Some(vec![1.0, 2.0, 3.0, std::f64::consts::PI]);
        write_trace(&path, &r).unwrap();
        let (losses, norms) = read_trace(&path).unwrap();
        assert_eq!(losses, r.losses);
        assert_eq!(norms, r.grad_norms);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("iter,loss,grad_norm\n0,3.0000000000000004e-1,"));
    }

    proptest! {
        #[test]
        fn band_csv_round_trips(rows in proptest::collection::vec((0.0f64..1.0, 0.0f64..0.5), 1..30)) {
            let band: Vec<LossBandRow> = rows.iter().enumerate().map(|(iter, (mean, std))| LossBandRow { iter, mean: *mean, std: *std }).collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("band.csv");
            write_csv(&path, &band).unwrap();
            prop_assert_eq!(read_csv::<LossBandRow>(&path).unwrap(), band);
        }

        #[test]
        fn scaling_csv_round_trips(n in 2usize..13, rate in 0.0f64..0.1, m in 1.0f64..1500.0) {
            let row = ScalingRow { model: ModelTag::NeqpL, n_qubits: n, noise_rate: rate, mean_iterations: m, std_iterations: m / 7.0, efficiency: 1500.0 / m };
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.csv");
            write_csv(&path, &[row]).unwrap();
            prop_assert_eq!(read_csv::<ScalingRow>(&path).unwrap(), vec![row]);
        }
    }
}
