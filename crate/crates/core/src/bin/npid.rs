//! Command-line front end for convergence sweeps.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use npid_lab::circuit::{LogBase, NoiseTiming};
use npid_lab::harness::{recompute_summary, run_experiment_with, ExperimentConfig, SummaryTable};
use npid_lab::optim::{ModelTag, TrainConfig};

#[derive(Parser)]
#[command(name = "npid", about = "Seeded convergence sweeps for NPID, NEQP and QV on random circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep qubit counts at one noise rate.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.01)]
        noise_rate: f64,
    },
    /// Sweep noise rates.
    SweepNoise {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.03,0.05,0.07,0.09")]
        rates: Vec<f64>,
    },
    /// Recompute the summary from the traces in a sweep directory.
    Metrics {
        #[arg(long = "in")]
        dir: PathBuf,
        /// Overwrite summary.json with the recomputed table.
        #[arg(long)]
        write: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Qubit counts: `7..12` (inclusive) or a list such as `7,9,11`.
    #[arg(long, default_value = "7..12", value_parser = parse_qubits)]
    qubits: QubitList,
    #[arg(long, value_delimiter = ',', default_value = "npid,neqp-s,neqp-l,qv")]
    models: Vec<ModelTag>,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 1500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.001)]
    target_loss: f64,
    #[arg(long, default_value_t = 0.1)]
    lr_theta: f64,
    #[arg(long, default_value_t = 0.01)]
    lr_net: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Timing::Frozen)]
    noise_timing: Timing,
    /// Circuit depth; defaults to floor(n² log n).
    #[arg(long)]
    depth: Option<usize>,
    /// Use log base 2 in the depth schedule.
    #[arg(long)]
    log2_depth: bool,
    /// Also record the gradient norm per iteration.
    #[arg(long)]
    grad_norms: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Timing {
    Frozen,
    PerEvaluation,
}

#[derive(Clone)]
struct QubitList(Vec<usize>);

fn parse_qubits(s: &str) -> Result<QubitList, String> {
    let bad = |e: std::num::ParseIntError| e.to_string();
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi): (usize, usize) =
            (lo.trim().parse().map_err(bad)?, hi.trim_start_matches('=').trim().parse().map_err(bad)?);
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        return Ok(QubitList((lo..=hi).collect()));
    }
    s.split(',').map(|t| t.trim().parse().map_err(bad)).collect::<Result<_, _>>().map(QubitList)
}

impl Common {
    fn experiment(&self, noise_rates: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            qubits: self.qubits.0.clone(),
            models: self.models.clone(),
            runs_per_config: self.runs,
            noise_rates,
            train: TrainConfig {
                lr_theta: self.lr_theta,
                lr_net: self.lr_net,
                max_iters: self.max_iters,
                target_loss: self.target_loss,
                noise_timing: match self.noise_timing {
                    Timing::Frozen => NoiseTiming::Frozen,
                    Timing::PerEvaluation => NoiseTiming::PerEvaluation,
                },
                log_base: if self.log2_depth { LogBase::Two } else { LogBase::Natural },
                depth: self.depth,
                record_grad_norms: self.grad_norms,
                ..TrainConfig::default()
            },
            base_seed: self.seed,
        }
    }
}

fn sweep(common: &Common, rates: Vec<f64>) -> npid_lab::Result<SummaryTable> {
    let cfg = common.experiment(rates);
    let total = cfg.keys().len();
    let done = AtomicUsize::new(0);
    let exp = run_experiment_with(&cfg, Some(&common.out), |r| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        let status = match &r.outcome {
            Ok(rec) => match rec.converged_at {
                Some(i) => format!("converged at {i}"),
                None => format!("final loss {:.3e}", rec.losses.last().copied().unwrap_or(f64::NAN)),
            },
            Err(e) => format!("failed: {e}"),
        };
        eprintln!(
            "[{k}/{total}] {} n={} rate={} run={}: {status}",
            r.key.model, r.key.n_qubits, r.key.noise_rate, r.key.run
        );
    })?;
    eprintln!("wrote {}", common.out.display());
    Ok(exp.summary)
}

fn render_table(t: &SummaryTable) -> String {
    let mut s = format!(
        "{:<7} {:>3} {:>6} {:>5} {:>9} {:>10} {:>9} {:>6}\n",
        "model", "n", "rate", "runs", "converged", "mean_iter", "std_iter", "E_c"
    );
    for r in &t.rows {
        s += &format!(
            "{:<7} {:>3} {:>6} {:>5} {:>9} {:>10.1} {:>9.1} {:>6.3}\n",
            r.model.as_str(),
            r.n_qubits,
            r.noise_rate,
            r.runs,
            r.converged_runs,
            r.mean_iterations,
            r.std_iterations,
            r.efficiency
        );
    }
    for m in &t.models {
        s += &format!("{}: E_c = {:.3}\n", m.model, m.efficiency);
        for f in &m.noise_spread {
            s += &format!(
                "  n={} fluctuation across rates {:?}: {:.2}%\n",
                f.n_qubits, f.noise_rates, f.fluctuation_rate
            );
        }
    }
    for f in &t.failures {
        s += &format!(
            "failed: {} n={} rate={} run={}: {}\n",
            f.key.model, f.key.n_qubits, f.key.noise_rate, f.key.run, f.error
        );
    }
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, noise_rate } => sweep(common, vec![*noise_rate]),
        Command::SweepNoise { common, rates } => sweep(common, rates.clone()),
        Command::Metrics { dir, write } => recompute_summary(dir).and_then(|t| {
            if *write {
                std::fs::write(dir.join("summary.json"), t.to_json()?)?;
            }
            Ok(t)
        }),
    };
    match result {
        Ok(table) => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().write_all(render_table(&table).as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
