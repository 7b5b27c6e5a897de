//! A small noise-rate sweep written to disk, then re-read from its traces.

use npid_lab::harness::{recompute_summary, run_experiment, ExperimentConfig};
use npid_lab::optim::{ModelTag, TrainConfig};

fn main() -> npid_lab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "noise_sweep_out".into());
    let cfg = ExperimentConfig {
        qubits: vec![4, 5],
        models: vec![ModelTag::Qv, ModelTag::NeqpS],
        runs_per_config: 3,
        noise_rates: vec![0.03, 0.05, 0.07, 0.09],
        train: TrainConfig { max_iters: 500, ..TrainConfig::default() },
        base_seed: 1,
    };
    let exp = run_experiment(&cfg, Some(out.as_ref()))?;
    for m in &exp.summary.models {
        println!("{}: efficiency {:.3}", m.model, m.efficiency);
        for s in &m.noise_spread {
            println!(
                "  n = {}: mean iterations {:?}, fluctuation {:.2}%",
                s.n_qubits, s.mean_iterations, s.fluctuation_rate
            );
        }
    }
    assert_eq!(recompute_summary(out.as_ref())?, exp.summary);
    println!("summary recomputed from {out}/ matches");
    Ok(())
}

// $ cargo run --release --example noise_sweep -- /tmp/sweep
