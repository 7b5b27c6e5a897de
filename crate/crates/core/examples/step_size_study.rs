//! NPID against plain gradient descent over a range of circuit step sizes.
//!
//! NPID's step is `lr·o_pid·g` with `o_pid` proportional to the loss, so
//! it helps where plain descent with the same `lr` overshoots and hurts
//! where plain descent is already stable.

use npid_lab::harness::{run_experiment, ExperimentConfig};
use npid_lab::optim::{ModelTag, TrainConfig};

fn main() -> npid_lab::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(Ok(7), |s| s.parse()).expect("qubit count");
    println!("{:>8} {:>7} {:>14} {:>14}", "lr_theta", "lr_net", "NPID iters", "QV iters");
    for (lr_theta, lr_net) in [(0.1, 0.01), (0.1, 10.0), (0.5, 0.01), (1.0, 0.01), (1.0, 1.0), (3.0, 0.01)] {
        let cfg = ExperimentConfig {
            qubits: vec![n],
            models: vec![ModelTag::Npid, ModelTag::Qv],
            runs_per_config: 3,
            noise_rates: vec![0.01],
            train: TrainConfig { lr_theta, lr_net, ..TrainConfig::default() },
            base_seed: 0,
        };
        let s = run_experiment(&cfg, None)?.summary;
        let cell = |m| {
            let r = s.row(m, n, 0.01).unwrap();
            format!("{:.0} ({}/{})", r.mean_iterations, r.converged_runs, r.runs)
        };
        println!("{lr_theta:>8} {lr_net:>7} {:>14} {:>14}", cell(ModelTag::Npid), cell(ModelTag::Qv));
    }
    Ok(())
}

// $ cargo run --release --example step_size_study -- 7
