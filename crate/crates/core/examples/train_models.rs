//! Trains all four strategies on one seeded 7-qubit instance.

use npid_lab::optim::{train_instance, Instance, ModelTag, TrainConfig};

fn main() -> npid_lab::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(Ok(7), |s| s.parse()).expect("qubit count");
    let cfg = TrainConfig { n_qubits: n, max_iters: 600, ..TrainConfig::default() };
    let seed = 0;
    let instance = Instance::from_seed(&cfg, seed)?;
    println!("n = {n}: {} parameters, depth {}", instance.spec.n_params(), instance.spec.depth());
    for model in ModelTag::ALL {
        let rec = train_instance(model, &cfg, &instance, seed)?;
        let first = rec.losses[0];
        let last = *rec.losses.last().unwrap();
        match rec.converged_at {
            Some(i) => println!("{model:>7}: {first:.4} -> {last:.2e}, converged at {i}"),
            None => println!("{model:>7}: {first:.4} -> {last:.2e}, not converged in {}", cfg.max_iters),
        }
    }
    Ok(())
}

// $ cargo run --release --example train_models -- 7
