//! Fits `sin(x)` on [-π, π] with a tanh network and plain SGD.

use npid_lab::neural::{Mlp, OutputActivation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> npid_lab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = Mlp::new(&[1, 32, 32, 1], OutputActivation::Identity, &mut rng)?;
    let xs: Vec<f64> = (0..64).map(|i| -std::f64::consts::PI + i as f64 * std::f64::consts::TAU / 63.0).collect();

    for epoch in 0..=4000 {
        let x = xs[rng.random_range(0..xs.len())];
        let y = net.forward(&[x])?[0];
        let grads = net.backward(&[y - x.sin()])?;
        net.sgd_step(&grads, 0.02)?;
        if epoch % 1000 == 0 {
            let mse: f64 =
                xs.iter().map(|&x| (net.predict(&[x]).unwrap()[0] - x.sin()).powi(2)).sum::<f64>() / xs.len() as f64;
            println!("step {epoch:5}: mse {mse:.5}");
        }
    }
    Ok(())
}

// $ cargo run --release --example mlp
