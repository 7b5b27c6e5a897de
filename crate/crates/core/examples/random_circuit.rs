//! Builds a seeded layered random circuit and round-trips it through JSON.
//!
//! Pass a path to write the circuit there.

use npid_lab::circuit::{
    build_random_circuit, depth_schedule, random_input_state, run_circuit, CircuitSpec, ParamVector,
};
use npid_lab::grad::cost;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> npid_lab::Result<()> {
    for n in 7..=12 {
        let depth = depth_schedule(n)?;
        let spec = build_random_circuit(n, depth, 0)?;
        println!("n = {n:2}: depth {depth:3}, {:5} parameters, {:6} gates", spec.n_params(), spec.gates().len());
    }

    let spec = build_random_circuit(3, 2, 42)?;
    let json = spec.to_json()?;
    assert_eq!(CircuitSpec::from_json(&json)?, spec);
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(&path, &json)?,
        None => println!("\n{json}"),
    }

    let theta = ParamVector::uniform(spec.n_params(), &mut ChaCha8Rng::seed_from_u64(1));
    let out = run_circuit(&spec, &theta, &random_input_state(3, 7)?)?;
    println!("cost at random parameters: {:.6}", cost(&out)?);
    Ok(())
}

// $ cargo run --release --example random_circuit -- circuit.json
