//! Adjoint gradients against parameter-shift and finite differences, and
//! their cost on a full-size circuit.

use std::time::Instant;

use npid_lab::circuit::{build_random_circuit, depth_schedule, random_input_state, ParamVector};
use npid_lab::grad::{cost_and_gradient, finite_diff_gradient, parameter_shift_gradient, DEFAULT_FD_STEP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn main() -> npid_lab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in [5, 7] {
        let spec = build_random_circuit(n, depth_schedule(n)?, 1)?;
        let psi = random_input_state(n, 2)?;
        let theta = ParamVector::uniform(spec.n_params(), &mut rng);

        let t = Instant::now();
        let (loss, adjoint) = cost_and_gradient(&spec, &theta, &psi)?;
        let t_adjoint = t.elapsed();
        let t = Instant::now();
        let shift = parameter_shift_gradient(&spec, &theta, &psi)?;
        let t_shift = t.elapsed();
        let fd = finite_diff_gradient(&spec, &theta, &psi, DEFAULT_FD_STEP)?;

        println!("n = {n}, {} parameters, loss {loss:.6}, |grad| {:.3e}", spec.n_params(), adjoint.norm());
        println!("  adjoint {t_adjoint:>10.2?}   parameter shift {t_shift:>10.2?}");
        println!(
            "  max |adjoint - shift| {:.1e}   max |adjoint - fd| {:.1e}",
            max_diff(&adjoint, &shift),
            max_diff(&adjoint, &fd)
        );
    }
    Ok(())
}

// $ cargo run --release --example gradients
