//! Gate application, per-qubit ground probabilities and the first-order
//! error of a rotation.

use npid_lab::qsim::{apply_gate, ground_prob, linearization_residual, Axis, Gate, Statevector};

fn main() -> npid_lab::Result<()> {
    // Ry(π/2) on qubit 0, then CNOT(0 -> 1): a Bell pair.
    let psi = Statevector::zero_state(2);
    let psi = apply_gate(&psi, &Gate::ry(0, 0), Some(std::f64::consts::FRAC_PI_2))?;
    let psi = apply_gate(&psi, &Gate::cnot(0, 1), None)?;
    for (k, a) in psi.amplitudes().iter().enumerate() {
        println!("|{k:02b}>  {:+.4} {:+.4}i", a.re, a.im);
    }
    println!("P(q0 = 0) = {:.4}, P(q1 = 0) = {:.4}", ground_prob(&psi, 0)?, ground_prob(&psi, 1)?);

    println!("\n||R(θ+Δ) - (1 - iΔH)R(θ)|| / Δ² for Rx at θ = 1.3:");
    for d in [1e-1, 1e-2, 1e-3] {
        println!("  Δ = {d:.0e}: {:.6}", linearization_residual(Axis::X, 1.3, d) / (d * d));
    }
    Ok(())
}

// $ cargo run --release --example statevector
