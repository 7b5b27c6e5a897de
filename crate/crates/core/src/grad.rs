//! Ground-state cost and its gradient with respect to every rotation angle.
//!
//! The cost `1 - (1/n) Σ_i P(qubit i = 0)` is the expectation of the
//! diagonal observable `M = diag(popcount(k) / n)`, which lets the adjoint
//! sweep seed its backward state with a single elementwise product.
//!
//! [`gradient`] is the production path. [`parameter_shift_gradient`] and
//! [`finite_diff_gradient`] exist as independent checks.

use std::f64::consts::FRAC_PI_2;
use std::ops::Deref;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{check_shapes, run_in_place, CircuitSpec, ParamVector};
use crate::error::{Error, Result};
use crate::qsim::{apply_cnot, apply_rotation, ground_prob, pauli_expectation, Gate, Statevector};

/// Deviation of the squared norm from 1 that the cost tolerates.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Default step for [`finite_diff_gradient`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `∂L/∂θ_i` for every parameter slot, in loss per radian.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i} is {}", values[i])));
        }
        Ok(Self(values))
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_normalized(state: &Statevector) -> Result<()> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// `1 - (1/n) Σ_i P(qubit i = 0)` on a normalized state.
pub fn cost(psi_out: &Statevector) -> Result<f64> {
    check_normalized(psi_out)?;
    let n = psi_out.n_qubits();
    let mut ground = 0.0;
    for q in 0..n {
        ground += ground_prob(psi_out, q)?;
    }
    Ok(1.0 - ground / n as f64)
}

fn observable_weights(n_qubits: usize) -> Vec<f64> {
    let inv = 1.0 / n_qubits as f64;
    (0..1usize << n_qubits).map(|k| k.count_ones() as f64 * inv).collect()
}

fn cost_of(amps: &[Complex64], weights: &[f64]) -> f64 {
    amps.iter().zip(weights).map(|(a, w)| a.norm_sqr() * w).sum()
}

/// Cost of running the circuit at `theta` on `psi_in`.
pub fn evaluate_cost(spec: &CircuitSpec, theta: &[f64], psi_in: &Statevector) -> Result<f64> {
    check_shapes(spec, theta, psi_in)?;
    check_normalized(psi_in)?;
    let weights = observable_weights(spec.n_qubits());
    Ok(forward_cost(spec, theta, psi_in, &weights))
}

fn forward_cost(spec: &CircuitSpec, theta: &[f64], psi_in: &Statevector, weights: &[f64]) -> f64 {
    let mut amps = psi_in.amplitudes().to_vec();
    run_in_place(spec.gates(), theta, &mut amps);
    cost_of(&amps, weights)
}

/// Loss and exact gradient from one forward pass and one reverse sweep.
///
/// The sweep keeps the forward state `ψ` and the back-propagated
/// observable state `λ = V† M ψ_out`, both positioned just after the current
/// gate. For a rotation with generator `σ/2` the derivative is
/// `Im ⟨λ|σ|ψ⟩`; both states are then un-rotated past the gate.
pub fn cost_and_gradient(spec: &CircuitSpec, theta: &[f64], psi_in: &Statevector) -> Result<(f64, GradientVector)> {
    check_shapes(spec, theta, psi_in)?;
    check_normalized(psi_in)?;
    let weights = observable_weights(spec.n_qubits());

    let mut psi = psi_in.amplitudes().to_vec();
    run_in_place(spec.gates(), theta, &mut psi);
    let loss = cost_of(&psi, &weights);
    let mut lambda: Vec<Complex64> = psi.iter().zip(&weights).map(|(a, w)| a * w).collect();

    let mut grad = vec![0.0; spec.n_params()];
    for gate in spec.gates().iter().rev() {
        match *gate {
            Gate::Rotation { axis, qubit, slot } => {
                grad[slot] = pauli_expectation(&lambda, &psi, axis, qubit).im;
                apply_rotation(&mut psi, axis, qubit, -theta[slot]);
                apply_rotation(&mut lambda, axis, qubit, -theta[slot]);
            }
            Gate::Cnot { control, target } => {
                apply_cnot(&mut psi, control, target);
                apply_cnot(&mut lambda, control, target);
            }
        }
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {loss}")));
    }
    Ok((loss, GradientVector::new(grad)?))
}

/// Adjoint-mode gradient at `theta_hat`.
pub fn gradient(spec: &CircuitSpec, theta_hat: &ParamVector, psi_in: &Statevector) -> Result<GradientVector> {
    cost_and_gradient(spec, theta_hat, psi_in).map(|(_, g)| g)
}

/// `[L(θ + π/2 e_i) - L(θ - π/2 e_i)] / 2` per slot. Exact for half-angle
/// rotations; slots are evaluated in parallel.
pub fn parameter_shift_gradient(
    spec: &CircuitSpec,
    theta_hat: &ParamVector,
    psi_in: &Statevector,
) -> Result<GradientVector> {
    shifted_gradient(spec, theta_hat, psi_in, FRAC_PI_2, |plus, minus| 0.5 * (plus - minus))
}

/// Central differences with step `h`.
pub fn finite_diff_gradient(
    spec: &CircuitSpec,
    theta_hat: &ParamVector,
    psi_in: &Statevector,
    h: f64,
) -> Result<GradientVector> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be > 0, got {h}")));
    }
    shifted_gradient(spec, theta_hat, psi_in, h, |plus, minus| (plus - minus) / (2.0 * h))
}

fn shifted_gradient(
    spec: &CircuitSpec,
    theta: &[f64],
    psi_in: &Statevector,
    shift: f64,
    combine: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<GradientVector> {
    check_shapes(spec, theta, psi_in)?;
    check_normalized(psi_in)?;
    let weights = observable_weights(spec.n_qubits());
    let values = (0..theta.len())
        .into_par_iter()
        .map(|i| {
            let mut shifted = theta.to_vec();
            shifted[i] = theta[i] + shift;
            let plus = forward_cost(spec, &shifted, psi_in, &weights);
            shifted[i] = theta[i] - shift;
            let minus = forward_cost(spec, &shifted, psi_in, &weights);
            combine(plus, minus)
        })
        .collect();
    GradientVector::new(values)
}
