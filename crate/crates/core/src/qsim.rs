//! Exact statevector simulation over the gate set {Rx, Ry, Rz, CNOT}.
//!
//! Qubit 0 is the least-significant bit of the amplitude index, so a state
//! index `k` has qubit `q` set iff `k >> q & 1 == 1`. Rotations use the
//! half-angle convention `R_k(θ) = exp(-iθσ_k/2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[Complex64; 2]; 2];

/// Rotation axis of a single-qubit gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// The Pauli matrix for this axis.
    pub fn pauli(self) -> Mat2 {
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -I], [I, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// Hermitian generator `H = σ/2`, so that `R(θ) = exp(-iθH)`.
    pub fn generator(self) -> Mat2 {
        let p = self.pauli();
        [[p[0][0] * 0.5, p[0][1] * 0.5], [p[1][0] * 0.5, p[1][1] * 0.5]]
    }

    /// Closed form of `exp(-iθσ/2) = cos(θ/2) I - i sin(θ/2) σ`.
    pub fn rotation_matrix(self, theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        let p = self.pauli();
        let mis = Complex64::new(0.0, -s);
        [[c + mis * p[0][0], mis * p[0][1]], [mis * p[1][0], c + mis * p[1][1]]]
    }
}

/// A gate in a circuit. Rotations carry the index of the parameter slot that
/// supplies their angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    Rotation { axis: Axis, qubit: usize, slot: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn rx(qubit: usize, slot: usize) -> Self {
        Gate::Rotation { axis: Axis::X, qubit, slot }
    }

    pub fn ry(qubit: usize, slot: usize) -> Self {
        Gate::Rotation { axis: Axis::Y, qubit, slot }
    }

    pub fn rz(qubit: usize, slot: usize) -> Self {
        Gate::Rotation { axis: Axis::Z, qubit, slot }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn param_slot(&self) -> Option<usize> {
        match *self {
            Gate::Rotation { slot, .. } => Some(slot),
            Gate::Cnot { .. } => None,
        }
    }

    /// Checks qubit indices against a register size.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(Error::QubitOutOfRange { index: q, n_qubits })
            }
        };
        match *self {
            Gate::Rotation { qubit, .. } => check(qubit),
            Gate::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::SameControlTarget(control));
                }
                Ok(())
            }
        }
    }
}

/// Pure state of `n_qubits` qubits as a dense amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Self { n_qubits, amplitudes }
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector is
    /// not renormalized, which lets callers exercise linearity on
    /// unnormalized inputs.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::BadAmplitudeLength(len));
        }
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Tensor product `self ⊗ other`, where `other` occupies the low qubits.
    pub fn kron(&self, other: &Statevector) -> Statevector {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for hi in &self.amplitudes {
            for lo in &other.amplitudes {
                amplitudes.push(hi * lo);
            }
        }
        Statevector { n_qubits: self.n_qubits + other.n_qubits, amplitudes }
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit < self.n_qubits {
            Ok(())
        } else {
            Err(Error::QubitOutOfRange { index: qubit, n_qubits: self.n_qubits })
        }
    }

    /// Applies an arbitrary 2x2 matrix to one qubit in place.
    pub fn apply_single(&mut self, qubit: usize, m: &Mat2) -> Result<()> {
        self.check_qubit(qubit)?;
        apply_mat2(&mut self.amplitudes, qubit, m);
        Ok(())
    }

    /// Applies `gate` in place. `angle` must be present exactly for rotations.
    pub fn apply(&mut self, gate: &Gate, angle: Option<f64>) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match (*gate, angle) {
            (Gate::Rotation { axis, qubit, .. }, Some(theta)) => {
                apply_rotation(&mut self.amplitudes, axis, qubit, theta);
                Ok(())
            }
            (Gate::Rotation { .. }, None) => Err(Error::MissingAngle),
            (Gate::Cnot { control, target }, None) => {
                apply_cnot(&mut self.amplitudes, control, target);
                Ok(())
            }
            (Gate::Cnot { .. }, Some(_)) => Err(Error::UnexpectedAngle),
        }
    }
}

/// Returns `U_gate|state⟩`.
pub fn apply_gate(state: &Statevector, gate: &Gate, angle: Option<f64>) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply(gate, angle)?;
    Ok(out)
}

/// Probability that measuring `qubit` yields 0.
pub fn ground_prob(state: &Statevector, qubit: usize) -> Result<f64> {
    state.check_qubit(qubit)?;
    let mask = 1usize << qubit;
    Ok(state.amplitudes.iter().enumerate().filter(|(k, _)| k & mask == 0).map(|(_, a)| a.norm_sqr()).sum())
}

/// Operator 2-norm of `U(θ+Δθ) - [U(θ) - iΔθ H U(θ)]` for a single rotation,
/// i.e. the error of the first-order expansion of the gate in its angle.
pub fn linearization_residual(axis: Axis, theta: f64, dtheta: f64) -> f64 {
    let exact = axis.rotation_matrix(theta + dtheta);
    let u = axis.rotation_matrix(theta);
    let h = axis.generator();
    let hu = mat2_mul(&h, &u);
    let step = Complex64::new(0.0, -dtheta);
    let mut diff = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            diff[r][c] = exact[r][c] - (u[r][c] + step * hu[r][c]);
        }
    }
    mat2_spectral_norm(&diff)
}

pub(crate) fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// Largest singular value of a 2x2 complex matrix, from the eigenvalues of
/// the Hermitian product `A†A`.
pub fn mat2_spectral_norm(a: &Mat2) -> f64 {
    // A†A = [[p, q], [q*, s]] with p, s real.
    let p = a[0][0].norm_sqr() + a[1][0].norm_sqr();
    let s = a[0][1].norm_sqr() + a[1][1].norm_sqr();
    let q = a[0][0].conj() * a[0][1] + a[1][0].conj() * a[1][1];
    let half_tr = 0.5 * (p + s);
    let disc = (0.25 * (p - s) * (p - s) + q.norm_sqr()).sqrt();
    (half_tr + disc).max(0.0).sqrt()
}

// Kernels. Pairs (i, i | bit) with bit i clear are visited in strided blocks.

#[inline]
fn for_each_pair(amps: &mut [Complex64], qubit: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
    let stride = 1usize << qubit;
    for block in amps.chunks_exact_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            f(a0, a1);
        }
    }
}

pub(crate) fn apply_mat2(amps: &mut [Complex64], qubit: usize, m: &Mat2) {
    let [[m00, m01], [m10, m11]] = *m;
    for_each_pair(amps, qubit, |a0, a1| {
        let (x, y) = (*a0, *a1);
        *a0 = m00 * x + m01 * y;
        *a1 = m10 * x + m11 * y;
    });
}

pub(crate) fn apply_rotation(amps: &mut [Complex64], axis: Axis, qubit: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    match axis {
        Axis::X => for_each_pair(amps, qubit, |a0, a1| {
            // [[c, -is], [-is, c]]
            let (x, y) = (*a0, *a1);
            *a0 = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
            *a1 = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
        }),
        Axis::Y => for_each_pair(amps, qubit, |a0, a1| {
            // [[c, -s], [s, c]]
            let (x, y) = (*a0, *a1);
            *a0 = x * c - y * s;
            *a1 = x * s + y * c;
        }),
        Axis::Z => {
            let phase0 = Complex64::new(c, -s);
            let phase1 = Complex64::new(c, s);
            for_each_pair(amps, qubit, |a0, a1| {
                *a0 *= phase0;
                *a1 *= phase1;
            })
        }
    }
}

pub(crate) fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    for k in 0..amps.len() {
        if k & cmask != 0 && k & tmask == 0 {
            amps.swap(k, k | tmask);
        }
    }
}

/// `⟨bra|σ_axis on qubit|ket⟩`.
pub(crate) fn pauli_expectation(bra: &[Complex64], ket: &[Complex64], axis: Axis, qubit: usize) -> Complex64 {
    let stride = 1usize << qubit;
    let mut acc = ZERO;
    for (bb, kb) in bra.chunks_exact(stride << 1).zip(ket.chunks_exact(stride << 1)) {
        let (b0, b1) = bb.split_at(stride);
        let (k0, k1) = kb.split_at(stride);
        for i in 0..stride {
            let (l0, l1) = (b0[i].conj(), b1[i].conj());
            let (x, y) = (k0[i], k1[i]);
            acc += match axis {
                Axis::X => l0 * y + l1 * x,
                Axis::Y => l0 * (-I * y) + l1 * (I * x),
                Axis::Z => l0 * x - l1 * y,
            };
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_state(n: usize, rng: &mut impl Rng, normalize: bool) -> Statevector {
        let mut amps: Vec<Complex64> =
            (0..1 << n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        if normalize {
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|a| *a /= norm);
        }
        Statevector::from_amplitudes(amps).unwrap()
    }

    fn random_gate(n: usize, rng: &mut impl Rng) -> (Gate, Option<f64>) {
        if n >= 2 && rng.random_bool(0.25) {
            let control = rng.random_range(0..n);
            let mut target = rng.random_range(0..n - 1);
            if target >= control {
                target += 1;
            }
            (Gate::cnot(control, target), None)
        } else {
            let axis = Axis::ALL[rng.random_range(0..3)];
            let gate = Gate::Rotation { axis, qubit: rng.random_range(0..n), slot: 0 };
            (gate, Some(rng.random_range(-2.0 * PI..2.0 * PI)))
        }
    }

    fn assert_states_close(a: &Statevector, b: &Statevector, tol: f64) {
        assert_eq!(a.dim(), b.dim());
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(3, &mut rng, true);
        let out = apply_gate(&psi, &Gate::rx(1, 0), Some(0.0)).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn rx_pi_on_zero() {
        let out = apply_gate(&Statevector::zero_state(1), &Gate::rx(0, 0), Some(PI)).unwrap();
        let a = out.amplitudes();
        assert_abs_diff_eq!(a[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[0].im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        // qubit0 = 1, qubit1 = 0 -> index 1
        let psi = Statevector::basis_state(2, 0b01).unwrap();
        let out = apply_gate(&psi, &Gate::cnot(0, 1), None).unwrap();
        assert_eq!(out, Statevector::basis_state(2, 0b11).unwrap());
        // control clear: no flip
        let psi = Statevector::basis_state(2, 0b10).unwrap();
        let out = apply_gate(&psi, &Gate::cnot(0, 1), None).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn kernels_match_matrix_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for axis in Axis::ALL {
            let psi = random_state(3, &mut rng, true);
            let theta = rng.random_range(-PI..PI);
            for q in 0..3 {
                let fast = apply_gate(&psi, &Gate::Rotation { axis, qubit: q, slot: 0 }, Some(theta)).unwrap();
                let mut slow = psi.clone();
                slow.apply_single(q, &axis.rotation_matrix(theta)).unwrap();
                assert_states_close(&fast, &slow, 1e-14);
            }
        }
    }

    #[test]
    fn gate_errors() {
        let psi = Statevector::zero_state(2);
        assert!(matches!(
            apply_gate(&psi, &Gate::rx(2, 0), Some(0.1)),
            Err(Error::QubitOutOfRange { index: 2, n_qubits: 2 })
        ));
        assert!(matches!(apply_gate(&psi, &Gate::rx(0, 0), None), Err(Error::MissingAngle)));
        assert!(matches!(apply_gate(&psi, &Gate::cnot(0, 1), Some(1.0)), Err(Error::UnexpectedAngle)));
        assert!(matches!(apply_gate(&psi, &Gate::cnot(1, 1), None), Err(Error::SameControlTarget(1))));
        assert!(matches!(apply_gate(&psi, &Gate::cnot(0, 5), None), Err(Error::QubitOutOfRange { .. })));
        assert!(matches!(Statevector::from_amplitudes(vec![ONE; 3]), Err(Error::BadAmplitudeLength(3))));
    }

    #[test]
    fn ground_prob_examples() {
        for q in 0..4 {
            assert_eq!(ground_prob(&Statevector::zero_state(4), q).unwrap(), 1.0);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Statevector::from_amplitudes(vec![Complex64::new(h, 0.0); 2]).unwrap();
        assert_abs_diff_eq!(ground_prob(&plus, 0).unwrap(), 0.5, epsilon = 1e-15);
        let bell =
            Statevector::from_amplitudes(vec![Complex64::new(h, 0.0), ZERO, ZERO, Complex64::new(h, 0.0)]).unwrap();
        assert_abs_diff_eq!(ground_prob(&bell, 0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ground_prob(&bell, 1).unwrap(), 0.5, epsilon = 1e-15);
        assert!(ground_prob(&bell, 2).is_err());
    }

    #[test]
    fn norm_preserved_over_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n = rng.random_range(1..=6);
            let psi = random_state(n, &mut rng, true);
            let (gate, angle) = random_gate(n, &mut rng);
            let out = apply_gate(&psi, &gate, angle).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_vanishes_at_zero_step() {
        for axis in Axis::ALL {
            assert!(linearization_residual(axis, 1.3, 0.0) < 1e-15);
        }
    }

    #[test]
    fn residual_scales_quadratically() {
        let r1 = linearization_residual(Axis::Z, 0.7, 1e-3);
        let r2 = linearization_residual(Axis::Z, 0.7, 5e-4);
        assert!((r1 / r2 / 4.0 - 1.0).abs() < 0.05, "ratio {}", r1 / r2);
    }

    #[test]
    fn residual_matches_direct_matrix_arithmetic() {
        // exp(-iΔX/2) - (I - iΔX/2) with explicit cos/sin entries.
        let d: f64 = 1e-2;
        let (s, c) = (d / 2.0).sin_cos();
        let diag = Complex64::new(c - 1.0, 0.0);
        let off = Complex64::new(0.0, -s + d / 2.0);
        // Matrix [[diag, off], [off, diag]] has singular values |diag ± off|.
        let expected = (diag + off).norm().max((diag - off).norm());
        let got = linearization_residual(Axis::X, 0.0, d);
        assert_abs_diff_eq!(got, expected, epsilon = 1e-16);
    }

    #[test]
    fn residual_over_step_squared_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let axis = Axis::ALL[rng.random_range(0..3)];
            let theta = rng.random_range(0.0..2.0 * PI);
            let ratios: Vec<f64> =
                [1e-2, 5e-3, 2.5e-3].iter().map(|&d| linearization_residual(axis, theta, d) / (d * d)).collect();
            for r in &ratios {
                assert!((r / ratios[0] - 1.0).abs() < 0.1);
            }
        }
    }

    #[test]
    fn spectral_norm_of_unitary_is_one() {
        let u = Axis::Y.rotation_matrix(0.37);
        assert_abs_diff_eq!(mat2_spectral_norm(&u), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_expectation_matches_explicit_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bra = random_state(3, &mut rng, false);
        let ket = random_state(3, &mut rng, false);
        for axis in Axis::ALL {
            for q in 0..3 {
                let mut applied = ket.clone();
                applied.apply_single(q, &axis.pauli()).unwrap();
                let direct = bra.inner(&applied);
                let fast = pauli_expectation(bra.amplitudes(), ket.amplitudes(), axis, q);
                assert!((direct - fast).norm() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn rotation_then_inverse_is_identity(seed in any::<u64>(), n in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_state(n, &mut rng, true);
            let axis = Axis::ALL[rng.random_range(0..3)];
            let q = rng.random_range(0..n);
            let theta = rng.random_range(-10.0..10.0);
            let gate = Gate::Rotation { axis, qubit: q, slot: 0 };
            let back = apply_gate(&apply_gate(&psi, &gate, Some(theta)).unwrap(), &gate, Some(-theta)).unwrap();
            for (x, y) in back.amplitudes().iter().zip(psi.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-10);
            }
        }

        #[test]
        fn gates_act_linearly(seed in any::<u64>(), n in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p1 = random_state(n, &mut rng, false);
            let p2 = random_state(n, &mut rng, false);
            let a = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let b = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let (gate, angle) = random_gate(n, &mut rng);
            let combo = Statevector::from_amplitudes(
                p1.amplitudes().iter().zip(p2.amplitudes()).map(|(x, y)| a * x + b * y).collect(),
            ).unwrap();
            let lhs = apply_gate(&combo, &gate, angle).unwrap();
            let u1 = apply_gate(&p1, &gate, angle).unwrap();
            let u2 = apply_gate(&p2, &gate, angle).unwrap();
            for ((l, x), y) in lhs.amplitudes().iter().zip(u1.amplitudes()).zip(u2.amplitudes()) {
                prop_assert!((l - (a * x + b * y)).norm() < 1e-10);
            }
        }
    }
}
