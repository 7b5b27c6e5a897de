//! Random input states, layered random circuits, parameter noise and circuit
//! execution.
//!
//! A layer applies one rotation (Rx, Ry or Rz, chosen uniformly) to every
//! qubit, then splits the qubits into `floor(n/2)` random disjoint pairs. Each
//! pair gets a CNOT with random orientation followed by Rx on the control and
//! Rz on the target. With odd `n` one qubit idles during the pairing stage.
//!
//! # JSON format
//!
//! [`CircuitSpec`] serializes as
//!
//! ```json
//! {
//!   "n_qubits": 2,
//!   "n_params": 4,
//!   "layers": [{
//!     "opening_rotations": [{"axis": "y", "qubit": 0, "slot": 0},
//!                           {"axis": "x", "qubit": 1, "slot": 1}],
//!     "pairings": [{"control": 1, "target": 0, "rx_slot": 2, "rz_slot": 3}]
//!   }]
//! }
//! ```
//!
//! and is validated again on deserialization.

use std::f64::consts::TAU;
use std::ops::Deref;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{apply_cnot, apply_rotation, Axis, Gate, Statevector};

/// A rotation gate bound to a parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotation {
    pub axis: Axis,
    pub qubit: usize,
    pub slot: usize,
}

/// One entangled pair: `CNOT(control, target)`, then `Rx(control)` and
/// `Rz(target)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub control: usize,
    pub target: usize,
    pub rx_slot: usize,
    pub rz_slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub opening_rotations: Vec<Rotation>,
    pub pairings: Vec<Pairing>,
}

impl LayerSpec {
    fn push_gates(&self, out: &mut Vec<Gate>) {
        for r in &self.opening_rotations {
            out.push(Gate::Rotation { axis: r.axis, qubit: r.qubit, slot: r.slot });
        }
        for p in &self.pairings {
            out.push(Gate::cnot(p.control, p.target));
            out.push(Gate::rx(p.control, p.rx_slot));
            out.push(Gate::rz(p.target, p.rz_slot));
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let mut seen = vec![false; n_qubits];
        for r in &self.opening_rotations {
            Gate::rx(r.qubit, 0).validate(n_qubits)?;
            if std::mem::replace(&mut seen[r.qubit], true) {
                return Err(Error::InvalidCircuit(format!("qubit {} rotated twice in opening stage", r.qubit)));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidCircuit("opening rotations must cover every qubit".into()));
        }
        if self.pairings.len() != n_qubits / 2 {
            return Err(Error::InvalidCircuit(format!(
                "expected {} pairings, found {}",
                n_qubits / 2,
                self.pairings.len()
            )));
        }
        let mut paired = vec![false; n_qubits];
        for p in &self.pairings {
            Gate::cnot(p.control, p.target).validate(n_qubits)?;
            for q in [p.control, p.target] {
                if std::mem::replace(&mut paired[q], true) {
                    return Err(Error::InvalidCircuit(format!("qubit {q} appears in two pairings")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct CircuitSpecRepr {
    n_qubits: usize,
    n_params: usize,
    layers: Vec<LayerSpec>,
}

/// A fixed layered circuit whose rotation angles come from a [`ParamVector`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitSpecRepr")]
pub struct CircuitSpec {
    n_qubits: usize,
    n_params: usize,
    layers: Vec<LayerSpec>,
    #[serde(skip)]
    gates: Vec<Gate>,
}

impl TryFrom<CircuitSpecRepr> for CircuitSpec {
    type Error = Error;

    fn try_from(repr: CircuitSpecRepr) -> Result<Self> {
        let spec = CircuitSpec::new(repr.n_qubits, repr.layers)?;
        if spec.n_params != repr.n_params {
            return Err(Error::InvalidCircuit(format!(
                "declared n_params {} but layers use {}",
                repr.n_params, spec.n_params
            )));
        }
        Ok(spec)
    }
}

impl CircuitSpec {
    /// Validates the layers and derives `n_params`. Every slot in
    /// `0..n_params` must be used exactly once.
    pub fn new(n_qubits: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidCircuit("circuit needs at least one qubit".into()));
        }
        let mut gates = Vec::new();
        for layer in &layers {
            layer.validate(n_qubits)?;
            layer.push_gates(&mut gates);
        }
        let slots: Vec<usize> = gates.iter().filter_map(Gate::param_slot).collect();
        let n_params = slots.len();
        let mut used = vec![false; n_params];
        for s in slots {
            if s >= n_params || std::mem::replace(&mut used[s], true) {
                return Err(Error::InvalidCircuit(format!(
                    "parameter slot {s} is duplicated or outside 0..{n_params}"
                )));
            }
        }
        Ok(Self { n_qubits, n_params, layers, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// All gates in application order.
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Trainable rotation angles in radians. Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i} is {}", values[i])));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Independent uniform draws on `[0, 2π)`.
    pub fn uniform<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.random_range(0.0..TAU)).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

/// Parameter perturbation `θ̂ = θ + δ·α` with `α ~ N(0, 1)` per entry,
/// sampled by a [`NoiseSource`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    rate: f64,
}

impl NoiseModel {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise rate must be finite and >= 0, got {rate}")));
        }
        Ok(Self { rate })
    }

    pub fn noiseless() -> Self {
        Self { rate: 0.0 }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Draws one perturbation `Δ = δ·α`.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        (0..len).map(|_| self.rate * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// When the perturbation `Δ` is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseTiming {
    /// One `Δ` per run, reused by every evaluation.
    #[default]
    Frozen,
    /// A fresh `Δ` for every cost/gradient evaluation.
    PerEvaluation,
}

/// Supplies the offsets `Δ` seen by a training run.
#[derive(Debug, Clone)]
pub struct NoiseSource<R> {
    model: NoiseModel,
    timing: NoiseTiming,
    rng: R,
    frozen: Option<Vec<f64>>,
}

impl<R: Rng> NoiseSource<R> {
    pub fn new(model: NoiseModel, timing: NoiseTiming, rng: R) -> Self {
        Self { model, timing, rng, frozen: None }
    }

    pub fn model(&self) -> NoiseModel {
        self.model
    }

    pub fn timing(&self) -> NoiseTiming {
        self.timing
    }

    /// Offset for the next evaluation of a `len`-parameter vector.
    pub fn draw(&mut self, len: usize) -> Vec<f64> {
        match self.timing {
            NoiseTiming::PerEvaluation => self.model.sample(len, &mut self.rng),
            NoiseTiming::Frozen => {
                if self.frozen.as_ref().is_none_or(|d| d.len() != len) {
                    self.frozen = Some(self.model.sample(len, &mut self.rng));
                }
                self.frozen.clone().unwrap_or_default()
            }
        }
    }
}

/// Returns `θ + Δ` for a freshly drawn `Δ`.
pub fn perturb_params<R: Rng + ?Sized>(theta: &ParamVector, noise: &NoiseModel, rng: &mut R) -> ParamVector {
    let delta = noise.sample(theta.len(), rng);
    add_offset(theta, &delta)
}

pub(crate) fn add_offset(theta: &ParamVector, delta: &[f64]) -> ParamVector {
    ParamVector(theta.iter().zip(delta).map(|(t, d)| t + d).collect())
}

/// `⊗_q Rz(c_q) Ry(b_q) Rx(a_q) |0⟩` for per-qubit angles `[a_q, b_q, c_q]`.
pub fn product_state_from_angles(angles: &[[f64; 3]]) -> Result<Statevector> {
    if angles.is_empty() {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let mut state = Statevector::zero_state(angles.len());
    let amps = state.amplitudes_mut();
    for (q, [ax, ay, az]) in angles.iter().enumerate() {
        apply_rotation(amps, Axis::X, q, *ax);
        apply_rotation(amps, Axis::Y, q, *ay);
        apply_rotation(amps, Axis::Z, q, *az);
    }
    Ok(state)
}

/// Random product input state with all `3n` angles uniform on `[0, 2π)`.
pub fn random_input_state(n_qubits: usize, seed: u64) -> Result<Statevector> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("n_qubits must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<[f64; 3]> = (0..n_qubits)
        .map(|_| {
            let ax = rng.random_range(0.0..TAU);
            let ay = rng.random_range(0.0..TAU);
            let az = rng.random_range(0.0..TAU);
            [ax, ay, az]
        })
        .collect();
    product_state_from_angles(&angles)
}

/// Logarithm used in the `n² log n` depth schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

/// `floor(n² ln n)`.
pub fn depth_schedule(n_qubits: usize) -> Result<usize> {
    depth_schedule_with_base(n_qubits, LogBase::Natural)
}

pub fn depth_schedule_with_base(n_qubits: usize, base: LogBase) -> Result<usize> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!("depth schedule needs n >= 2, got {n_qubits}")));
    }
    let n = n_qubits as f64;
    let log = match base {
        LogBase::Natural => n.ln(),
        LogBase::Two => n.log2(),
    };
    Ok((n * n * log).floor() as usize)
}

/// Builds a `depth`-layer random circuit, deterministic in `(n, depth, seed)`.
/// Slots are numbered in gate-application order.
pub fn build_random_circuit(n_qubits: usize, depth: usize, seed: u64) -> Result<CircuitSpec> {
    if n_qubits < 2 || depth == 0 {
        return Err(Error::InvalidArgument(format!(
            "random circuits need n >= 2 and depth >= 1 (got n={n_qubits}, depth={depth})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slot = 0usize;
    let mut next_slot = || {
        slot += 1;
        slot - 1
    };
    let mut order: Vec<usize> = (0..n_qubits).collect();
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let opening_rotations = (0..n_qubits)
            .map(|qubit| Rotation { axis: Axis::ALL[rng.random_range(0..3)], qubit, slot: next_slot() })
            .collect();
        order.shuffle(&mut rng);
        let pairings = order
            .chunks_exact(2)
            .map(|pair| {
                let (control, target) = if rng.random_bool(0.5) { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
                Pairing { control, target, rx_slot: next_slot(), rz_slot: next_slot() }
            })
            .collect();
        layers.push(LayerSpec { opening_rotations, pairings });
    }
    CircuitSpec::new(n_qubits, layers)
}

pub(crate) fn check_shapes(spec: &CircuitSpec, theta: &[f64], psi_in: &Statevector) -> Result<()> {
    if theta.len() != spec.n_params() {
        return Err(Error::DimensionMismatch { expected: spec.n_params(), actual: theta.len() });
    }
    if psi_in.n_qubits() != spec.n_qubits() {
        return Err(Error::DimensionMismatch { expected: spec.n_qubits(), actual: psi_in.n_qubits() });
    }
    Ok(())
}

/// Applies the gate list to `amps` in place. Shapes must already be checked.
pub(crate) fn run_in_place(gates: &[Gate], theta: &[f64], amps: &mut [num_complex::Complex64]) {
    for gate in gates {
        match *gate {
            Gate::Rotation { axis, qubit, slot } => apply_rotation(amps, axis, qubit, theta[slot]),
            Gate::Cnot { control, target } => apply_cnot(amps, control, target),
        }
    }
}

/// `U(θ̂)|ψ_in⟩`.
pub fn run_circuit(spec: &CircuitSpec, theta_hat: &ParamVector, psi_in: &Statevector) -> Result<Statevector> {
    check_shapes(spec, theta_hat, psi_in)?;
    let mut out = psi_in.clone();
    run_in_place(spec.gates(), theta_hat, out.amplitudes_mut());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_angles_give_ground_state() {
        let psi = product_state_from_angles(&[[0.0; 3]; 4]).unwrap();
        assert_eq!(psi, Statevector::zero_state(4));
    }

    #[test]
    fn input_state_is_normalized_and_deterministic() {
        for n in 1..=8 {
            let a = random_input_state(n, 99 + n as u64).unwrap();
            let b = random_input_state(n, 99 + n as u64).unwrap();
            assert_abs_diff_eq!(a.norm_sqr(), 1.0, epsilon = 1e-10);
            assert_eq!(a, b);
        }
        assert_ne!(random_input_state(3, 1).unwrap(), random_input_state(3, 2).unwrap());
        assert!(random_input_state(0, 1).is_err());
    }

    #[test]
    fn depth_examples() {
        assert_eq!(depth_schedule(7).unwrap(), 95);
        assert_eq!(depth_schedule(12).unwrap(), 357);
        assert_eq!(depth_schedule(2).unwrap(), 2);
        assert_eq!(depth_schedule_with_base(8, LogBase::Two).unwrap(), 192);
        assert!(depth_schedule(1).is_err());
        assert!(depth_schedule(0).is_err());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(build_random_circuit(7, 95, 0).unwrap().n_params(), 1235);
        assert_eq!(build_random_circuit(12, 357, 0).unwrap().n_params(), 8568);
        assert!(build_random_circuit(1, 3, 0).is_err());
        assert!(build_random_circuit(3, 0, 0).is_err());
    }

    #[test]
    fn circuits_are_deterministic_in_seed() {
        let a = build_random_circuit(5, 4, 11).unwrap();
        assert_eq!(a, build_random_circuit(5, 4, 11).unwrap());
        assert_ne!(a, build_random_circuit(5, 4, 12).unwrap());
    }

    #[test]
    fn slots_follow_application_order() {
        let spec = build_random_circuit(5, 3, 4).unwrap();
        let slots: Vec<usize> = spec.gates().iter().filter_map(Gate::param_slot).collect();
        assert_eq!(slots, (0..spec.n_params()).collect::<Vec<_>>());
    }

    #[test]
    fn pairings_valid_over_many_layers() {
        let mut odd_idle = vec![0usize; 7];
        for seed in 0..100 {
            for n in [2usize, 3, 6, 7] {
                let spec = build_random_circuit(n, 10, seed).unwrap();
                for layer in spec.layers() {
                    assert_eq!(layer.pairings.len(), n / 2);
                    let mut used: Vec<usize> = layer.pairings.iter().flat_map(|p| [p.control, p.target]).collect();
                    used.sort_unstable();
                    used.dedup();
                    assert_eq!(used.len(), 2 * (n / 2));
                    if n == 7 {
                        let idle = (0..7).find(|q| !used.contains(q)).unwrap();
                        odd_idle[idle] += 1;
                    }
                }
            }
        }
        // 1000 layers at n=7: every qubit should idle sometimes.
        assert!(odd_idle.iter().all(|&c| c > 50), "{odd_idle:?}");
    }

    #[test]
    fn invalid_layers_are_rejected() {
        let ok = LayerSpec {
            opening_rotations: vec![
                Rotation { axis: Axis::X, qubit: 0, slot: 0 },
                Rotation { axis: Axis::Y, qubit: 1, slot: 1 },
            ],
            pairings: vec![Pairing { control: 0, target: 1, rx_slot: 2, rz_slot: 3 }],
        };
        assert!(CircuitSpec::new(2, vec![ok.clone()]).is_ok());

        let mut dup_slot = ok.clone();
        dup_slot.pairings[0].rz_slot = 0;
        assert!(CircuitSpec::new(2, vec![dup_slot]).is_err());

        let mut missing_qubit = ok.clone();
        missing_qubit.opening_rotations[1].qubit = 0;
        assert!(CircuitSpec::new(2, vec![missing_qubit]).is_err());

        let mut same = ok.clone();
        same.pairings[0].target = 0;
        assert!(CircuitSpec::new(2, vec![same]).is_err());

        let mut no_pairs = ok;
        no_pairs.pairings.clear();
        assert!(CircuitSpec::new(2, vec![no_pairs]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let spec = build_random_circuit(4, 2, 8).unwrap();
        let json = spec.to_json().unwrap();
        let back = CircuitSpec::from_json(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.gates(), spec.gates());

        let tampered = json.replacen(&format!("\"n_params\": {}", spec.n_params()), "\"n_params\": 3", 1);
        assert!(CircuitSpec::from_json(&tampered).is_err());
    }

    #[test]
    fn zero_noise_is_exact_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = ParamVector::uniform(50, &mut rng);
        let out = perturb_params(&theta, &NoiseModel::noiseless(), &mut rng);
        assert_eq!(out, theta);
    }

    #[test]
    fn noise_scale_matches_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let theta = ParamVector::zeros(1235);
        let noise = NoiseModel::new(0.01).unwrap();
        for _ in 0..100 {
            let hat = perturb_params(&theta, &noise, &mut rng);
            let rms = (hat.iter().map(|v| v * v).sum::<f64>() / 1235.0).sqrt();
            assert!((rms / 0.01 - 1.0).abs() < 0.2, "rms {rms}");
        }
    }

    #[test]
    fn noise_is_resampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta = ParamVector::zeros(10);
        let noise = NoiseModel::new(0.05).unwrap();
        assert_ne!(perturb_params(&theta, &noise, &mut rng), perturb_params(&theta, &noise, &mut rng));
        assert!(NoiseModel::new(-0.1).is_err());
        assert!(NoiseModel::new(f64::NAN).is_err());
    }

    #[test]
    fn frozen_source_repeats_and_per_evaluation_resamples() {
        let noise = NoiseModel::new(0.1).unwrap();
        let mut frozen = NoiseSource::new(noise, NoiseTiming::Frozen, ChaCha8Rng::seed_from_u64(1));
        let first = frozen.draw(6);
        assert_eq!(first, frozen.draw(6));
        let mut fresh = NoiseSource::new(noise, NoiseTiming::PerEvaluation, ChaCha8Rng::seed_from_u64(1));
        assert_eq!(first, fresh.draw(6));
        assert_ne!(first, fresh.draw(6));
    }

    #[test]
    fn param_vector_rejects_non_finite() {
        assert!(ParamVector::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(serde_json::from_str::<ParamVector>("[1.0, 2.0]").is_ok());
    }

    #[test]
    fn zero_angles_leave_ground_state_fixed() {
        let spec = build_random_circuit(5, 6, 3).unwrap();
        let out = run_circuit(&spec, &ParamVector::zeros(spec.n_params()), &Statevector::zero_state(5)).unwrap();
        assert_eq!(out, Statevector::zero_state(5));
    }

    #[test]
    fn run_circuit_preserves_norm_and_checks_shapes() {
        let spec = build_random_circuit(4, 5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let theta = ParamVector::uniform(spec.n_params(), &mut rng);
        let psi = random_input_state(4, 2).unwrap();
        let out = run_circuit(&spec, &theta, &psi).unwrap();
        assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-10);

        assert!(run_circuit(&spec, &ParamVector::zeros(3), &psi).is_err());
        assert!(run_circuit(&spec, &theta, &Statevector::zero_state(3)).is_err());
    }
}
