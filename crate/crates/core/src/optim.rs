//! Training strategies for the random-circuit problem.
//!
//! * **NPID**: a small network maps `(e, P_e, I_e, D_e)` to positive PID gains;
//!   the PID output scales the circuit gradient step.
//! * **NEQP** (S and L): a network emits the circuit parameters from a fixed
//!   random input vector and is trained through the circuit loss.
//! * **QV**: plain gradient descent on the circuit parameters.
//!
//! Every cost/gradient evaluation sees perturbed parameters `θ + Δ`,
//! `Δ = δ·α`, with `Δ` supplied by a [`NoiseSource`]. Under the default
//! [`NoiseTiming::Frozen`] one `Δ` is drawn per run, which is the same as
//! perturbing the initial parameters once and then updating `θ̂` directly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    add_offset, build_random_circuit, depth_schedule_with_base, random_input_state, CircuitSpec, LogBase, NoiseModel,
    NoiseSource, NoiseTiming, ParamVector,
};
use crate::error::{Error, Result};
use crate::grad::cost_and_gradient;
use crate::neural::{mlp_new, Architecture, Mlp};
use crate::qsim::Statevector;
use crate::seed::{derive_seed, stream_rng};

/// Which training strategy a run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelTag {
    #[serde(rename = "npid")]
    Npid,
    #[serde(rename = "neqp-s")]
    NeqpS,
    #[serde(rename = "neqp-l")]
    NeqpL,
    #[serde(rename = "qv")]
    Qv,
}

impl ModelTag {
    pub const ALL: [ModelTag; 4] = [ModelTag::Npid, ModelTag::NeqpS, ModelTag::NeqpL, ModelTag::Qv];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::Npid => "npid",
            ModelTag::NeqpS => "neqp-s",
            ModelTag::NeqpL => "neqp-l",
            ModelTag::Qv => "qv",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelTag::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model '{s}' (expected npid, neqp-s, neqp-l or qv)")))
    }
}

/// Previous loss seen by the controller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    e_prev: f64,
    initialized: bool,
}

impl PidState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Previous loss, if any step has been committed.
    pub fn previous(&self) -> Option<f64> {
        self.initialized.then_some(self.e_prev)
    }

    pub fn commit(&mut self, e: f64) {
        self.e_prev = e;
        self.initialized = true;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    /// Gains must be strictly positive.
    pub fn new(kp: f64, ki: f64, kd: f64) -> Result<Self> {
        if [kp, ki, kd].iter().all(|k| k.is_finite() && *k > 0.0) {
            Ok(Self { kp, ki, kd })
        } else {
            Err(Error::InvalidArgument(format!("PID gains must be positive, got ({kp}, {ki}, {kd})")))
        }
    }

    fn from_slice(k: &[f64]) -> Result<Self> {
        Self::new(k[0], k[1], k[2])
    }
}

/// Proportional, integral and derivative error terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidTerms {
    pub p: f64,
    pub i: f64,
    pub d: f64,
}

impl PidTerms {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p, self.i, self.d]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidOutput {
    pub o_pid: f64,
    pub terms: PidTerms,
}

/// Discrete PID on the loss: `P = e`, `I = e + e_prev`, `D = e - e_prev`.
/// Before the first commit `e_prev` is taken to be `e`.
pub fn pid_output(e: f64, state: &PidState, gains: &PidGains) -> PidOutput {
    let terms = pid_terms(e, state);
    let o_pid = gains.kp * terms.p + gains.ki * terms.i + gains.kd * terms.d;
    PidOutput { o_pid, terms }
}

fn pid_terms(e: f64, state: &PidState) -> PidTerms {
    let prev = state.previous().unwrap_or(e);
    PidTerms { p: e, i: e + prev, d: e - prev }
}

/// Replaces the network in NPID. Used by tests and fixed-gain studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PidOverride {
    /// Constant PID output. `Output(1.0)` reduces NPID to QV.
    Output(f64),
    /// Fixed gains fed through the usual PID arithmetic.
    Gains(PidGains),
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_qubits: usize,
    /// Step size on circuit parameters (NPID, QV).
    pub lr_theta: f64,
    /// Step size on network weights (NPID, NEQP).
    pub lr_net: f64,
    pub max_iters: usize,
    pub target_loss: f64,
    pub noise_rate: f64,
    #[serde(default)]
    pub noise_timing: NoiseTiming,
    #[serde(default)]
    pub log_base: LogBase,
    /// Overrides the `n² log n` depth schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default)]
    pub record_grad_norms: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pid_override: Option<PidOverride>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_qubits: 7,
            lr_theta: 0.1,
            lr_net: 0.01,
            max_iters: 1500,
            target_loss: 0.001,
            noise_rate: 0.01,
            noise_timing: NoiseTiming::Frozen,
            log_base: LogBase::Natural,
            depth: None,
            record_grad_norms: false,
            pid_override: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        if !(self.target_loss > 0.0 && self.target_loss <= 1.0) {
            return bad(format!("target_loss must lie in (0, 1], got {}", self.target_loss));
        }
        for (name, lr) in [("lr_theta", self.lr_theta), ("lr_net", self.lr_net)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be > 0, got {lr}"));
            }
        }
        NoiseModel::new(self.noise_rate)?;
        if self.n_qubits == 0 {
            return bad("n_qubits must be >= 1".into());
        }
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise_rate)
    }

    /// Noise source for a run, drawing from `rng`.
    pub fn noise_source<R: Rng>(&self, rng: R) -> Result<NoiseSource<R>> {
        Ok(NoiseSource::new(self.noise()?, self.noise_timing, rng))
    }

    /// Circuit depth for this configuration.
    pub fn circuit_depth(&self) -> Result<usize> {
        match self.depth {
            Some(d) => Ok(d),
            None => depth_schedule_with_base(self.n_qubits, self.log_base),
        }
    }
}

/// Loss trace and convergence metadata of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model_tag: ModelTag,
    pub seed: u64,
    pub n_qubits: usize,
    pub noise_rate: f64,
    pub losses: Vec<f64>,
    /// First iteration index with loss below target.
    pub converged_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_norms: Option<Vec<f64>>,
    /// NPID gains per iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gains: Vec<[f64; 3]>,
}

impl RunRecord {
    /// Iterations spent: `converged_at + 1`, or `max_iters` if the run never
    /// reached the target.
    pub fn iterations_to_converge(&self, max_iters: usize) -> usize {
        self.converged_at.map_or(max_iters, |i| i + 1)
    }
}

fn check_loss(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite(format!("loss is {loss}")))
    }
}

fn descend(theta: &ParamVector, grad: &[f64], scale: f64) -> Result<ParamVector> {
    ParamVector::new(theta.iter().zip(grad).map(|(t, g)| t - scale * g).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpidStep {
    pub theta_next: ParamVector,
    pub loss: f64,
    pub grad_norm: f64,
    pub o_pid: f64,
    /// Gains used this step; absent when the PID output is overridden.
    pub gains: Option<PidGains>,
}

/// One NPID iteration.
///
/// Evaluates the loss `e` and gradient `g` at `θ + Δ`, asks the network for
/// gains from `(e, P_e, I_e, D_e)` and moves `θ ← θ - lr·o_pid·g`. The
/// network is then trained by differentiating the post-step loss
/// `L(θ_next + Δ)` (same `Δ`) through the step: with
/// `s = ∇L(θ_next + Δ) · (-lr·g)` the gain gradient is `s·(P_e, I_e, D_e)`.
/// `state` is committed with `e` on success.
#[allow(clippy::too_many_arguments)]
pub fn npid_step<R: Rng>(
    theta_hat: &ParamVector,
    psi_in: &Statevector,
    spec: &CircuitSpec,
    mlp: &mut Mlp,
    state: &mut PidState,
    cfg: &TrainConfig,
    noise: &mut NoiseSource<R>,
) -> Result<NpidStep> {
    if mlp.input_dim() != 4 || mlp.output_dim() != 3 {
        return Err(Error::InvalidArgument(format!("NPID network must map 4 -> 3, got {:?}", mlp.layer_dims())));
    }
    let delta = noise.draw(theta_hat.len());
    let (e, g) = cost_and_gradient(spec, &add_offset(theta_hat, &delta), psi_in)?;
    let e = check_loss(e)?;
    let terms = pid_terms(e, state);

    let (o_pid, gains, learned) = match cfg.pid_override {
        Some(PidOverride::Output(fixed)) => (fixed, None, false),
        Some(PidOverride::Gains(gains)) => (pid_output(e, state, &gains).o_pid, Some(gains), false),
        None => {
            let k = mlp.forward(&[e, terms.p, terms.i, terms.d])?;
            let gains = PidGains::from_slice(&k)?;
            (pid_output(e, state, &gains).o_pid, Some(gains), true)
        }
    };

    let theta_next = descend(theta_hat, &g, cfg.lr_theta * o_pid)?;

    if learned {
        let (_, g_next) = cost_and_gradient(spec, &add_offset(&theta_next, &delta), psi_in)?;
        let s = -cfg.lr_theta * g_next.dot(&g);
        let output_grad: Vec<f64> = terms.as_array().iter().map(|t| s * t).collect();
        let net_grad = mlp.backward(&output_grad)?;
        mlp.sgd_step(&net_grad, cfg.lr_net)?;
    }

    state.commit(e);
    Ok(NpidStep { theta_next, loss: e, grad_norm: g.norm(), o_pid, gains })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QvStep {
    pub theta_next: ParamVector,
    pub loss: f64,
    pub grad_norm: f64,
}

/// One vanilla gradient step `θ ← θ - lr·g`, `g` evaluated at `θ + Δ`.
pub fn qv_step<R: Rng>(
    theta_hat: &ParamVector,
    psi_in: &Statevector,
    spec: &CircuitSpec,
    cfg: &TrainConfig,
    noise: &mut NoiseSource<R>,
) -> Result<QvStep> {
    let delta = noise.draw(theta_hat.len());
    let (loss, g) = cost_and_gradient(spec, &add_offset(theta_hat, &delta), psi_in)?;
    let loss = check_loss(loss)?;
    let theta_next = descend(theta_hat, &g, cfg.lr_theta)?;
    Ok(QvStep { theta_next, loss, grad_norm: g.norm() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeqpStep {
    pub loss: f64,
    pub grad_norm: f64,
}

/// One NEQP iteration: `θ = mlp(input)`, loss and gradient at `θ + Δ`,
/// backpropagate `g` through the network and take an SGD step.
pub fn neqp_step<R: Rng>(
    input_vec: &[f64],
    psi_in: &Statevector,
    spec: &CircuitSpec,
    mlp: &mut Mlp,
    cfg: &TrainConfig,
    noise: &mut NoiseSource<R>,
) -> Result<NeqpStep> {
    if mlp.output_dim() != spec.n_params() {
        return Err(Error::DimensionMismatch { expected: spec.n_params(), actual: mlp.output_dim() });
    }
    let theta = ParamVector::new(mlp.forward(input_vec)?)?;
    let delta = noise.draw(theta.len());
    let (loss, g) = cost_and_gradient(spec, &add_offset(&theta, &delta), psi_in)?;
    let loss = check_loss(loss)?;
    let net_grad = mlp.backward(&g)?;
    mlp.sgd_step(&net_grad, cfg.lr_net)?;
    Ok(NeqpStep { loss, grad_norm: g.norm() })
}

/// A fixed circuit and input state.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: CircuitSpec,
    pub psi_in: Statevector,
}

impl Instance {
    /// The instance a run with `seed` trains on. Independent of the model, so
    /// all strategies see the same problem under the same seed.
    pub fn from_seed(cfg: &TrainConfig, seed: u64) -> Result<Self> {
        let depth = cfg.circuit_depth()?;
        let psi_in = random_input_state(cfg.n_qubits, derive_seed(seed, "input"))?;
        let spec = build_random_circuit(cfg.n_qubits, depth, derive_seed(seed, "circuit"))?;
        Ok(Self { spec, psi_in })
    }
}

/// Builds the seeded instance and trains `model` on it.
pub fn train_loop(model: ModelTag, cfg: &TrainConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let instance = Instance::from_seed(cfg, seed)?;
    train_instance(model, cfg, &instance, seed)
}

/// Initial circuit parameters for a run: uniform on `[0, 2π)`, shared by
/// NPID and QV under the same seed.
pub fn initial_params(n_params: usize, seed: u64) -> ParamVector {
    ParamVector::uniform(n_params, &mut stream_rng(seed, "theta"))
}

enum Driver {
    Direct { theta: ParamVector, pid: Option<(Mlp, PidState)> },
    Generated { mlp: Mlp, input: Vec<f64> },
}

/// Trains `model` on a given instance. Initial parameters, network weights
/// and the noise stream all derive from `seed`.
pub fn train_instance(model: ModelTag, cfg: &TrainConfig, instance: &Instance, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let Instance { spec, psi_in } = instance;
    let n_params = spec.n_params();
    let mut noise: NoiseSource<ChaCha8Rng> = cfg.noise_source(stream_rng(seed, "noise"))?;
    let mut record = RunRecord {
        model_tag: model,
        seed,
        n_qubits: spec.n_qubits(),
        noise_rate: cfg.noise_rate,
        losses: Vec::with_capacity(cfg.max_iters),
        converged_at: None,
        grad_norms: cfg.record_grad_norms.then(Vec::new),
        gains: Vec::new(),
    };

    let mut driver = match model {
        ModelTag::Npid | ModelTag::Qv => {
            let theta = initial_params(n_params, seed);
            let pid = match model {
                ModelTag::Npid => {
                    Some((mlp_new(Architecture::Npid, n_params, derive_seed(seed, "net"))?, PidState::new()))
                }
                _ => None,
            };
            Driver::Direct { theta, pid }
        }
        ModelTag::NeqpS | ModelTag::NeqpL => {
            let arch = if model == ModelTag::NeqpS { Architecture::NeqpS } else { Architecture::NeqpL };
            let mlp = mlp_new(arch, n_params, derive_seed(seed, "net"))?;
            let mut rng = stream_rng(seed, "neqp-input");
            let input = (0..mlp.input_dim()).map(|_| rng.sample(StandardNormal)).collect();
            Driver::Generated { mlp, input }
        }
    };

    for iter in 0..cfg.max_iters {
        let (loss, grad_norm) = match &mut driver {
            Driver::Direct { theta, pid: Some((mlp, state)) } => {
                let step = npid_step(theta, psi_in, spec, mlp, state, cfg, &mut noise)?;
                if let Some(k) = step.gains {
                    record.gains.push([k.kp, k.ki, k.kd]);
                }
                *theta = step.theta_next;
                (step.loss, step.grad_norm)
            }
            Driver::Direct { theta, pid: None } => {
                let step = qv_step(theta, psi_in, spec, cfg, &mut noise)?;
                *theta = step.theta_next;
                (step.loss, step.grad_norm)
            }
            Driver::Generated { mlp, input } => {
                let step = neqp_step(input, psi_in, spec, mlp, cfg, &mut noise)?;
                (step.loss, step.grad_norm)
            }
        };
        record.losses.push(loss);
        if let Some(norms) = record.grad_norms.as_mut() {
            norms.push(grad_norm);
        }
        if loss < cfg.target_loss {
            record.converged_at = Some(iter);
            break;
        }
    }
    Ok(record)
}
