//! The PID-scaled step on Rx(θ)|0⟩, whose loss is sin²(θ/2).
//!
//! With fixed gains the output `o_pid` is proportional to the loss, so the
//! step shrinks as the target gets close. The learned-gain variant adapts
//! kp, ki, kd from the one-step lookahead signal.

use npid_lab::circuit::{CircuitSpec, LayerSpec, NoiseModel, NoiseSource, NoiseTiming, ParamVector, Rotation};
use npid_lab::neural::{mlp_new, Architecture};
use npid_lab::optim::{npid_step, qv_step, PidGains, PidOverride, PidState, TrainConfig};
use npid_lab::qsim::{Axis, Statevector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> npid_lab::Result<()> {
    let layer = LayerSpec { opening_rotations: vec![Rotation { axis: Axis::X, qubit: 0, slot: 0 }], pairings: vec![] };
    let spec = CircuitSpec::new(1, vec![layer])?;
    let psi = Statevector::zero_state(1);
    let quiet = || NoiseSource::new(NoiseModel::noiseless(), NoiseTiming::Frozen, ChaCha8Rng::seed_from_u64(0));

    let fixed = TrainConfig {
        lr_theta: 0.5,
        pid_override: Some(PidOverride::Gains(PidGains::new(1.0, 1.0, 1.0)?)),
        ..TrainConfig::default()
    };
    let learned = TrainConfig { lr_theta: 0.5, lr_net: 1.0, ..TrainConfig::default() };

    let mut thetas = [ParamVector::new(vec![2.0])?, ParamVector::new(vec![2.0])?, ParamVector::new(vec![2.0])?];
    let mut states = [PidState::new(), PidState::new()];
    let mut nets = [mlp_new(Architecture::Npid, 1, 0)?, mlp_new(Architecture::Npid, 1, 0)?];
    let mut noise = [quiet(), quiet(), quiet()];

    println!("{:>5} {:>12} {:>12} {:>12}   learned gains", "iter", "fixed gains", "learned", "plain");
    for iter in 0..=60 {
        let a = npid_step(&thetas[0], &psi, &spec, &mut nets[0], &mut states[0], &fixed, &mut noise[0])?;
        let b = npid_step(&thetas[1], &psi, &spec, &mut nets[1], &mut states[1], &learned, &mut noise[1])?;
        let c = qv_step(&thetas[2], &psi, &spec, &learned, &mut noise[2])?;
        if iter % 10 == 0 {
            let k = b.gains.unwrap();
            println!(
                "{iter:5} {:12.3e} {:12.3e} {:12.3e}   ({:.2}, {:.2}, {:.2})",
                a.loss, b.loss, c.loss, k.kp, k.ki, k.kd
            );
        }
        thetas = [a.theta_next, b.theta_next, c.theta_next];
    }
    Ok(())
}

// $ cargo run --release --example pid_controller
