use std::fs;

use npid_lab::circuit::{build_random_circuit, CircuitSpec, NoiseTiming};
use npid_lab::harness::output::{parse_trace_file_name, read_csv, PLOTS_DIR, SUMMARY_FILE};
use npid_lab::harness::{recompute_summary, run_experiment, ExperimentConfig, LossBandRow, ScalingRow};
use npid_lab::optim::{train_loop, ModelTag, TrainConfig};

fn small_sweep() -> ExperimentConfig {
    ExperimentConfig {
        qubits: vec![3, 4],
        models: ModelTag::ALL.to_vec(),
        runs_per_config: 2,
        noise_rates: vec![0.01, 0.05],
        train: TrainConfig { max_iters: 150, record_grad_norms: true, ..TrainConfig::default() },
        base_seed: 9,
    }
}

#[test]
fn sweep_writes_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep();
    let exp = run_experiment(&cfg, Some(dir.path())).unwrap();

    let traces: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.unwrap().file_name().to_str().and_then(parse_trace_file_name))
        .collect();
    assert_eq!(traces.len(), cfg.keys().len());

    let text = fs::read_to_string(dir.path().join("trace_npid_3_0.01_0.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,loss,grad_norm"));
    let loss = lines.next().unwrap().split(',').nth(1).unwrap();
    let digits = loss.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
    assert!(digits >= 12, "{loss}");

    let plots = dir.path().join(PLOTS_DIR);
    let band: Vec<LossBandRow> = read_csv(&plots.join("loss_qv_4_0.05.csv")).unwrap();
    assert!(!band.is_empty() && band.iter().enumerate().all(|(i, r)| r.iter == i));
    let scaling: Vec<ScalingRow> = read_csv(&plots.join("iterations_vs_qubits.csv")).unwrap();
    assert_eq!(scaling.len(), exp.summary.rows.len());

    let written = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(written, exp.summary.to_json().unwrap());
    assert_eq!(recompute_summary(dir.path()).unwrap(), exp.summary);
}

#[test]
fn circuit_json_survives_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let spec = build_random_circuit(5, 4, 17).unwrap();
    fs::write(&path, spec.to_json().unwrap()).unwrap();
    assert_eq!(CircuitSpec::from_json(&fs::read_to_string(&path).unwrap()).unwrap(), spec);
}

#[test]
fn plain_descent_converges_on_small_instances() {
    let cfg = TrainConfig { n_qubits: 4, ..TrainConfig::default() };
    for seed in 0..3 {
        let rec = train_loop(ModelTag::Qv, &cfg, seed).unwrap();
        assert!(rec.converged_at.is_some(), "seed {seed}: final loss {:?}", rec.losses.last());
    }
}

#[test]
fn per_evaluation_noise_differs_from_frozen() {
    let frozen = TrainConfig { n_qubits: 3, max_iters: 30, noise_rate: 0.05, ..TrainConfig::default() };
    let fresh = TrainConfig { noise_timing: NoiseTiming::PerEvaluation, ..frozen.clone() };
    let a = train_loop(ModelTag::Qv, &frozen, 1).unwrap();
    let b = train_loop(ModelTag::Qv, &fresh, 1).unwrap();
    assert_eq!(a.losses[0], b.losses[0]);
    assert_ne!(a.losses[1..], b.losses[1..]);
    assert_eq!(b, train_loop(ModelTag::Qv, &fresh, 1).unwrap());
}
