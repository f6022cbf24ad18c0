use nalgebra::DMatrix;
use pnn_core::lines::*;
use pnn_core::trainer::*;

#[test]
fn more_neurons_find_global_optima_more_often() {
    let cfg = ExperimentConfig::matched_default();
    let small = experiment_matched_degree_one(5, 10, 20, &cfg).unwrap();
    let large = experiment_matched_degree_one(5, 50, 20, &cfg).unwrap();
    assert!(large.fraction_global > small.fraction_global, "{} vs {}", large.fraction_global, small.fraction_global);
}

#[test]
fn matched_outcomes_are_consistent() {
    let cfg = ExperimentConfig::matched_default();
    let s = experiment_matched_degree_one(5, 10, 20, &cfg).unwrap();
    assert_eq!(s, experiment_matched_degree_one(5, 10, 20, &cfg).unwrap());
    for t in &s.trials {
        match t.outcome {
            Outcome::Global => assert!(t.final_train_loss <= cfg.global_tol),
            // A bad local optimum leaves at least one axis whose neurons share a sign.
            Outcome::BadLocal => {
                assert!(t.final_train_loss > cfg.global_tol);
                assert!(t.signature_violations >= 1);
            }
            Outcome::NotConverged => assert!(t.final_train_loss > cfg.global_tol),
        }
    }
}

#[test]
fn mismatched_runs_stay_on_their_lines() {
    let mut cfg = ExperimentConfig::mismatched_default();
    cfg.train.epochs = 20;
    let table = experiment_mismatched_random(6, 4, &[4, 8], 2, 2, &cfg).unwrap();
    assert_eq!(table.runs.len(), 8);
    assert!(table.runs.iter().all(|r| r.feasible && r.normalized_test_mse.is_finite()));
    assert!(experiment_mismatched_random(6, 4, &[3], 1, 1, &cfg).is_err());
}

#[test]
fn training_is_deterministic() {
    let w0 = init_random_pnn(4, 3, 9).unwrap();
    let ws = random_dense_network(4, 3, 10);
    let data = generate_dataset(&ws, 500, 11).unwrap();
    let tc = TrainConfig { epochs: 5, ..TrainConfig::matched_default() };
    let a = sgd_train(&data, None, w0.matrix(), Some(w0.config()), &tc).unwrap();
    let b = sgd_train(&data, None, w0.matrix(), Some(w0.config()), &tc).unwrap();
    assert_eq!(a.final_weights, b.final_weights);
    assert_eq!(a.trajectory, b.trajectory);
    assert!(a.line_feasibility_ok && a.max_line_deviation <= 1e-6);
}

fn scalar_config() -> std::sync::Arc<LineConfig> {
    LineConfig::new(axis_lines(1).unwrap(), NeuronLineMap::round_robin(2, 1).unwrap()).unwrap()
}

#[test]
fn classification_examples() {
    let cfg = scalar_config();
    let ws = DMatrix::from_row_slice(1, 2, &[6.0, -4.0]);
    let fake = |w: [f64; 2], loss: f64| TrainResult {
        final_weights: DMatrix::from_row_slice(1, 2, &w),
        final_train_loss: loss,
        final_test_loss_normalized: None,
        epochs_run: 1,
        final_signature: None,
        line_feasibility_ok: true,
        max_line_deviation: 0.0,
        trajectory: vec![loss],
    };
    let c = classify_outcome(&fake([6.0, -4.0], 1e-7), &cfg, &ws, 1e-5, 0.05).unwrap();
    assert_eq!(c.outcome, Outcome::Global);
    // Σw = 6 inside R(1,1) is the trapped stationary point.
    let c = classify_outcome(&fake([3.0, 3.0], 8.0), &cfg, &ws, 1e-5, 0.05).unwrap();
    assert_eq!(c.outcome, Outcome::BadLocal);
    assert_eq!(c.signature_violations, 1);
    assert!(c.violates_mixed_condition);
    let c = classify_outcome(&fake([1.0, 1.0], 20.0), &cfg, &ws, 1e-5, 0.05).unwrap();
    assert_eq!(c.outcome, Outcome::NotConverged);
}

#[test]
fn unprojected_training_fits_a_small_network() {
    let ws = random_dense_network(3, 2, 1);
    let data = generate_dataset(&ws, 2000, 2).unwrap();
    let init = random_dense_network(3, 6, 3);
    let tc = TrainConfig { epochs: 100, early_stop_window: 0, ..TrainConfig::matched_default() };
    let res = sgd_train(&data, None, &init, None, &tc).unwrap();
    assert!(res.final_signature.is_none());
    assert!(res.final_train_loss < 0.05 * data.mse(&DMatrix::zeros(3, 6)));
}
