use causal_inverter::{
    direction_accuracy, predict_counterfactual, train, Checkpoint, GateMode, InverterError, InverterModel, TrainConfig,
    TriangularModel,
};
use mechanism_zoo::{make_scm, sample_dataset, DatasetBundle, MechanismFamily, SweepConfig};
use scm_core::{NoiseFamily, TriangularScm};

fn bundle(family: MechanismFamily, n: usize, seed: u64) -> (DatasetBundle, TriangularScm) {
    let cfg = SweepConfig::new(family, NoiseFamily::Gaussian, 3, n, seed).unwrap();
    let (scm, truth) = make_scm(&cfg).unwrap();
    (sample_dataset(&scm, &truth, &cfg).unwrap(), scm)
}

fn cf_mse(model: &InverterModel, b: &DatasetBundle) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for q in &b.cf_queries {
        let pred = predict_counterfactual(model, &q.factual, &q.intervention);
        for (i, (p, t)) in pred.iter().zip(q.truth_cf.as_ref().unwrap()).enumerate() {
            if q.intervention.value_of(i).is_none() {
                sum += (p - t).powi(2);
                count += 1;
            }
        }
    }
    sum / count as f64
}

#[test]
fn monotone_fit_reaches_true_likelihood() {
    let (b, scm) = bundle(MechanismFamily::global_monotone(), 2000, 3);
    let (model, _) = train(InverterModel::new(3, 3, GateMode::Learned), &b, &TrainConfig::with_seed(3)).unwrap();
    let n = b.v_train.len() as f64;
    let ours: f64 = b.v_train.iter().map(|v| model.nll_row(v)).sum::<f64>() / n;
    let truth: f64 = b.v_train.iter().map(|v| -scm.log_likelihood(v).unwrap()).sum::<f64>() / n;
    assert!(ours - truth < 0.1, "ours {ours} truth {truth}");
}

#[test]
fn monotone_counterfactuals_are_accurate() {
    let (b, _) = bundle(MechanismFamily::global_monotone(), 10_000, 5);
    let (model, _) = train(InverterModel::new(3, 5, GateMode::Learned), &b, &TrainConfig::with_seed(5)).unwrap();
    let mse = cf_mse(&model, &b);
    assert!(mse < 0.01, "{mse}");
}

#[test]
fn threshold_flip_orientation_is_recovered() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 10_000, 7);
    let (model, trace) = train(InverterModel::new(3, 7, GateMode::Learned), &b, &TrainConfig::with_seed(7)).unwrap();
    let acc = direction_accuracy(&model, &b);
    assert!(acc >= 0.9, "{acc}");
    assert_eq!(trace.rows.len(), 2000 / 50 + 1);
    assert_eq!(trace.last().unwrap().step, 1999);

    let mut r = scm_core::rng::seeded(1);
    for _ in 0..1000 {
        let u: Vec<f64> = (0..3).map(|_| NoiseFamily::Gaussian.sample(&mut r) * 2.0).collect();
        let back = model.inverse(&model.forward(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

fn short(seed: u64) -> TrainConfig {
    TrainConfig { steps: 300, ..TrainConfig::with_seed(seed) }
}

#[test]
fn training_is_deterministic() {
    let (b, _) = bundle(MechanismFamily::smooth_flip(), 1000, 2);
    let (m1, t1) = train(InverterModel::new(3, 1, GateMode::Learned), &b, &short(4)).unwrap();
    let (m2, t2) = train(InverterModel::new(3, 1, GateMode::Learned), &b, &short(4)).unwrap();
    assert_eq!(t1.to_csv(), t2.to_csv());
    assert_eq!(m1.theta(), m2.theta());
    let (_, t3) = train(InverterModel::new(3, 1, GateMode::Learned), &b, &short(5)).unwrap();
    assert_ne!(t1.to_csv(), t3.to_csv());
}

#[test]
fn zero_penalties_reduce_to_likelihood_training() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 1000, 2);
    let base = short(4).nll_only();
    let (m1, t1) = train(InverterModel::new(3, 1, GateMode::Learned), &b, &base).unwrap();
    for row in &t1.rows {
        assert_eq!(row.total, row.nll);
    }
    // penalty draws never leak into the parameter path when their weights are zero
    let mut other = base.clone();
    other.transport.pairs = 3;
    other.transport.z_max = 2.0;
    let (m2, t2) = train(InverterModel::new(3, 1, GateMode::Learned), &b, &other).unwrap();
    assert_eq!(m1.theta(), m2.theta());
    let nll = |t: &causal_inverter::LossTrace| t.rows.iter().map(|r| (r.step, r.total, r.nll)).collect::<Vec<_>>();
    assert_eq!(nll(&t1), nll(&t2));
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 1000, 8);
    let cfg = short(8);
    let (model, trace) = train(InverterModel::new(3, 8, GateMode::Learned), &b, &cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let path = dir.join("model.json");
    Checkpoint { model: model.clone(), config: cfg.clone() }.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.config, cfg);
    for q in &b.cf_queries[..50] {
        assert_eq!(
            predict_counterfactual(&model, &q.factual, &q.intervention),
            predict_counterfactual(&back.model, &q.factual, &q.intervention)
        );
    }
    trace.write_csv(&dir.join("trace.csv")).unwrap();
    let csv = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(csv.starts_with("step,total,nll,nll_hard,cyc,tr,ori,grad_norm\n"));
}

#[test]
fn non_finite_data_reports_divergence() {
    let (mut b, _) = bundle(MechanismFamily::global_monotone(), 1000, 1);
    for row in b.v_train.iter_mut() {
        row[2] = f64::NAN;
    }
    let cfg = TrainConfig { data_init: false, ..short(1) };
    match train(InverterModel::new(3, 1, GateMode::Learned), &b, &cfg) {
        Err(InverterError::Divergence { step: 0, .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_config_rejected() {
    let (b, _) = bundle(MechanismFamily::global_monotone(), 1000, 1);
    let cfg = TrainConfig { lambda_tr: -1.0, ..short(1) };
    assert!(matches!(train(InverterModel::new(3, 1, GateMode::Learned), &b, &cfg), Err(InverterError::Config(_))));
}
