use std::sync::Arc;

use baseline_models::{
    cf_mse, fit_anm, fit_contextual_flow, fit_ours, fit_tmscm, latent_recovery_error, CounterfactualModel,
};
use causal_inverter::{ScmOracle, TrainConfig};
use mechanism_zoo::{make_scm, sample_dataset, DatasetBundle, MechanismFamily, OrientationTruth, SweepConfig};
use scm_core::{rng, ExogenousDistribution, FnMechanism, Intervention, Mechanism, NoiseFamily, TriangularScm};

fn zoo(family: MechanismFamily, n: usize, seed: u64) -> (DatasetBundle, ScmOracle) {
    let cfg = SweepConfig::new(family, NoiseFamily::Gaussian, 3, n, seed).unwrap();
    let (scm, truth) = make_scm(&cfg).unwrap();
    (sample_dataset(&scm, &truth, &cfg).unwrap(), ScmOracle::new(scm).unwrap())
}

fn custom(mechs: Vec<Arc<dyn Mechanism>>, n: usize, seed: u64) -> DatasetBundle {
    let d = mechs.len();
    let scm = TriangularScm::in_order(mechs, ExogenousDistribution::gaussian(d)).unwrap();
    let cfg = SweepConfig::new(MechanismFamily::global_monotone(), NoiseFamily::Gaussian, d, n, seed).unwrap();
    sample_dataset(&scm, &OrientationTruth::monotone(d), &cfg).unwrap()
}

fn additive_scm() -> Vec<Arc<dyn Mechanism>> {
    vec![
        Arc::new(FnMechanism::new("root", |_, u| u)),
        Arc::new(FnMechanism::new("quad", |c, u| 0.5 * c[0] + 0.3 * c[0] * c[0] + u)),
        Arc::new(FnMechanism::new("mixed", |c, u| -0.4 * c[0] * c[1] + 0.2 * c[1] + u)),
    ]
}

/// The flow's basis clips inputs to [-5, 5], so its own family evaluates parents clipped too.
fn clip(x: f64) -> f64 {
    x.clamp(-5.0, 5.0)
}

fn affine_scm() -> Vec<Arc<dyn Mechanism>> {
    vec![
        Arc::new(FnMechanism::new("root", |_, u| u)),
        Arc::new(FnMechanism::new("a1", |c, u| 0.5 * clip(c[0]) + (0.3 * clip(c[0])).exp() * u)),
        Arc::new(FnMechanism::new("a2", |c, u| {
            let (x, y) = (clip(c[0]), clip(c[1]));
            -0.4 * y + 0.2 * x * y + (0.2 - 0.3 * y).exp() * u
        })),
    ]
}

#[test]
fn anm_recovers_additive_model() {
    let b = custom(additive_scm(), 10_000, 1);
    let anm = fit_anm(&b, 1).unwrap();
    let mse = cf_mse(&anm, &b);
    assert!(mse < 0.01, "{mse}");
    for i in 0..3 {
        let mean: f64 = b.v_train.iter().map(|v| anm.abduct(v)[i]).sum::<f64>() / b.v_train.len() as f64;
        assert!(mean.abs() < 1e-10, "mechanism {i}: {mean}");
    }
}

#[test]
fn anm_misses_orientation_flips() {
    let (b, _) = zoo(MechanismFamily::threshold_flip(), 5000, 2);
    let anm = fit_anm(&b, 2).unwrap();
    assert!(cf_mse(&anm, &b) > 0.1);
}

#[test]
fn contextual_flow_recovers_own_family() {
    let b = custom(affine_scm(), 100_000, 3);
    let flow = fit_contextual_flow(&b, 3).unwrap();
    let mse = cf_mse(&flow, &b);
    assert!(mse < 1e-3, "{mse}");
    let mut r = rng::seeded(4);
    for _ in 0..10_000 {
        let c: Vec<f64> = (0..2).map(|_| 3.0 * NoiseFamily::Gaussian.sample(&mut r)).collect();
        assert!(flow.scale(1, &c[..1]) > 0.0 && flow.scale(2, &c) > 0.0);
    }
}

#[test]
fn tmscm_is_globally_monotone() {
    let (b, _) = zoo(MechanismFamily::threshold_flip(), 2000, 4);
    let cfg = TrainConfig { steps: 300, ..TrainConfig::with_seed(4) };
    let (tm, _) = fit_tmscm(&b, 4, &cfg).unwrap();
    let mut r = rng::seeded(5);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..3).map(|_| 3.0 * NoiseFamily::Gaussian.sample(&mut r)).collect();
        for i in 0..3 {
            assert!(tm.partial_u(i, &x[..i], x[2 - i]) > 0.0);
        }
    }
}

#[test]
fn oracle_has_zero_errors() {
    let (b, oracle) = zoo(MechanismFamily::smooth_flip(), 2000, 6);
    assert!(cf_mse(&oracle, &b) < 1e-12);
    assert!(latent_recovery_error(&oracle, &b) < 1e-12);
    assert_eq!(oracle.name(), "oracle");
}

struct Constant(f64);

impl CounterfactualModel for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn abduct(&self, v: &[f64]) -> Vec<f64> {
        vec![self.0; v.len()]
    }
    fn predict_counterfactual(&self, factual: &[f64], intervention: &Intervention) -> Vec<f64> {
        (0..factual.len()).map(|i| intervention.value_of(i).unwrap_or(self.0)).collect()
    }
}

#[test]
fn constant_prediction_scores_the_truth_variance() {
    let (b, _) = zoo(MechanismFamily::threshold_flip(), 2000, 7);
    let truth: Vec<f64> = b
        .cf_queries
        .iter()
        .flat_map(|q| {
            let t = q.truth_cf.clone().unwrap();
            (0..t.len()).filter(|&i| q.intervention.value_of(i).is_none()).map(move |i| t[i])
        })
        .collect();
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let var = truth.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((cf_mse(&Constant(mean), &b) - var).abs() < 1e-12);
}

#[test]
fn flip_family_ordering_and_interface_contract() {
    let (b, _) = zoo(MechanismFamily::smooth_flip(), 10_000, 2);
    let cfg = TrainConfig::with_seed(2);
    let (ours, _) = fit_ours(&b, 2, &cfg).unwrap();
    let (tm, _) = fit_tmscm(&b, 2, &cfg).unwrap();
    let flow = fit_contextual_flow(&b, 2).unwrap();
    let anm = fit_anm(&b, 2).unwrap();
    let (e_ours, e_tm) = (cf_mse(&ours, &b), cf_mse(&tm, &b));
    assert!(e_tm >= 3.0 * e_ours, "tm {e_tm} ours {e_ours}");
    let models: [&dyn CounterfactualModel; 4] = [&ours, &tm, &flow, &anm];
    for m in models {
        for v in &b.v_test[..100] {
            let back = m.predict_counterfactual(v, &Intervention::none());
            for (x, y) in back.iter().zip(v) {
                assert!((x - y).abs() < 1e-6, "{}", m.name());
            }
        }
    }
    eprintln!(
        "smooth_flip: ours {e_ours:.4} tm {e_tm:.4} flow {:.4} anm {:.4} latent ours {:.4}",
        cf_mse(&flow, &b),
        cf_mse(&anm, &b),
        latent_recovery_error(&ours, &b)
    );
}

#[test]
fn monotone_family_all_models_competitive() {
    let (b, _) = zoo(MechanismFamily::global_monotone(), 10_000, 1);
    let cfg = TrainConfig::with_seed(1);
    let (ours, _) = fit_ours(&b, 1, &cfg).unwrap();
    let (tm, _) = fit_tmscm(&b, 1, &cfg).unwrap();
    let flow = fit_contextual_flow(&b, 1).unwrap();
    let anm = fit_anm(&b, 1).unwrap();
    let errs = [cf_mse(&ours, &b), cf_mse(&tm, &b), cf_mse(&flow, &b), cf_mse(&anm, &b)];
    eprintln!("global_monotone: {errs:?}");
    assert!(errs.iter().all(|e| *e < 0.02), "{errs:?}");
    assert!(errs[1] <= 2.0 * errs[0], "{errs:?}");
}

#[test]
fn contextual_flow_tracks_tmscm_on_threshold_flip() {
    let (b, _) = zoo(MechanismFamily::threshold_flip(), 10_000, 1);
    let (tm, _) = fit_tmscm(&b, 1, &TrainConfig::with_seed(1)).unwrap();
    let flow = fit_contextual_flow(&b, 1).unwrap();
    let (e_tm, e_flow) = (cf_mse(&tm, &b), cf_mse(&flow, &b));
    eprintln!("threshold_flip: tm {e_tm:.4} flow {e_flow:.4}");
    assert!((e_flow - e_tm).abs() <= 0.2 * e_tm, "tm {e_tm} flow {e_flow}");
}
