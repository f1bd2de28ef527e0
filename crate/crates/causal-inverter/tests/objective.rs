use causal_inverter::flow::{log_from_slope, N_KNOTS};
use causal_inverter::model::{HEAD_SCORE, HEAD_SHIFT, HEAD_SLOPE};
use causal_inverter::{
    cycle_loss, direction_accuracy, evaluate, gradient_check, gradient_check_with, nll_loss, orientation_loss,
    predict_counterfactual, transport_loss, GateMode, GateUse, InverterModel, LossBatch, LossWeights, ScmOracle,
    TransportPenaltyConfig, TriangularModel,
};
use mechanism_zoo::{make_scm, sample_dataset, DatasetBundle, MechanismFamily, SweepConfig};
use scm_core::{rng, Intervention, NoiseFamily};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

fn bundle(family: MechanismFamily, d: usize, n: usize, seed: u64) -> (DatasetBundle, ScmOracle) {
    let cfg = SweepConfig::new(family, NoiseFamily::Gaussian, d, n, seed).unwrap();
    let (scm, truth) = make_scm(&cfg).unwrap();
    let b = sample_dataset(&scm, &truth, &cfg).unwrap();
    (b, ScmOracle::new(scm).unwrap())
}

fn set_all_slopes(model: &mut InverterModel, i: usize, slope: f64) {
    for j in 0..N_KNOTS {
        model.head_mut(i, HEAD_SLOPE + j)[0] = log_from_slope(slope);
    }
}

fn default_weights() -> LossWeights {
    LossWeights { cyc: 1.0, tr: 0.1, ori: 0.01 }
}

#[test]
fn nll_of_identity_at_zero() {
    let model = InverterModel::new(2, 1, GateMode::Learned);
    let nll = nll_loss(&model, &vec![vec![0.0, 0.0]; 4], GateUse::Relaxed).unwrap();
    assert!((nll - LN_2PI).abs() < 1e-12, "{nll}");
}

#[test]
fn nll_of_scaled_model_adds_log_scale() {
    let mut model = InverterModel::new(2, 1, GateMode::Learned);
    set_all_slopes(&mut model, 0, 2.0);
    set_all_slopes(&mut model, 1, 2.0);
    let nll = nll_loss(&model, &[vec![0.0, 0.0]], GateUse::Hard).unwrap();
    assert!((nll - (LN_2PI + 2.0 * 2f64.ln())).abs() < 1e-12, "{nll}");
}

#[test]
fn nll_density_integrates_to_one() {
    for seed in 0..3 {
        let mut model = InverterModel::new(1, seed, GateMode::Learned);
        model.randomize(0.6, seed);
        let (lo, hi, n) = (-60.0, 60.0, 240_000);
        let h = (hi - lo) / n as f64;
        let mass: f64 = (0..=n)
            .map(|k| {
                let v = lo + k as f64 * h;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * (-model.nll_row(&[v])).exp()
            })
            .sum::<f64>()
            * h;
        assert!((mass - 1.0).abs() < 1e-3, "seed {seed}: mass {mass}");
    }
}

struct CorruptedInverse(InverterModel);

impl TriangularModel for CorruptedInverse {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn forward_step(&self, i: usize, c: &[f64], u: f64) -> f64 {
        self.0.forward_step(i, c, u)
    }
    fn inverse_step(&self, i: usize, c: &[f64], v: f64) -> f64 {
        self.0.inverse_step(i, c, v) * 1.01 + 0.01
    }
    fn orientation(&self, i: usize, c: &[f64]) -> i8 {
        self.0.orientation(i, c)
    }
}

#[test]
fn cycle_loss_exact_and_corrupted() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 3, 500, 4);
    let mut model = InverterModel::new(3, 2, GateMode::Learned);
    model.randomize(0.1, 3);
    let us = b.u_train[..200].to_vec();
    let vs = b.v_train[..200].to_vec();
    assert!(cycle_loss(&model, &vs, &us) < 1e-12);
    assert!(cycle_loss(&CorruptedInverse(model), &vs, &us) > 1e-6);
}

#[test]
fn cycle_loss_matches_scm_round_trips() {
    let (b, oracle) = bundle(MechanismFamily::smooth_flip(), 4, 500, 9);
    let scm = oracle.scm();
    let vs = &b.v_train[..100];
    let us = &b.u_train[..100];
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let v_err: f64 = vs.iter().map(|v| sq(&scm.solve(&scm.abduct(v).unwrap()).unwrap(), v)).sum::<f64>() / 100.0;
    let u_err: f64 = us.iter().map(|u| sq(&scm.abduct(&scm.solve(u).unwrap()).unwrap(), u)).sum::<f64>() / 100.0;
    let ours = cycle_loss(&oracle, vs, us);
    assert!((ours - (v_err + u_err)).abs() < 1e-15, "{ours} vs {}", v_err + u_err);
}

fn two_context_batch(c: [f64; 2], pairs: Vec<(usize, usize)>) -> LossBatch {
    let mut batch = LossBatch::plain(vec![vec![c[0], 0.3], vec![c[1], -0.2]]);
    batch.pairs = vec![Vec::new(), pairs];
    batch
}

#[test]
fn transport_of_context_free_mechanism_vanishes() {
    let mut model = InverterModel::new(2, 7, GateMode::Learned);
    model.head_mut(1, HEAD_SHIFT)[0] = 0.4;
    model.head_mut(1, HEAD_SCORE)[0] = -0.2;
    for j in 0..N_KNOTS {
        model.head_mut(1, HEAD_SLOPE + j)[0] = 0.3 * j as f64 - 1.0;
    }
    let batch = two_context_batch([-1.5, 2.0], vec![(0, 1), (1, 0)]);
    let tr = transport_loss(&model, &batch, &TransportPenaltyConfig::default()).unwrap();
    assert!(tr < 1e-12, "{tr}");
}

#[test]
fn transport_of_affine_threshold_model_vanishes() {
    // shift, log-scale and gate score all linear in the parent, flows affine: cross-context
    // transport is affine in z whatever the orientations
    let mut model = InverterModel::new(2, 7, GateMode::Learned);
    model.head_mut(1, HEAD_SHIFT)[1] = 0.8;
    model.head_mut(1, HEAD_SCORE)[1] = 1.0;
    model.head_mut(1, HEAD_SCORE)[0] = -0.1;
    for j in 0..N_KNOTS {
        model.head_mut(1, HEAD_SLOPE + j)[1] = 0.3;
    }
    let rows: Vec<Vec<f64>> = (0..16).map(|k| vec![-2.0 + 0.27 * k as f64, 0.0]).collect();
    let mut batch = LossBatch::draw(rows, &TransportPenaltyConfig::default(), &mut rng::seeded(1));
    batch.jitter.clear();
    let tr = transport_loss(&model, &batch, &TransportPenaltyConfig::default()).unwrap();
    assert!(tr < 1e-6, "{tr}");
}

#[test]
fn transport_detects_uncompensated_gate_mismatch() {
    let mut model = InverterModel::new(2, 7, GateMode::Learned);
    model.head_mut(1, HEAD_SCORE)[1] = 1.0;
    for j in 0..N_KNOTS {
        model.head_mut(1, HEAD_SLOPE + j)[0] = 0.25 * j as f64 - 0.8;
    }
    let batch = two_context_batch([1.0, -1.0], vec![(0, 1)]);
    assert_eq!(model.orientation(1, &[1.0]), 1);
    assert_eq!(model.orientation(1, &[-1.0]), -1);
    let tr = transport_loss(&model, &batch, &TransportPenaltyConfig::default()).unwrap();
    assert!(tr > 1e-3, "{tr}");
    let aligned = two_context_batch([1.0, 2.0], vec![(0, 1)]);
    assert!(transport_loss(&model, &aligned, &TransportPenaltyConfig::default()).unwrap() < 1e-12);
}

#[test]
fn transport_grid_is_symmetric() {
    let g = TransportPenaltyConfig::default().grid();
    assert_eq!(g.len(), 9);
    for k in 0..9 {
        assert!((g[k] + g[8 - k]).abs() < 1e-15);
    }
}

fn jitter_batch(d: usize, n: usize, seed: u64) -> LossBatch {
    let mut r = rng::seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut r)).collect())
        .collect();
    LossBatch::draw(rows, &TransportPenaltyConfig::default(), &mut r)
}

#[test]
fn orientation_loss_constant_and_saturated_gates() {
    let batch = jitter_batch(3, 64, 1);
    let mut model = InverterModel::new(3, 2, GateMode::Learned);
    for i in 1..3 {
        model.head_mut(i, HEAD_SCORE)[0] = 0.1;
    }
    let s = (4.0f64 * 0.1).tanh();
    let ori = orientation_loss(&model, &batch).unwrap();
    assert!((ori - 0.1 * (1.0 - s * s)).abs() < 1e-14, "{ori}");
    for i in 1..3 {
        model.head_mut(i, HEAD_SCORE)[0] = 20.0;
    }
    assert!(orientation_loss(&model, &batch).unwrap() < 1e-12);
}

#[test]
fn orientation_jitter_matches_gate_gradient() {
    // linear score w.c: E[(s(c) - s(c + delta))^2 / |delta|^2] ~ |grad s|^2 / k for isotropic delta
    for (d, tol) in [(2usize, 0.02), (3, 0.08)] {
        let batch = jitter_batch(d, 4000, 5);
        let mut model = InverterModel::new(d, 2, GateMode::Learned);
        let i = d - 1;
        let w: Vec<f64> = (0..i).map(|k| 0.3 + 0.2 * k as f64).collect();
        for (k, wk) in w.iter().enumerate() {
            model.head_mut(i, HEAD_SCORE)[1 + k] = *wk;
        }
        let w2: f64 = w.iter().map(|x| x * x).sum();
        let mut smooth = 0.0;
        let mut expected = 0.0;
        for (r, v) in batch.rows.iter().enumerate() {
            let c = &v[..i];
            let s1 = model.state(i, c).relaxed;
            let shifted: Vec<f64> = c.iter().zip(&batch.jitter[i][r]).map(|(a, b)| a + b).collect();
            let s2 = model.state(i, &shifted).relaxed;
            let dd: f64 = batch.jitter[i][r].iter().map(|x| x * x).sum();
            smooth += (s1 - s2).powi(2) / dd;
            expected += (4.0 * (1.0 - s1 * s1)).powi(2) * w2 / i as f64;
        }
        let n = batch.rows.len() as f64;
        let (smooth, expected) = (smooth / n, expected / n);
        assert!((smooth - expected).abs() < tol * expected, "d={d}: {smooth} vs {expected}");
        // the loss reports the same smoothness term (other mechanisms have zero score)
        let ori = orientation_loss(&model, &batch).unwrap();
        let decisive: f64 = (1..d)
            .map(|m| batch.rows.iter().map(|v| 0.1 * (1.0 - model.state(m, &v[..m]).relaxed.powi(2))).sum::<f64>() / n)
            .sum();
        assert!((ori * (d - 1) as f64 - (smooth + decisive)).abs() < 1e-9);
    }
}

#[test]
fn objective_is_additive() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 3, 500, 2);
    let mut model = InverterModel::new(3, 5, GateMode::Learned);
    model.randomize(0.1, 5);
    let batch = LossBatch::draw(b.v_train[..64].to_vec(), &TransportPenaltyConfig::default(), &mut rng::seeded(3));
    let w = LossWeights { cyc: 0.7, tr: 0.3, ori: 0.2 };
    let p = evaluate(&model, &batch, &w, GateUse::Relaxed, &TransportPenaltyConfig::default(), None).unwrap();
    assert_eq!(p.total, p.nll + 0.7 * p.cyc + 0.3 * p.tr + 0.2 * p.ori);
    let z = evaluate(&model, &batch, &LossWeights::ZERO, GateUse::Relaxed, &TransportPenaltyConfig::default(), None)
        .unwrap();
    assert_eq!(z.total, z.nll);
}

#[test]
fn gradient_check_random_models() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 3, 500, 6);
    let tcfg = TransportPenaltyConfig::default();
    for k in 0..10u64 {
        let mut model = InverterModel::new(3, k, GateMode::Learned);
        model.randomize(0.1, 100 + k);
        let batch = LossBatch::draw(b.v_train[..48].to_vec(), &tcfg, &mut rng::seeded(k));
        for gate_use in [GateUse::Relaxed, GateUse::Hard] {
            let check = gradient_check(&model, &batch, &default_weights(), gate_use, &tcfg, 50, k).unwrap();
            assert!(check.max_rel_error < 1e-4, "model {k} {gate_use:?}: {check:?}");
        }
    }
}

#[test]
fn gradient_matches_extrapolated_differences_at_larger_scale() {
    // the transport term's inner finite difference makes the objective stiff at larger weights,
    // so compare against Richardson-extrapolated central differences instead of a single step
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 3, 500, 6);
    let tcfg = TransportPenaltyConfig::default();
    let w = default_weights();
    for k in 0..3u64 {
        let mut model = InverterModel::new(3, k, GateMode::Learned);
        model.randomize(0.15, 100 + k);
        let batch = LossBatch::draw(b.v_train[..48].to_vec(), &tcfg, &mut rng::seeded(k));
        let mut grad = vec![0.0; model.n_params()];
        evaluate(&model, &batch, &w, GateUse::Hard, &tcfg, Some(&mut grad)).unwrap();
        let loss = |m: &InverterModel| evaluate(m, &batch, &w, GateUse::Hard, &tcfg, None).unwrap().total;
        let central = |p: usize, h: f64| {
            let mut m = model.clone();
            m.theta_mut()[p] += h;
            let up = loss(&m);
            m.theta_mut()[p] -= 2.0 * h;
            (up - loss(&m)) / (2.0 * h)
        };
        for p in (0..model.n_params()).step_by(7) {
            let rich = (4.0 * central(p, 2e-5) - central(p, 4e-5)) / 3.0;
            let err = (rich - grad[p]).abs() / rich.abs().max(grad[p].abs()).max(1e-5);
            assert!(err < 1e-4, "model {k} param {p}: {} vs {rich}", grad[p]);
        }
    }
}

#[test]
fn gradient_check_frozen_gate_model() {
    let (b, _) = bundle(MechanismFamily::global_monotone(), 4, 500, 6);
    let tcfg = TransportPenaltyConfig::default();
    let mut model = InverterModel::new(4, 1, GateMode::FrozenPositive);
    model.randomize(0.15, 1);
    let batch = LossBatch::draw(b.v_train[..48].to_vec(), &tcfg, &mut rng::seeded(1));
    let check = gradient_check(&model, &batch, &default_weights(), GateUse::Relaxed, &tcfg, 50, 1).unwrap();
    assert!(check.max_rel_error < 1e-4, "{check:?}");
}

#[test]
fn gradient_check_zero_direction_and_negative_control() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 3, 500, 6);
    let tcfg = TransportPenaltyConfig::default();
    let mut model = InverterModel::new(3, 3, GateMode::Learned);
    model.randomize(0.15, 3);
    let batch = LossBatch::draw(b.v_train[..48].to_vec(), &tcfg, &mut rng::seeded(2));
    let w = default_weights();
    let mut grad = vec![0.0; model.n_params()];
    evaluate(&model, &batch, &w, GateUse::Relaxed, &tcfg, Some(&mut grad)).unwrap();
    let loss = |m: &InverterModel| evaluate(m, &batch, &w, GateUse::Relaxed, &tcfg, None).unwrap().total;

    // the root mechanism's gate score is never used
    let k = model.param_index(0, HEAD_SCORE, 0);
    assert_eq!(grad[k], 0.0);
    let mut probe = model.clone();
    probe.theta_mut()[k] += 1e-5;
    let up = loss(&probe);
    probe.theta_mut()[k] -= 2e-5;
    let numeric = (up - loss(&probe)) / 2e-5;
    assert!(numeric.abs() < 1e-8);

    let honest = gradient_check_with(&model, &grad, 50, 9, loss);
    assert!(honest.max_rel_error < 1e-4, "{honest:?}");
    let corrupted: Vec<f64> = grad.iter().map(|g| 1.5 * g).collect();
    let check = gradient_check_with(&model, &corrupted, 50, 9, loss);
    assert!(check.max_rel_error > 1e-2, "{check:?}");
}

#[test]
fn wrapped_truth_matches_scm_counterfactuals() {
    let (b, oracle) = bundle(MechanismFamily::threshold_flip(), 4, 500, 12);
    for q in &b.cf_queries {
        let ours = predict_counterfactual(&oracle, &q.factual, &q.intervention);
        let truth = q.truth_cf.as_ref().unwrap();
        for (a, t) in ours.iter().zip(truth) {
            assert!((a - t).abs() < 1e-8);
        }
        let same = predict_counterfactual(&oracle, &q.factual, &Intervention::none());
        for (a, t) in same.iter().zip(&q.factual) {
            assert!((a - t).abs() < 1e-6);
        }
    }
    assert_eq!(direction_accuracy(&oracle, &b), 1.0);
}

#[test]
fn empty_intervention_returns_factual() {
    let (b, _) = bundle(MechanismFamily::smooth_flip(), 3, 500, 1);
    let mut model = InverterModel::new(3, 4, GateMode::Learned);
    model.randomize(0.1, 4);
    for v in &b.v_test[..200] {
        let back = predict_counterfactual(&model, v, &Intervention::none());
        for (a, t) in back.iter().zip(v) {
            assert!((a - t).abs() < 1e-6);
        }
    }
}

#[test]
fn direction_accuracy_gauge_and_chance() {
    let (b, _) = bundle(MechanismFamily::threshold_flip(), 3, 5000, 21);
    let mut model = InverterModel::new(3, 8, GateMode::Learned);
    model.randomize(0.3, 8);
    let before = direction_accuracy(&model, &b);
    let probe = b.v_test[7].clone();
    let u = model.inverse(&probe);
    let mut flipped = model.clone();
    for i in 1..3 {
        flipped.reflect(i);
    }
    assert!((direction_accuracy(&flipped, &b) - before).abs() < 1e-12);
    // the reflected model explains the same point with mirrored latents on the reflected coordinates
    let u2 = flipped.inverse(&probe);
    assert!((u2[0] - u[0]).abs() < 1e-12);
    for i in 1..3 {
        assert!((u2[i] + u[i]).abs() < 1e-9, "{} vs {}", u2[i], u[i]);
    }

    // gates driven by an independent coin: agreement ~ 1/2 on a balanced flip family
    struct Coin(InverterModel);
    impl TriangularModel for Coin {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn forward_step(&self, i: usize, c: &[f64], u: f64) -> f64 {
            self.0.forward_step(i, c, u)
        }
        fn inverse_step(&self, i: usize, c: &[f64], v: f64) -> f64 {
            self.0.inverse_step(i, c, v)
        }
        fn orientation(&self, _i: usize, c: &[f64]) -> i8 {
            let bits = c.iter().fold(0u64, |h, x| scm_core::rng::splitmix64(h ^ x.to_bits()));
            if bits & 1 == 0 {
                1
            } else {
                -1
            }
        }
    }
    let acc = direction_accuracy(&Coin(model), &b);
    assert!((acc - 0.5).abs() < 0.05, "{acc}");
}
