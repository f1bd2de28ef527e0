//! Quick in-process property checks behind the `selftest` command.

use causal_inverter::{
    gradient_check, GateMode, GateUse, InverterModel, LossBatch, LossWeights, TransportPenaltyConfig,
};
use mechanism_zoo::{make_scm, MechanismFamily, SweepConfig};
use scm_core::{rng, NoiseFamily};

use crate::counterexample::{counterfactual_table, ei_suite, equivalence, sign_pair_check};
use crate::sampler_demo::{run_sampler, SamplerDemoConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String), String>) -> Check {
    match run() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("error: {e}") },
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn selftest() -> Vec<Check> {
    vec![
        check("counterexample counterfactuals", || {
            let r = &counterfactual_table().map_err(s)?[0];
            let ok = (r.m_x + 1.0).abs() < 1e-12
                && (r.m_y + 0.7).abs() < 1e-12
                && (r.m_prime_x + 1.0).abs() < 1e-12
                && (r.m_prime_y - 0.7).abs() < 1e-12;
            Ok((ok, format!("M ({}, {}), M' ({}, {})", r.m_x, r.m_y, r.m_prime_x, r.m_prime_y)))
        }),
        check("observational equivalence", || {
            let e = equivalence().map_err(s)?;
            Ok((e.pass, format!("KS statistics {:?}", e.ks_marginals.iter().map(|m| m.statistic).collect::<Vec<_>>())))
        }),
        check("isomorphic pairs agree", || {
            let pairs = ei_suite(5, 100, 3).map_err(s)?;
            let tv = pairs.iter().map(|p| p.transport_variation).fold(0.0, f64::max);
            let cf = pairs.iter().map(|p| p.cf_disagreement).fold(0.0, f64::max);
            let sign = sign_pair_check(200, 3).map_err(s)?;
            let ok = tv < 1e-9 && cf < 1e-8 && sign.transport_variation > 1.0 && sign.cf_disagreement > 1.0;
            Ok((
                ok,
                format!(
                    "controls tv {tv:.2e} cf {cf:.2e}; sign pair tv {:.3} cf {:.3}",
                    sign.transport_variation, sign.cf_disagreement
                ),
            ))
        }),
        check("zoo solve/abduct round trips", || {
            let mut worst: f64 = 0.0;
            for family in
                [MechanismFamily::global_monotone(), MechanismFamily::threshold_flip(), MechanismFamily::smooth_flip()]
            {
                let cfg = SweepConfig::new(family, NoiseFamily::Gaussian, 3, 1000, 5).map_err(s)?;
                let (scm, _) = make_scm(&cfg).map_err(s)?;
                let (us, vs) = scm.sample(1000, &mut rng::seeded(5)).map_err(s)?;
                for (u, v) in us.iter().zip(&vs) {
                    let back = scm.abduct(v).map_err(s)?;
                    worst = back.iter().zip(u).fold(worst, |w, (a, b)| w.max((a - b).abs()));
                }
            }
            Ok((worst < 1e-8, format!("max error {worst:.2e}")))
        }),
        check("analytic gradients", || {
            let cfg =
                SweepConfig::new(MechanismFamily::threshold_flip(), NoiseFamily::Gaussian, 3, 500, 6).map_err(s)?;
            let (scm, _) = make_scm(&cfg).map_err(s)?;
            let (_, vs) = scm.sample(48, &mut rng::seeded(6)).map_err(s)?;
            let tcfg = TransportPenaltyConfig::default();
            let w = LossWeights { cyc: 1.0, tr: 0.1, ori: 1e-3 };
            let mut worst: f64 = 0.0;
            for k in 0..3u64 {
                let mut model = InverterModel::new(3, k, GateMode::Learned);
                model.randomize(0.1, 100 + k);
                let batch = LossBatch::draw(vs.clone(), &tcfg, &mut rng::seeded(k));
                let c = gradient_check(&model, &batch, &w, GateUse::Relaxed, &tcfg, 30, k).map_err(s)?;
                worst = worst.max(c.max_rel_error);
            }
            Ok((worst < 1e-4, format!("max relative error {worst:.2e}")))
        }),
        check("balanced sampler", || {
            let o = run_sampler(&SamplerDemoConfig::default()).map_err(s)?;
            let mut ids: Vec<usize> = o.selection.queries.iter().map(|q| q.factual_id).collect();
            ids.sort_unstable();
            ids.dedup();
            let ok = o.stats.query_count == 32 && o.stats.change_rate == 0.5 && ids.len() == 32;
            Ok((ok, o.stats.table_row("latch")))
        }),
        check("exact tests", || {
            let mc = stats_kit::mcnemar_exact(6, 0).p_two_sided;
            let w = stats_kit::wilcoxon_signed_rank(&[1.0; 6]).map_err(s)?.p_two_sided;
            Ok((
                (mc - 0.03125).abs() < 1e-15 && (w - 0.03125).abs() < 1e-15,
                format!("McNemar(6, 0) {mc}, Wilcoxon six ties {w}"),
            ))
        }),
    ]
}
