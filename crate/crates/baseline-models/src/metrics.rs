use mechanism_zoo::DatasetBundle;
use stats_kit::spearman;

use crate::interface::CounterfactualModel;

/// Mean squared error against the true counterfactual over non-intervened coordinates of every query.
pub fn cf_mse(model: &dyn CounterfactualModel, bundle: &DatasetBundle) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for q in &bundle.cf_queries {
        let Some(truth) = q.truth_cf.as_ref() else { continue };
        let pred = model.predict_counterfactual(&q.factual, &q.intervention);
        for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
            if q.intervention.value_of(i).is_none() {
                sum += (p - t) * (p - t);
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Mean squared error between abducted and true test latents, each coordinate first multiplied by
/// the sign of its Spearman correlation with the truth.
pub fn latent_recovery_error(model: &dyn CounterfactualModel, bundle: &DatasetBundle) -> f64 {
    let est: Vec<Vec<f64>> = bundle.v_test.iter().map(|v| model.abduct(v)).collect();
    let n = est.len();
    if n == 0 {
        return 0.0;
    }
    let d = bundle.d();
    let mut total = 0.0;
    for i in 0..d {
        let a: Vec<f64> = est.iter().map(|u| u[i]).collect();
        let b: Vec<f64> = bundle.u_test.iter().map(|u| u[i]).collect();
        let sign = match spearman(&a, &b) {
            Ok((rho, _)) if rho < 0.0 => -1.0,
            _ => 1.0,
        };
        total += a.iter().zip(&b).map(|(x, y)| (sign * x - y).powi(2)).sum::<f64>() / n as f64;
    }
    total / d as f64
}
