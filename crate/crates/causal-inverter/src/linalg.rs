use nalgebra::{DMatrix, DVector};

use crate::error::{InverterError, Result};

/// Weighted ridge regression: minimizes `sum_r w_r (y_r - x_r . beta)^2 + lambda |beta|^2`.
pub fn ridge(rows: &[Vec<f64>], y: &[f64], weights: Option<&[f64]>, lambda: f64) -> Result<Vec<f64>> {
    let p = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() || p == 0 {
        return Err(InverterError::EmptyBatch);
    }
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for (r, x) in rows.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[r]);
        for a in 0..p {
            let wa = w * x[a];
            rhs[a] += wa * y[r];
            for b in a..p {
                gram[(a, b)] += wa * x[b];
            }
        }
    }
    for a in 0..p {
        gram[(a, a)] += lambda;
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let chol = gram.cholesky().ok_or(InverterError::Singular)?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
