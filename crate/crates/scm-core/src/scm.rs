//! Triangular SCMs and the abduction-action-prediction engine.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScmError};
use crate::mechanism::Mechanism;
use crate::noise::ExogenousDistribution;
use crate::rng::Rng;

/// Paired exogenous and endogenous rows.
pub type Draws = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// A permutation of `0..d`; variable `perm[k]` is computed at step `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalOrder {
    perm: Vec<usize>,
}

impl CausalOrder {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(ScmError::Order(format!("{perm:?} is not a permutation of 0..{d}")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(d: usize) -> Self {
        Self { perm: (0..d).collect() }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Position of variable `var` in the order.
    pub fn position(&self, var: usize) -> usize {
        self.perm.iter().position(|&p| p == var).expect("variable in order")
    }
}

/// `do(V_A = a)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Intervention {
    targets: Vec<usize>,
    values: Vec<f64>,
}

impl Intervention {
    pub fn new(targets: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if targets.len() != values.len() {
            return Err(ScmError::Intervention("targets and values differ in length".into()));
        }
        let unique: BTreeSet<_> = targets.iter().collect();
        if unique.len() != targets.len() {
            return Err(ScmError::Intervention(format!("duplicate targets in {targets:?}")));
        }
        Ok(Self { targets, values })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(target: usize, value: f64) -> Self {
        Self { targets: vec![target], values: vec![value] }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn value_of(&self, var: usize) -> Option<f64> {
        self.targets.iter().position(|&t| t == var).map(|k| self.values[k])
    }

    pub fn check(&self, d: usize) -> Result<()> {
        match self.targets.iter().find(|&&t| t >= d) {
            Some(t) => Err(ScmError::Intervention(format!("target {t} out of range for d={d}"))),
            None => Ok(()),
        }
    }
}

/// Point-evidence counterfactual query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualQuery {
    pub factual: Vec<f64>,
    pub intervention: Intervention,
    pub truth_cf: Option<Vec<f64>>,
}

impl CounterfactualQuery {
    pub fn new(factual: Vec<f64>, intervention: Intervention) -> Self {
        Self { factual, intervention, truth_cf: None }
    }
}

#[derive(Debug, Clone)]
pub struct TriangularScm {
    order: CausalOrder,
    /// Indexed by variable.
    mechanisms: Vec<Arc<dyn Mechanism>>,
    noise: ExogenousDistribution,
}

impl TriangularScm {
    pub fn new(order: CausalOrder, mechanisms: Vec<Arc<dyn Mechanism>>, noise: ExogenousDistribution) -> Result<Self> {
        let d = order.len();
        if mechanisms.len() != d {
            return Err(ScmError::Dimension { expected: d, got: mechanisms.len() });
        }
        if noise.dim() != d {
            return Err(ScmError::Dimension { expected: d, got: noise.dim() });
        }
        Ok(Self { order, mechanisms, noise })
    }

    /// SCM in the identity order.
    pub fn in_order(mechanisms: Vec<Arc<dyn Mechanism>>, noise: ExogenousDistribution) -> Result<Self> {
        Self::new(CausalOrder::identity(mechanisms.len()), mechanisms, noise)
    }

    pub fn d(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &CausalOrder {
        &self.order
    }

    pub fn mechanism(&self, var: usize) -> &Arc<dyn Mechanism> {
        &self.mechanisms[var]
    }

    pub fn mechanisms(&self) -> &[Arc<dyn Mechanism>] {
        &self.mechanisms
    }

    pub fn noise(&self) -> &ExogenousDistribution {
        &self.noise
    }

    /// Values of the variables preceding `var` in the causal order.
    pub fn context(&self, v: &[f64], var: usize) -> Vec<f64> {
        let pos = self.order.position(var);
        self.order.perm()[..pos].iter().map(|&p| v[p]).collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() {
            return Err(ScmError::Dimension { expected: self.d(), got: x.len() });
        }
        Ok(())
    }

    pub fn solve(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.intervene_sample(&Intervention::none(), u)
    }

    pub fn intervene_sample(&self, intervention: &Intervention, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        intervention.check(self.d())?;
        let mut v = vec![0.0; self.d()];
        let mut parents = Vec::with_capacity(self.d());
        for &var in self.order.perm() {
            v[var] = match intervention.value_of(var) {
                Some(a) => a,
                None => self.mechanisms[var].forward(&parents, u[var]),
            };
            parents.push(v[var]);
        }
        Ok(v)
    }

    pub fn abduct(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        let mut u = vec![0.0; self.d()];
        let mut parents = Vec::with_capacity(self.d());
        for &var in self.order.perm() {
            u[var] = self.mechanisms[var]
                .inverse(&parents, v[var])
                .ok_or(ScmError::Inversion { index: var, target: v[var] })?;
            parents.push(v[var]);
        }
        Ok(u)
    }

    pub fn counterfactual(&self, q: &CounterfactualQuery) -> Result<Vec<f64>> {
        self.check_dim(&q.factual)?;
        q.intervention.check(self.d())?;
        if q.intervention.is_empty() {
            return Ok(q.factual.clone());
        }
        let u = self.abduct(&q.factual)?;
        self.intervene_sample(&q.intervention, &u)
    }

    pub fn log_likelihood(&self, v: &[f64]) -> Result<f64> {
        let u = self.abduct(v)?;
        let mut total = 0.0;
        let mut parents = Vec::with_capacity(self.d());
        for &var in self.order.perm() {
            let du = self.mechanisms[var].partial_u(&parents, u[var]);
            if du == 0.0 || !du.is_finite() {
                return Err(ScmError::ZeroDerivative { index: var });
            }
            total += self.noise.coord(var).log_density(u[var]) - du.abs().ln();
            parents.push(v[var]);
        }
        Ok(total)
    }

    /// Draws `(u, v)` pairs by ancestral sampling.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Draws> {
        let mut us = Vec::with_capacity(n);
        let mut vs = Vec::with_capacity(n);
        for _ in 0..n {
            let u = self.noise.sample(rng);
            vs.push(self.solve(&u)?);
            us.push(u);
        }
        Ok((us, vs))
    }
}
