//! Random exogenously isomorphic pairs built on zoo SCMs.

use std::sync::Arc;

use rand::Rng as _;
use scm_core::rng;
use scm_core::{reparametrize, AffineMap, Bijection, CubicMap, SinhMap, TriangularScm};

use crate::config::{MechanismFamily, SweepConfig};
use crate::error::Result;
use crate::family::make_scm;

/// One random strictly monotone map per coordinate, mixing affine, cubic and sinh shapes and both
/// orientations.
pub fn random_maps(d: usize, seed: u64) -> Vec<Arc<dyn Bijection>> {
    let mut r = rng::stream(seed, "ei-maps");
    (0..d)
        .map(|k| -> Arc<dyn Bijection> {
            let flip = r.random::<bool>();
            match k % 3 {
                0 => Arc::new(AffineMap {
                    scale: r.random_range(0.5..2.0) * if flip { -1.0 } else { 1.0 },
                    offset: r.random_range(-0.5..0.5),
                }),
                1 => Arc::new(CubicMap { a: r.random_range(0.5..1.5), b: r.random_range(0.05..0.5), flip }),
                _ => Arc::new(SinhMap { a: r.random_range(0.3..1.0), c: r.random_range(0.5..2.0), flip }),
            }
        })
        .collect()
}

/// A flip-family zoo SCM and its partner under a random coordinate-wise reparametrization.
pub fn random_ei_pair(seed: u64) -> Result<(TriangularScm, TriangularScm)> {
    let mut r = rng::stream(seed, "ei-pair");
    let families =
        [MechanismFamily::global_monotone(), MechanismFamily::threshold_flip(), MechanismFamily::smooth_flip()];
    let family = families[r.random_range(0..families.len())];
    let d = [3usize, 4, 5][r.random_range(0..3)];
    let noise = scm_core::NoiseFamily::ALL[r.random_range(0..4)];
    let cfg = SweepConfig::new(family, noise, d, 1000, seed)?;
    let (a, _) = make_scm(&cfg)?;
    let b = reparametrize(&a, random_maps(d, seed))?;
    Ok((a, b))
}
