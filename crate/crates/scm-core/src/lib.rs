//! Triangular structural causal models with exact counterfactuals.
//!
//! Variables are indexed `0..d`; a [`CausalOrder`] fixes the evaluation sequence and each mechanism sees
//! the values of the variables before it in that order.

pub mod bijection;
pub mod error;
pub mod mechanism;
pub mod noise;
pub mod rng;
pub mod scm;
pub mod transport;

pub use bijection::{AffineMap, Bijection, CubicMap, SinhMap};
pub use error::{Result, ScmError};
pub use mechanism::{bisect_inverse, sgn, FnMechanism, LinearMechanism, Mechanism, Reparametrized, SignGateMechanism};
pub use noise::{ExogenousDistribution, Noise, NoiseFamily};
pub use scm::{CausalOrder, CounterfactualQuery, Intervention, TriangularScm};
pub use transport::{
    inverse_transport, ks_critical, ks_statistic, observational_equivalence_check, reparametrize, transport_variation,
    EquivalenceReport, KsMarginal,
};
