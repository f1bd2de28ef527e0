//! Synthetic SCM generators: monotone, threshold-flip, smooth-flip and calibrated bridge families,
//! the sign-flip counterexample pair, a hidden-phase demo, and non-monotonicity scores.

pub mod config;
pub mod dataset;
pub mod ei;
pub mod error;
pub mod family;
pub mod hidden_phase;

pub use config::{FamilyTag, MechanismFamily, SweepConfig};
pub use dataset::{
    nms_composite, nms_synth, sample_dataset, write_dataset_dir, DatasetBundle, DatasetMetadata, Matrix,
};
pub use ei::{random_ei_pair, random_maps};
pub use error::{Result, ZooError};
pub use family::{
    calibrate_bridge, calibrate_bridge_with_noise, counterexample_truth, make_counterexample_pair, make_mechanisms,
    make_scm, response, response_inverse, response_slope, scm_from_mechanisms, Gate, OrientationTruth, ZooMechanism,
    CALIBRATION_SIZE, RESPONSE_BEND, SCALE_FLOOR, SMOOTH_EPS,
};
pub use hidden_phase::{logistic, make_hidden_phase_scm, HiddenPhaseDemo, SegmentedSurrogate};
