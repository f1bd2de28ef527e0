//! Sweeps, bridge runs, the counterexample demo and the sampler demo, with CSV records, markdown
//! reports, SVG figures and hashed manifests.

pub mod analysis;
pub mod bridge;
pub mod checks;
pub mod config;
pub mod counterexample;
pub mod error;
pub mod manifest;
pub mod records;
pub mod report;
pub mod sampler_demo;
pub mod svg;
pub mod sweep;

pub use bridge::{run_bridge, BridgeSpec};
pub use config::{GridConfig, RunSpec, TrainOverrides};
pub use error::{HarnessError, Result};
pub use manifest::{validate_manifest, RunManifest};
pub use records::{read_csv, BridgeRecord, SweepRecord, MODELS};
pub use sweep::run_sweep;
