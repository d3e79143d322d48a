//! Simulation harness: the pmf catalog, seeded sampling, the two Monte Carlo
//! studies and their CSV/JSON output.

pub mod catalog;
pub mod experiment;
pub mod output;
pub mod sampling;

pub use catalog::{catalog, resolve_pmf, CATALOG_IDS};
pub use experiment::{
    convergence_experiment, knot_capture_experiment, ConvergenceReport, ExperimentConfig, GridSpec,
    KnotCaptureReport,
};
pub use output::Manifest;
pub use sampling::draw_sample;
