//! Experiment runner library behind the `funnet` binary: configuration,
//! simulation and stream drivers, gradient checking and data export.

pub mod config;
pub mod experiments;

pub use config::{ExperimentConfig, ExperimentKind, KnnStandardize};
pub use experiments::{
    manifest_string, run_export, run_gradcheck, run_simulation, run_stream, SimulationOutputs,
    StreamOutputs,
};
