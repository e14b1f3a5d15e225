//! Experiment front end for the `pint-core` solvers: declarative run
//! configuration, figure presets, CSV/SVG artifact writing, and a threaded
//! frequency executor. The binary in `main.rs` is a thin argument layer over
//! this library so integration tests can drive everything in-process.

pub mod config;
pub mod exec;
pub mod presets;
pub mod runner;
pub mod svg;

pub use config::{CliError, ExperimentConfig, MethodSpec, ProblemSpec, Window};
pub use exec::ThreadPoolExecutor;
pub use presets::{preset, preset_names, Preset, RegionConfig};
