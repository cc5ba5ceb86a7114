//! Experiment runner for layered billiard scattering.
//!
//! Wraps the `no_std` core with rayon drivers, a JSON configuration, CSV and
//! JSON reports and the `weyl-scatter` command line.

pub mod commands;
pub mod config;
pub mod parallel;
pub mod report;

pub use config::{ConfigError, Estimator, Experiment, TubeMode};
pub use report::{ScatterRow, VolumeRow};
