//! Config-driven experiments: run solvers and simulators, compare the
//! resulting densities and write plot-ready CSV files.

mod compare;
mod config;
mod experiments;
mod output;

pub use compare::{compare_densities, ComparisonReport, Profile};
pub use config::{bundled_config, bundled_configs, ExperimentConfig, ExperimentKind};
pub use experiments::{
    binned_spread, relative_linf, run_experiment, transient_model, transverse_chi2, wall_excess, Check, ExperimentReport,
    SweepPoint,
};
pub use output::CsvOut;
