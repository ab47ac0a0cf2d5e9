//! Reproducibility surface for Block Words goal inference: scenario and
//! human-data files, the experiment runner, grid search and result export.

pub mod config;
pub mod export;
pub mod fit;
pub mod fsutil;
pub mod human;
pub mod runner;
pub mod scenario;
pub mod stats;

pub use config::{ModelParams, WordModels};
pub use runner::{run_experiment, run_method, run_one, MethodSpec, RunRecord};
pub use scenario::{load_dir, load_scenario, save_scenario, Condition, Scenario};
