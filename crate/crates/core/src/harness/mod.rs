//! Scenario configuration, experiment orchestration and persistence.

pub mod checkpoint;
pub mod config;
pub mod convergence;
pub mod experiments;
pub mod presets;
pub mod run;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::{load_config, ForcingSpec, GridSpec, InitialSpec, PotentialSpec, RunSpec, ScenarioConfig};
pub use convergence::{convergence_study, ConvergenceReport, MmsOptions};
pub use experiments::{absorbing_experiment, sweep, AbsorbingReport, SweepMember, TailStats};
pub use run::{run_from, run_scenario, RunOutcome, RunResult, RunSummary};
