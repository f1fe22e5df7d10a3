//! Finite-volume simulator for a two-dimensional chemotaxis-fluid system with
//! weakly singular sensitivity `chi / c^k` and sub-logistic damping
//! `mu n^2 / ln^eta(n + e)`, coupled to incompressible Navier-Stokes flow.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`model`]: mesh, fields, constants and state
//! * [`operators`], [`solvers`]: discrete operators and CG solvers
//! * [`stepper`]: one split time step with adaptive `dt`
//! * [`diagnostics`]: the tracked integral functionals
//! * [`lemmas`]: standalone checks of the supporting inequalities
//! * [`harness`]: configuration, runs, experiments, checkpoints
//! * [`reporting`]: CSV post-processing into verdicts

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod grid;
pub mod harness;
pub mod lemmas;
pub mod model;
pub mod operators;
pub mod reporting;
pub mod solvers;
pub mod stepper;

pub use error::{Result, SimError};
pub use grid::{BoundaryKind, Grid, ScalarField, VectorField};
pub use model::{Forcing, Params, SimState};
pub use solvers::SolverConfig;
pub use stepper::{StepConfig, StepReport, Stepper};
