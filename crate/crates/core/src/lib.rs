//! Stationary diffusion on star-shaped metric graphs.
//!
//! The crate solves the stage problems on a star with `n` unit edges that
//! share one interior center vertex, forms per-group Cesàro averages of the
//! edge solutions, solves the upscaled problem on the `I`-edge star and
//! provides the diagnostics used to compare the two.

pub mod analysis;
pub mod config;
pub mod error;
pub mod femsolve;
pub mod forcing;
pub mod output;
pub mod quadrature;
pub mod runner;
pub mod stargraph;
pub mod upscale;

pub use error::{Error, Result};
pub use femsolve::{assemble, solve, ArrowheadSystem, LoadRule, StageSolution};
pub use forcing::{ExampleId, FieldParams, ForcingField, GridFunction, Orientation};
pub use stargraph::{build_stage, CoefficientSource, GroupStats, StarStage};
pub use upscale::{solve_upscaled, HomogenizedSolution, UpscaledProblem};
