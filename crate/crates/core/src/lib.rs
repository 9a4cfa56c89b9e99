//! Constrained empirical-risk minimization by projection-gradient splitting.
//!
//! The projection onto a constraint set `{w : φ(w) ≤ η}` has no closed form
//! for most `φ`, so it is computed by successive projections onto the
//! intersection of two half-spaces that contain the set (see
//! [`projection`]). The outer loop in [`solver`] alternates a gradient step
//! on the risk from [`model`] with that approximate projection.

pub mod constraints;
pub mod data;
pub mod error;
pub mod model;
pub mod oracle;
pub mod projection;
pub mod solver;

pub use constraints::{ConstraintKind, ConstraintSpec, Edge, EdgeSign, FeatureGraph};
pub use error::{Error, Result};
pub use model::{LossKind, RiskModel, Task};
pub use projection::{
    haugazeau_q, project_level_set, project_level_set_multi, project_level_set_multi_observed,
    project_level_set_observed, subgradient_projection, Projection, ProjectionOptions,
    ProjectionOutcome, ProjectionStatus,
};
pub use solver::{
    solve, solve_multi, solve_multi_observed, solve_observed, solve_path, ErrorSchedule,
    IterationRecord, PathPoint, SolverConfig, SolverResult, StepPolicy, StopReason,
};
