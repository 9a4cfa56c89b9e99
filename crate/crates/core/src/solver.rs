//! Projection-gradient iterations `w_{n+1} ≈ P_C(w_n - γ ∇Φ(w_n))`, with
//! the projection computed by the outer-approximation routine.

use ndarray::{Array1, ArrayRef1};
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSpec;
use crate::error::{check_dim, Error, Result};
use crate::model::RiskModel;
use crate::projection::{
    project_level_set, project_level_set_multi, Projection, ProjectionOptions,
};

/// Smallest margin kept from the ends of the admissible band `]0, 2/β[`.
pub const STEP_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepPolicy {
    /// `γ = c / β` with `c ∈ [ε, 2 - ε]`.
    ConstantOverBeta(f64),
    /// A fixed step, used as given.
    Fixed(f64),
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::ConstantOverBeta(1.0)
    }
}

/// Tightens the inner loop so that projection errors are summable: at outer
/// iteration `n` the projection runs until its violation is at most
/// `scale / (n + 1)^exponent`, within `max_inner_iters`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSchedule {
    pub scale: f64,
    pub exponent: f64,
    pub max_inner_iters: usize,
}

impl Default for ErrorSchedule {
    fn default() -> Self {
        Self { scale: 1e-3, exponent: 1.1, max_inner_iters: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step_policy: StepPolicy,
    pub projection: ProjectionOptions,
    pub max_outer_iters: usize,
    /// Stop when `‖w_{n+1} - w_n‖ ≤ tol · max(1, ‖w_{n+1}‖)`.
    pub rel_change_tolerance: f64,
    /// Stop as soon as `‖w‖₀ ≤ target` after an iteration.
    pub target_l0: Option<usize>,
    /// Coordinates with `|w_i|` below this count as zero in `‖w‖₀`.
    pub zero_threshold: f64,
    /// Starting point; the origin when absent.
    pub initial_w: Option<Vec<f64>>,
    pub error_schedule: Option<ErrorSchedule>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_policy: StepPolicy::default(),
            projection: ProjectionOptions::default(),
            max_outer_iters: 10_000,
            rel_change_tolerance: 1e-8,
            target_l0: None,
            zero_threshold: 1e-10,
            initial_w: None,
            error_schedule: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        match self.step_policy {
            StepPolicy::ConstantOverBeta(c) => {
                if !(STEP_MARGIN..=2.0 - STEP_MARGIN).contains(&c) {
                    return Err(Error::InvalidConfig(format!(
                        "step factor {c} outside [{STEP_MARGIN}, {}]",
                        2.0 - STEP_MARGIN
                    )));
                }
            }
            StepPolicy::Fixed(g) => {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidConfig(format!("step {g} must be positive")));
                }
            }
        }
        self.projection.validate()?;
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig("max_outer_iters must be at least 1".into()));
        }
        if !(self.rel_change_tolerance >= 0.0) || !(self.zero_threshold >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be nonnegative".into()));
        }
        if let Some(s) = &self.error_schedule {
            if !(s.scale > 0.0 && s.exponent > 1.0 && s.max_inner_iters > 0) {
                return Err(Error::InvalidConfig(
                    "error schedule needs scale > 0, exponent > 1, a positive budget".into(),
                ));
            }
        }
        Ok(())
    }

    fn step(&self, beta: f64) -> f64 {
        match self.step_policy {
            StepPolicy::ConstantOverBeta(c) => c / beta,
            StepPolicy::Fixed(g) => g,
        }
    }

    fn projection_at(&self, n: usize) -> ProjectionOptions {
        match &self.error_schedule {
            None => self.projection,
            Some(s) => ProjectionOptions {
                max_inner_iters: s.max_inner_iters,
                feasibility_tolerance: s.scale / ((n + 1) as f64).powf(s.exponent),
                distance_tolerance: self.projection.distance_tolerance,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIters,
    TargetSparsity,
}

/// State after outer iteration `iteration` (`0` is the starting point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub risk: f64,
    /// `φ(w_n)`; with several constraints, the first one.
    pub constraint_value: f64,
    pub nonzeros: usize,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub w_final: Array1<f64>,
    pub trace: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub step: f64,
    pub beta: f64,
}

impl SolverResult {
    pub fn outer_iterations(&self) -> usize {
        self.trace.len() - 1
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.trace.last().expect("trace holds the starting point")
    }
}

pub fn count_nonzeros(w: &ArrayRef1<f64>, zero_threshold: f64) -> usize {
    w.iter().filter(|v| v.abs() >= zero_threshold).count()
}

enum Feasible<'a> {
    Single(&'a ConstraintSpec),
    Multi(&'a [ConstraintSpec], &'a [f64]),
}

impl Feasible<'_> {
    fn primary(&self) -> &ConstraintSpec {
        match self {
            Feasible::Single(c) => c,
            Feasible::Multi(cs, _) => &cs[0],
        }
    }

    fn project(&self, p0: &ArrayRef1<f64>, opts: &ProjectionOptions) -> Result<Projection> {
        match self {
            Feasible::Single(c) => project_level_set(c, p0, opts),
            Feasible::Multi(cs, ws) => project_level_set_multi(cs, ws, p0, opts),
        }
    }
}

/// Minimizes the model risk over `{w : φ(w) ≤ η}`.
pub fn solve(model: &RiskModel, constraint: &ConstraintSpec, config: &SolverConfig) -> Result<SolverResult> {
    run(model, Feasible::Single(constraint), config, |_, _| {})
}

/// As [`solve`], calling `observe(n, w_n)` for every iterate including `w_0`.
pub fn solve_observed(
    model: &RiskModel,
    constraint: &ConstraintSpec,
    config: &SolverConfig,
    observe: impl FnMut(usize, &Array1<f64>),
) -> Result<SolverResult> {
    run(model, Feasible::Single(constraint), config, observe)
}

/// Minimizes the model risk over the intersection of several level sets,
/// projecting with the weighted extrapolated scheme.
pub fn solve_multi(
    model: &RiskModel,
    constraints: &[ConstraintSpec],
    weights: &[f64],
    config: &SolverConfig,
) -> Result<SolverResult> {
    solve_multi_observed(model, constraints, weights, config, |_, _| {})
}

pub fn solve_multi_observed(
    model: &RiskModel,
    constraints: &[ConstraintSpec],
    weights: &[f64],
    config: &SolverConfig,
    observe: impl FnMut(usize, &Array1<f64>),
) -> Result<SolverResult> {
    if constraints.is_empty() {
        return Err(Error::InvalidConfig("at least one constraint is required".into()));
    }
    run(model, Feasible::Multi(constraints, weights), config, observe)
}

fn run(
    model: &RiskModel,
    feasible: Feasible<'_>,
    config: &SolverConfig,
    mut observe: impl FnMut(usize, &Array1<f64>),
) -> Result<SolverResult> {
    config.validate()?;
    let d = model.features();
    let mut w = match &config.initial_w {
        Some(w0) => {
            check_dim(d, w0.len())?;
            Array1::from(w0.clone())
        }
        None => Array1::zeros(d),
    };
    let beta = model.lipschitz_bound();
    let step = config.step(beta);
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidData(format!("degenerate step {step} (beta = {beta})")));
    }

    let record = |n: usize, w: &Array1<f64>, risk: f64, inner: usize| -> Result<IterationRecord> {
        Ok(IterationRecord {
            iteration: n,
            risk,
            constraint_value: feasible.primary().value(w)?,
            nonzeros: count_nonzeros(w, config.zero_threshold),
            inner_iterations: inner,
        })
    };

    let mut risk = model.risk_value(&w)?;
    if !risk.is_finite() {
        return Err(Error::NonFinite { what: "risk", iteration: 0 });
    }
    observe(0, &w);
    let mut trace = vec![record(0, &w, risk, 0)?];

    let mut stop_reason = StopReason::MaxIters;
    for n in 0..config.max_outer_iters {
        let grad = model.risk_gradient(&w)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { what: "gradient", iteration: n });
        }
        let mut v = w.clone();
        v.scaled_add(-step, &grad);
        let projection = feasible.project(&v, &config.projection_at(n))?;
        let next = projection.point;

        risk = model.risk_value(&next)?;
        if !risk.is_finite() {
            return Err(Error::NonFinite { what: "risk", iteration: n + 1 });
        }
        let delta = &next - &w;
        let change = delta.dot(&delta).sqrt();
        let size = next.dot(&next).sqrt();
        w = next;
        observe(n + 1, &w);
        let rec = record(n + 1, &w, risk, projection.status.iterations_used)?;
        trace.push(rec);

        if config.target_l0.is_some_and(|t| rec.nonzeros <= t) {
            stop_reason = StopReason::TargetSparsity;
            break;
        }
        if change <= config.rel_change_tolerance * size.max(1.0) {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok(SolverResult { w_final: w, trace, stop_reason, step, beta })
}

/// One solve on a grid of bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub eta: f64,
    pub result: SolverResult,
}

/// Solves for every `η` in a monotone grid, warm-starting each run from the
/// previous solution.
pub fn solve_path(
    model: &RiskModel,
    constraint: &ConstraintSpec,
    eta_grid: &[f64],
    config: &SolverConfig,
) -> Result<Vec<PathPoint>> {
    let ascending = eta_grid.windows(2).all(|p| p[0] <= p[1]);
    let descending = eta_grid.windows(2).all(|p| p[0] >= p[1]);
    if !(ascending || descending) {
        return Err(Error::InvalidConfig("eta grid must be sorted".into()));
    }
    let mut config = config.clone();
    let mut path = Vec::with_capacity(eta_grid.len());
    for &eta in eta_grid {
        let spec = constraint.with_eta(eta)?;
        let result = solve(model, &spec, &config)?;
        config.initial_w = Some(result.w_final.to_vec());
        path.push(PathPoint { eta, result });
    }
    Ok(path)
}
