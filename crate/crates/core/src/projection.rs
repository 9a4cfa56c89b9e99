//! Projection onto convex lower level sets by outer approximation.
//!
//! The exact projection of `p0` onto `C = {p : φ(p) ≤ η}` is replaced by a
//! sequence of projections of `p0` onto `H(p0, p_k) ∩ H(p_k, p_{k+1/2})`,
//! where `p_{k+1/2}` is the subgradient projection of `p_k`. Both half-spaces
//! contain `C`, each step has a closed form, and `p_k → P_C(p0)`.
//!
//! `H(x, y) = {p : ⟨p - y, x - y⟩ ≤ 0}`; when `x ≠ y` it is the half-space
//! onto which `x` projects to `y`, and `H(x, x)` is the whole space.

use ndarray::{Array1, ArrayRef1};
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSpec;
use crate::error::{check_dim, Error, Result};

/// Inner-loop controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Iteration budget `K`.
    pub max_inner_iters: usize,
    /// Stop once `φ(p_k) - η ≤ feasibility_tolerance`. Zero means only an
    /// actual hit of the level set terminates early.
    pub feasibility_tolerance: f64,
    /// Stop once `‖p_{k+1} - p_k‖ ≤ tolerance`.
    pub distance_tolerance: Option<f64>,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { max_inner_iters: 50, feasibility_tolerance: 0.0, distance_tolerance: None }
    }
}

impl ProjectionOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidConfig("max_inner_iters must be at least 1".into()));
        }
        if !(self.feasibility_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("feasibility_tolerance must be >= 0".into()));
        }
        if let Some(t) = self.distance_tolerance {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig("distance_tolerance must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionOutcome {
    /// The iterate lies in the level set, so it is the exact projection.
    FeasibleHit,
    /// A configured feasibility or distance tolerance was met.
    ToleranceMet,
    /// The iteration budget ran out outside the level set.
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionStatus {
    pub outcome: ProjectionOutcome,
    pub iterations_used: usize,
    /// `max(φ(p) - η, 0)` at the returned point (worst constraint when
    /// several are projected onto jointly).
    pub final_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Array1<f64>,
    pub status: ProjectionStatus,
}

/// Projection of `x` onto `H(x, y) ∩ H(y, z)`.
///
/// With `a = x - y`, `b = y - z`, `χ = ⟨a, b⟩`, `μ = ‖a‖²`, `ν = ‖b‖²` and
/// `ρ = μν - χ²`:
///
/// * `ρ = 0, χ ≥ 0`: `z`
/// * `ρ > 0, χν ≥ ρ`: `x - (1 + χ/ν) b`
/// * `ρ > 0, χν < ρ`: `y + (ν/ρ)(χ a - μ b)`
///
/// `ρ` is treated as zero when `|ρ| ≤ 64 ε μ ν`. `ρ = 0` with `χ < 0` means
/// the half-spaces are disjoint.
pub fn haugazeau_q(
    x: &ArrayRef1<f64>,
    y: &ArrayRef1<f64>,
    z: &ArrayRef1<f64>,
) -> Result<Array1<f64>> {
    check_dim(x.len(), y.len())?;
    check_dim(x.len(), z.len())?;
    let a = x - y;
    let b = y - z;
    let chi = a.dot(&b);
    let mu = a.dot(&a);
    let nu = b.dot(&b);
    let mut rho = mu * nu - chi * chi;
    if rho.abs() <= 64.0 * f64::EPSILON * mu * nu {
        rho = 0.0;
    }

    if rho <= 0.0 {
        if chi >= 0.0 {
            Ok(z.to_owned())
        } else {
            Err(Error::InconsistentHalfSpaces)
        }
    } else if chi * nu >= rho {
        Ok(x - b * (1.0 + chi / nu))
    } else {
        let step = (a * chi - b * mu) * (nu / rho);
        Ok(y + step)
    }
}

/// Subgradient projection of `p` onto `{φ ≤ η}`: `p` itself when feasible,
/// otherwise `p + (η - φ(p)) s / ‖s‖²` for `s ∈ ∂φ(p)`.
pub fn subgradient_projection(spec: &ConstraintSpec, p: &ArrayRef1<f64>) -> Result<Array1<f64>> {
    let violation = spec.value(p)? - spec.eta();
    subgradient_step(spec, p, violation)
}

fn subgradient_step(spec: &ConstraintSpec, p: &ArrayRef1<f64>, violation: f64) -> Result<Array1<f64>> {
    if violation <= 0.0 {
        return Ok(p.to_owned());
    }
    let s = spec.subgradient(p)?;
    let norm_sq = s.dot(&s);
    if norm_sq == 0.0 {
        return Err(Error::InfeasibleConstraint { violation });
    }
    Ok(p + s * (-violation / norm_sq))
}

/// Projects `p0` onto `{φ ≤ η}` with the outer-approximation routine.
pub fn project_level_set(
    spec: &ConstraintSpec,
    p0: &ArrayRef1<f64>,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    project_level_set_observed(spec, p0, opts, |_, _| {})
}

/// As [`project_level_set`], calling `observe(k, p_k)` for every new iterate
/// `k ≥ 1`.
pub fn project_level_set_observed(
    spec: &ConstraintSpec,
    p0: &ArrayRef1<f64>,
    opts: &ProjectionOptions,
    mut observe: impl FnMut(usize, &Array1<f64>),
) -> Result<Projection> {
    if spec.is_origin_only() {
        spec.value(p0)?;
        return Ok(snap_to_origin(p0, &mut observe));
    }
    run_outer_approximation(
        p0,
        opts,
        |p| Ok(spec.value(p)? - spec.eta()),
        |p, violation| subgradient_step(spec, p, violation),
        observe,
    )
}

/// Projects `p0` onto the intersection of several level sets.
///
/// Each iteration takes a weighted average of the per-constraint
/// subgradient projections, extrapolates it by
/// `L = Σ ω_j ‖p_j - p‖² / ‖Σ ω_j p_j - p‖²`, and finishes with the same
/// two-half-space step as the single-constraint routine. With one
/// constraint `L = 1` and the two routines coincide.
pub fn project_level_set_multi(
    constraints: &[ConstraintSpec],
    weights: &[f64],
    p0: &ArrayRef1<f64>,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    project_level_set_multi_observed(constraints, weights, p0, opts, |_, _| {})
}

pub fn project_level_set_multi_observed(
    constraints: &[ConstraintSpec],
    weights: &[f64],
    p0: &ArrayRef1<f64>,
    opts: &ProjectionOptions,
    mut observe: impl FnMut(usize, &Array1<f64>),
) -> Result<Projection> {
    validate_weights(constraints.len(), weights)?;
    if constraints.iter().any(ConstraintSpec::is_origin_only) {
        // every functional vanishes at 0, so the intersection is {0}
        for c in constraints {
            c.value(p0)?;
        }
        return Ok(snap_to_origin(p0, &mut observe));
    }
    let worst_violation = |p: &ArrayRef1<f64>| -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for c in constraints {
            worst = worst.max(c.value(p)? - c.eta());
        }
        Ok(worst)
    };
    let extrapolated_step = |p: &ArrayRef1<f64>, worst: f64| -> Result<Array1<f64>> {
        let mut average = Array1::<f64>::zeros(p.len());
        let mut spread = 0.0;
        for (c, &omega) in constraints.iter().zip(weights) {
            let pj = subgradient_projection(c, p)?;
            let diff = &*pj - p;
            spread += omega * diff.dot(&diff);
            average.scaled_add(omega, &pj);
        }
        let direction = average - p;
        let denom = direction.dot(&direction);
        if spread == 0.0 {
            // every p_j equals p: nothing is violated
            return Ok(p.to_owned());
        }
        if denom <= f64::EPSILON * spread {
            // For any c in the intersection ⟨c - p, direction⟩ ≥ spread > 0,
            // so a vanishing direction certifies an empty intersection.
            return Err(Error::InfeasibleConstraint { violation: worst });
        }
        let extrapolation = spread / denom;
        Ok(p + direction * extrapolation)
    };
    run_outer_approximation(p0, opts, worst_violation, extrapolated_step, observe)
}

fn validate_weights(count: usize, weights: &[f64]) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidConfig("at least one constraint is required".into()));
    }
    if weights.len() != count {
        return Err(Error::InvalidConfig(format!(
            "{} weights given for {count} constraints",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
        return Err(Error::InvalidConfig("weights must lie in ]0, 1]".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 * count as f64 {
        return Err(Error::InvalidConfig(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn snap_to_origin(p0: &ArrayRef1<f64>, observe: &mut impl FnMut(usize, &Array1<f64>)) -> Projection {
    let origin = Array1::zeros(p0.len());
    let moved = p0.iter().any(|&v| v != 0.0);
    if moved {
        observe(1, &origin);
    }
    Projection {
        point: origin,
        status: ProjectionStatus {
            outcome: ProjectionOutcome::FeasibleHit,
            iterations_used: usize::from(moved),
            final_violation: 0.0,
        },
    }
}

/// Shared driver: `violation(p)` returns `φ(p) - η` (or the worst over
/// several constraints) and `half_step(p, violation)` returns `p_{k+1/2}`.
fn run_outer_approximation(
    p0: &ArrayRef1<f64>,
    opts: &ProjectionOptions,
    mut violation: impl FnMut(&ArrayRef1<f64>) -> Result<f64>,
    mut half_step: impl FnMut(&ArrayRef1<f64>, f64) -> Result<Array1<f64>>,
    mut observe: impl FnMut(usize, &Array1<f64>),
) -> Result<Projection> {
    opts.validate()?;
    let classify = |v: f64| {
        if v <= 0.0 {
            Some(ProjectionOutcome::FeasibleHit)
        } else if v <= opts.feasibility_tolerance {
            Some(ProjectionOutcome::ToleranceMet)
        } else {
            None
        }
    };

    let mut p = p0.to_owned();
    for k in 0..opts.max_inner_iters {
        let v = violation(&p)?;
        if let Some(outcome) = classify(v) {
            return Ok(Projection {
                point: p,
                status: ProjectionStatus { outcome, iterations_used: k, final_violation: v.max(0.0) },
            });
        }
        let half = half_step(&p, v)?;
        let next = haugazeau_q(p0, &p, &half)?;
        observe(k + 1, &next);

        let moved = opts.distance_tolerance.map(|tol| {
            let d = &next - &p;
            d.dot(&d).sqrt() <= tol
        });
        p = next;
        if moved == Some(true) {
            let v = violation(&p)?;
            let outcome = classify(v).unwrap_or(ProjectionOutcome::ToleranceMet);
            return Ok(Projection {
                point: p,
                status: ProjectionStatus {
                    outcome,
                    iterations_used: k + 1,
                    final_violation: v.max(0.0),
                },
            });
        }
    }

    let v = violation(&p)?;
    let outcome = classify(v).unwrap_or(ProjectionOutcome::BudgetExhausted);
    Ok(Projection {
        point: p,
        status: ProjectionStatus {
            outcome,
            iterations_used: opts.max_inner_iters,
            final_violation: v.max(0.0),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{ConstraintKind, FeatureGraph};
    use ndarray::array;

    fn close(a: &Array1<f64>, b: &Array1<f64>, tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn q_degenerate_triple() {
        let x = array![1.0, 1.0];
        assert_eq!(haugazeau_q(&x, &x, &x).unwrap(), x);
    }

    #[test]
    fn q_case_three() {
        // {p1 + p2 >= 2, p2 <= 0} from the origin: (2, 0)
        let q = haugazeau_q(&array![0.0, 0.0], &array![1.0, 1.0], &array![1.0, 0.0]).unwrap();
        assert!(close(&q, &array![2.0, 0.0], 1e-15));
    }

    #[test]
    fn q_case_two() {
        // {p1 >= 1, p2 <= p1 - 3} from the origin: (1.5, -1.5)
        let q = haugazeau_q(&array![0.0, 0.0], &array![1.0, 0.0], &array![2.0, -1.0]).unwrap();
        assert!(close(&q, &array![1.5, -1.5], 1e-15));
    }

    #[test]
    fn q_disjoint_half_spaces() {
        // H(x,y) = {p1 >= 1}, H(y,z) = {p1 <= 0}
        let r = haugazeau_q(&array![0.0, 0.0], &array![1.0, 0.0], &array![0.0, 0.0]);
        assert!(matches!(r, Err(Error::InconsistentHalfSpaces)));
    }

    #[test]
    fn subgradient_projection_examples() {
        let spec = ConstraintSpec::l1(1.0).unwrap();
        assert_eq!(subgradient_projection(&spec, &array![2.0, 0.0]).unwrap(), array![1.0, 0.0]);
        let inside = array![0.25, -0.5];
        assert_eq!(subgradient_projection(&spec, &inside).unwrap(), inside);

        let spec = ConstraintSpec::l1(2.0).unwrap();
        let r = subgradient_projection(&spec, &array![3.0, 1.0]).unwrap();
        assert!(close(&r, &array![2.0, 0.0], 1e-15));

        // the step crosses an orthant boundary, so one step is not enough
        let spec = ConstraintSpec::l1(1.0).unwrap();
        let r = subgradient_projection(&spec, &array![3.0, 1.0]).unwrap();
        assert!(close(&r, &array![1.5, -0.5], 1e-15));
        assert_eq!(spec.value(&r).unwrap(), 2.0);
    }

    #[test]
    fn interior_point_is_returned_untouched() {
        let spec = ConstraintSpec::l1(5.0).unwrap();
        let p0 = array![1.0, 1.0];
        let proj = project_level_set(&spec, &p0, &ProjectionOptions::default()).unwrap();
        assert_eq!(proj.point, p0);
        assert_eq!(proj.status.outcome, ProjectionOutcome::FeasibleHit);
        assert_eq!(proj.status.iterations_used, 0);
        assert_eq!(proj.status.final_violation, 0.0);
    }

    #[test]
    fn l1_ball_from_three_one() {
        let spec = ConstraintSpec::l1(2.0).unwrap();
        let opts = ProjectionOptions { max_inner_iters: 20, ..Default::default() };
        let proj = project_level_set(&spec, &array![3.0, 1.0], &opts).unwrap();
        assert!(close(&proj.point, &array![2.0, 0.0], 1e-6));
        assert!(proj.status.iterations_used <= 20);
    }

    #[test]
    fn affine_piece_is_exact_in_one_step() {
        let g = FeatureGraph::unsigned(2, [(0, 1)]).unwrap();
        let spec = ConstraintSpec::new(ConstraintKind::PairwiseDiff, Some(g), 1.0).unwrap();
        let proj = project_level_set(&spec, &array![3.0, 0.0], &ProjectionOptions::default()).unwrap();
        assert!(close(&proj.point, &array![2.0, 1.0], 1e-15));
        assert_eq!(proj.status.iterations_used, 1);
        assert_eq!(proj.status.outcome, ProjectionOutcome::FeasibleHit);
    }

    #[test]
    fn budget_exhaustion_reports_violation() {
        let spec = ConstraintSpec::l1(1.0).unwrap();
        let p0 = array![3.0, 2.0, 1.0, 0.5, -4.0];
        let opts = ProjectionOptions { max_inner_iters: 1, ..Default::default() };
        let proj = project_level_set(&spec, &p0, &opts).unwrap();
        assert_eq!(proj.status.iterations_used, 1);
        if proj.status.outcome == ProjectionOutcome::BudgetExhausted {
            assert!(proj.status.final_violation > 0.0);
        }
    }

    #[test]
    fn zero_budget_is_rejected() {
        let spec = ConstraintSpec::l1(1.0).unwrap();
        let opts = ProjectionOptions { max_inner_iters: 0, ..Default::default() };
        assert!(matches!(
            project_level_set(&spec, &array![3.0], &opts),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn weights_are_validated() {
        let c = ConstraintSpec::l1(1.0).unwrap();
        let p0 = array![3.0, 1.0];
        let opts = ProjectionOptions::default();
        assert!(project_level_set_multi(&[c.clone()], &[0.5], &p0, &opts).is_err());
        assert!(project_level_set_multi(&[c.clone(), c.clone()], &[1.0], &p0, &opts).is_err());
        assert!(project_level_set_multi(&[], &[], &p0, &opts).is_err());
        assert!(project_level_set_multi(&[c.clone(), c], &[0.5, 0.5], &p0, &opts).is_ok());
    }

    #[test]
    fn duplicated_constraint_has_the_same_limit() {
        let c = ConstraintSpec::l1(2.0).unwrap();
        let p0 = array![3.0, 1.0, -0.5];
        let opts = ProjectionOptions { max_inner_iters: 200, ..Default::default() };
        let single = project_level_set(&c, &p0, &opts).unwrap();
        let double = project_level_set_multi(&[c.clone(), c], &[0.5, 0.5], &p0, &opts).unwrap();
        assert!(close(&single.point, &double.point, 1e-9));
    }
}
