//! Independent reference computations for tests and acceptance runs.
//!
//! Nothing here is used by the production solver path. The exact ℓ¹-ball
//! projection, the half-space enumeration and the grid search exist so the
//! outer-approximation routines can be checked against answers obtained by
//! unrelated means.

use ndarray::{Array1, ArrayRef1};
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintKind, ConstraintSpec};
use crate::error::{check_dim, Error, Result};
use crate::model::RiskModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    SortThreshold,
    HalfSpaceEnumeration,
    GridRefinement,
    CentralDifference,
    ExactProjectedGradient,
}

/// A reference value together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub reference: Vec<f64>,
    pub method: OracleMethod,
    pub tolerance_used: f64,
}

impl OracleReport {
    fn new(reference: Array1<f64>, method: OracleMethod, tolerance_used: f64) -> Self {
        Self { reference: reference.to_vec(), method, tolerance_used }
    }

    pub fn point(&self) -> Array1<f64> {
        Array1::from(self.reference.clone())
    }
}

/// Euclidean projection onto `{w : ‖w‖₁ ≤ η}` by sorting magnitudes and
/// soft-thresholding at the unique `τ` with `Σ max(|v_i| - τ, 0) = η`.
pub fn l1_ball_projection_exact(v: &ArrayRef1<f64>, eta: f64) -> Array1<f64> {
    assert!(eta >= 0.0, "l1 radius must be nonnegative");
    let norm1: f64 = v.iter().map(|x| x.abs()).sum();
    if norm1 <= eta {
        return v.to_owned();
    }
    if eta == 0.0 {
        return Array1::zeros(v.len());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - eta) / (j + 1) as f64;
        if u > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    v.mapv(|x| x.signum() * (x.abs() - tau).max(0.0))
}

/// Closed half-space `{p : ⟨normal, p⟩ ≤ offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Array1<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Array1<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// `H(x, y) = {p : ⟨p - y, x - y⟩ ≤ 0}`.
    pub fn through(x: &ArrayRef1<f64>, y: &ArrayRef1<f64>) -> Self {
        let normal = x - y;
        let offset = normal.dot(y);
        Self { normal, offset }
    }

    /// Signed violation `⟨normal, p⟩ - offset`.
    pub fn violation(&self, p: &ArrayRef1<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Projection onto the intersection of at most two half-spaces by
/// enumerating active sets and keeping the nearest feasible candidate.
pub fn project_onto_half_spaces(half_spaces: &[HalfSpace], p0: &ArrayRef1<f64>) -> Result<OracleReport> {
    if half_spaces.len() > 2 {
        return Err(Error::InvalidConfig("half-space enumeration supports at most two".into()));
    }
    for h in half_spaces {
        check_dim(p0.len(), h.normal.len())?;
    }
    let scale = 1.0
        + p0.dot(p0).sqrt()
        + half_spaces.iter().map(|h| h.offset.abs()).sum::<f64>();
    let feasible = |p: &Array1<f64>| {
        half_spaces.iter().all(|h| {
            let n = h.normal.dot(&h.normal).sqrt();
            h.violation(p) <= 1e-12 * scale * (1.0 + n)
        })
    };

    let mut candidates: Vec<Array1<f64>> = vec![p0.to_owned()];
    for h in half_spaces {
        let nn = h.normal.dot(&h.normal);
        if nn > 0.0 {
            candidates.push(p0 - &h.normal * (h.violation(p0) / nn));
        }
    }
    if let [h1, h2] = half_spaces {
        // both hyperplanes active: p = p0 - λ1 n1 - λ2 n2 with Gλ = r
        let g11 = h1.normal.dot(&h1.normal);
        let g12 = h1.normal.dot(&h2.normal);
        let g22 = h2.normal.dot(&h2.normal);
        let det = g11 * g22 - g12 * g12;
        if det > 1e-14 * g11 * g22 {
            let r1 = h1.violation(p0);
            let r2 = h2.violation(p0);
            let l1 = (g22 * r1 - g12 * r2) / det;
            let l2 = (g11 * r2 - g12 * r1) / det;
            candidates.push(p0 - &h1.normal * l1 - &h2.normal * l2);
        }
    }

    candidates
        .into_iter()
        .filter(|c| feasible(c))
        .map(|c| {
            let d = &*c - p0;
            (d.dot(&d), c)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| OracleReport::new(c, OracleMethod::HalfSpaceEnumeration, 0.0))
        .ok_or_else(|| Error::InvalidData("half-space intersection is empty".into()))
}

/// Grid search for the projection of `p0` onto `{p : feasible(p)}` in at
/// most three dimensions.
#[derive(Debug, Clone, Copy)]
pub struct GridOracle {
    pub points_per_axis: usize,
    /// Zoom in around the best point until the spacing drops below this.
    pub refine_to: Option<f64>,
}

impl Default for GridOracle {
    fn default() -> Self {
        Self { points_per_axis: 2001, refine_to: Some(1e-8) }
    }
}

impl GridOracle {
    /// Searches the box `[-2r, 2r]^d` with `r = ‖p0‖`, which contains the
    /// projection whenever the set holds the origin.
    pub fn project(
        &self,
        p0: &ArrayRef1<f64>,
        feasible: impl Fn(&Array1<f64>) -> bool,
    ) -> Result<OracleReport> {
        let d = p0.len();
        if d == 0 || d > 3 {
            return Err(Error::InvalidConfig(format!("grid oracle needs 1 <= d <= 3, got {d}")));
        }
        if self.points_per_axis < 3 {
            return Err(Error::InvalidConfig("grid oracle needs at least 3 points per axis".into()));
        }
        let radius = 2.0 * p0.dot(p0).sqrt().max(1e-12);
        let mut lo = Array1::from_elem(d, -radius);
        let mut hi = Array1::from_elem(d, radius);
        let mut n = self.points_per_axis;
        loop {
            let step = (&hi - &lo) / (n - 1) as f64;
            let best = grid_search(p0, &lo, &step, n, &feasible)
                .ok_or_else(|| Error::InvalidData("no feasible grid point".into()))?;
            let spacing = step.iter().cloned().fold(0.0, f64::max);
            match self.refine_to {
                Some(target) if spacing > target => {
                    lo = &best - &(&step * 4.0);
                    hi = &best + &(&step * 4.0);
                    n = 41;
                }
                _ => {
                    return Ok(OracleReport::new(best, OracleMethod::GridRefinement, spacing));
                }
            }
        }
    }
}

fn grid_search(
    p0: &ArrayRef1<f64>,
    lo: &Array1<f64>,
    step: &Array1<f64>,
    n: usize,
    feasible: &impl Fn(&Array1<f64>) -> bool,
) -> Option<Array1<f64>> {
    let d = p0.len();
    let total = n.pow(d as u32);
    let mut best: Option<(f64, Array1<f64>)> = None;
    let mut point = Array1::zeros(d);
    for flat in 0..total {
        let mut rest = flat;
        for axis in 0..d {
            point[axis] = lo[axis] + step[axis] * (rest % n) as f64;
            rest /= n;
        }
        let diff = &*point - p0;
        let dist = diff.dot(&diff);
        if best.as_ref().is_some_and(|(b, _)| dist >= *b) {
            continue;
        }
        if feasible(&point) {
            best = Some((dist, point.clone()));
        }
    }
    best.map(|(_, p)| p)
}

/// Projection onto a constraint's level set in `d ≤ 3` by grid refinement.
pub fn projection_grid_oracle(
    constraints: &[ConstraintSpec],
    p0: &ArrayRef1<f64>,
    grid: &GridOracle,
) -> Result<OracleReport> {
    grid.project(p0, |p| {
        constraints
            .iter()
            .all(|c| c.value(p).map(|v| v <= c.eta()).unwrap_or(false))
    })
}

/// Central differences `(f(w + h e_i) - f(w - h e_i)) / 2h`.
pub fn finite_difference_gradient(
    f: impl Fn(&Array1<f64>) -> f64,
    w: &ArrayRef1<f64>,
    h: f64,
) -> Array1<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut probe = w.to_owned();
    let mut grad = Array1::zeros(w.len());
    for i in 0..w.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Projected gradient with the exact ℓ¹-ball projection, step `1/β`,
/// started at the origin.
pub fn reference_solve(model: &RiskModel, constraint: &ConstraintSpec, iters: usize) -> Result<Array1<f64>> {
    if constraint.kind() != ConstraintKind::L1 || constraint.support().is_some() {
        return Err(Error::InvalidConfig(
            "reference solve supports the plain l1 constraint only".into(),
        ));
    }
    let eta = constraint.eta();
    let step = 1.0 / model.lipschitz_bound();
    let mut w = Array1::zeros(model.features());
    for _ in 0..iters {
        let g = model.risk_gradient(&w)?;
        w.scaled_add(-step, &g);
        w = l1_ball_projection_exact(&w, eta);
    }
    Ok(w)
}
