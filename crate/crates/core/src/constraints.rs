//! Sparsity and grouping constraint functionals over a feature graph.
//!
//! | kind                 | value                              |
//! |----------------------|------------------------------------|
//! | `L1`                 | `Σ_i |w_i|`                        |
//! | `PairwiseMax`        | `Σ_(i,j) max(|w_i|, |w_j|)`        |
//! | `PairwiseDiff`       | `Σ_(i,j) |w_i - w_j|`              |
//! | `SignedPairwiseDiff` | `Σ_(i,j) |w_i - a_ij w_j|`         |
//!
//! All four are nonnegative, positively homogeneous and vanish at the
//! origin, so every level set `{w : φ(w) ≤ η}` with `η ≥ 0` contains `0`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayRef1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Edge sign `a_ij`: `+1` when both features move together, `-1` when one is
/// activated and the other inhibited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeSign {
    Positive,
    Negative,
}

impl EdgeSign {
    pub fn value(self) -> f64 {
        match self {
            EdgeSign::Positive => 1.0,
            EdgeSign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub sign: EdgeSign,
}

/// Ordered edge list over `d` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGraph {
    dim: usize,
    edges: Vec<Edge>,
}

impl FeatureGraph {
    /// Builds a graph, rejecting self-loops, out-of-range indices and
    /// duplicate `(i, j)` pairs.
    pub fn new(dim: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.i >= dim || e.j >= dim {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range for d={dim}",
                    e.i, e.j
                )));
            }
            if e.i == e.j {
                return Err(Error::InvalidGraph(format!("self-loop on feature {}", e.i)));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
        }
        Ok(Self { dim, edges })
    }

    /// All edges with sign `+1`.
    pub fn unsigned(dim: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(
            dim,
            pairs
                .into_iter()
                .map(|(i, j)| Edge { i, j, sign: EdgeSign::Positive })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    L1,
    PairwiseMax,
    PairwiseDiff,
    SignedPairwiseDiff,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 4] = [
        ConstraintKind::L1,
        ConstraintKind::PairwiseMax,
        ConstraintKind::PairwiseDiff,
        ConstraintKind::SignedPairwiseDiff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::L1 => "l1",
            ConstraintKind::PairwiseMax => "pairwise-max",
            ConstraintKind::PairwiseDiff => "pairwise-diff",
            ConstraintKind::SignedPairwiseDiff => "signed-pairwise-diff",
        }
    }

    pub fn needs_graph(self) -> bool {
        !matches!(self, ConstraintKind::L1)
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstraintKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "phi1" => Ok(ConstraintKind::L1),
            "pairwise-max" | "phi2" => Ok(ConstraintKind::PairwiseMax),
            "pairwise-diff" | "phi3" => Ok(ConstraintKind::PairwiseDiff),
            "signed-pairwise-diff" | "signed-diff" | "phi4" => {
                Ok(ConstraintKind::SignedPairwiseDiff)
            }
            other => Err(Error::InvalidConfig(format!("unknown constraint '{other}'"))),
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A convex constraint `φ(w) ≤ η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    kind: ConstraintKind,
    graph: Option<FeatureGraph>,
    eta: f64,
    /// Restricts `L1` to a subset of coordinates.
    support: Option<Vec<usize>>,
}

impl ConstraintSpec {
    pub fn new(kind: ConstraintKind, graph: Option<FeatureGraph>, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("bound eta must be finite and >= 0, got {eta}")));
        }
        if kind.needs_graph() && graph.is_none() {
            return Err(Error::MissingGraph(kind.name()));
        }
        Ok(Self { kind, graph, eta, support: None })
    }

    pub fn l1(eta: f64) -> Result<Self> {
        Self::new(ConstraintKind::L1, None, eta)
    }

    /// `Σ_{i ∈ support} |w_i| ≤ η`.
    pub fn l1_on(support: Vec<usize>, eta: f64) -> Result<Self> {
        let mut spec = Self::l1(eta)?;
        spec.support = Some(support);
        Ok(spec)
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn graph(&self) -> Option<&FeatureGraph> {
        self.graph.as_ref()
    }

    pub fn support(&self) -> Option<&[usize]> {
        self.support.as_deref()
    }

    /// True when the level set is `{0}`, which the iterative routine only
    /// reaches in the limit.
    pub fn is_origin_only(&self) -> bool {
        self.kind == ConstraintKind::L1 && self.eta == 0.0 && self.support.is_none()
    }

    /// Same functional with a different bound.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        let mut spec = Self::new(self.kind, self.graph.clone(), eta)?;
        spec.support = self.support.clone();
        Ok(spec)
    }

    fn check(&self, w: &ArrayRef1<f64>) -> Result<()> {
        if let Some(g) = &self.graph {
            if self.kind.needs_graph() {
                check_dim(g.dim(), w.len())?;
            }
        }
        if let Some(support) = &self.support {
            if let Some(&bad) = support.iter().find(|&&i| i >= w.len()) {
                return Err(Error::DimensionMismatch { expected: bad + 1, found: w.len() });
            }
        }
        Ok(())
    }

    fn edges(&self) -> &[Edge] {
        self.graph.as_ref().map(|g| g.edges()).unwrap_or(&[])
    }

    pub fn value(&self, w: &ArrayRef1<f64>) -> Result<f64> {
        self.check(w)?;
        let v = match self.kind {
            ConstraintKind::L1 => match &self.support {
                Some(support) => support.iter().map(|&i| w[i].abs()).sum(),
                None => w.iter().map(|v| v.abs()).sum(),
            },
            ConstraintKind::PairwiseMax => {
                self.edges().iter().map(|e| w[e.i].abs().max(w[e.j].abs())).sum()
            }
            ConstraintKind::PairwiseDiff => {
                self.edges().iter().map(|e| (w[e.i] - w[e.j]).abs()).sum()
            }
            ConstraintKind::SignedPairwiseDiff => self
                .edges()
                .iter()
                .map(|e| (w[e.i] - e.sign.value() * w[e.j]).abs())
                .sum(),
        };
        Ok(v)
    }

    /// An element of `∂φ(w)`, accumulated edge by edge.
    ///
    /// For `PairwiseMax` a nonzero tie `|w_i| = |w_j|` contributes half of
    /// each sign, which keeps the result inside the subdifferential of
    /// `max(|w_i|, |w_j|)`.
    pub fn subgradient(&self, w: &ArrayRef1<f64>) -> Result<Array1<f64>> {
        self.check(w)?;
        let mut s = Array1::zeros(w.len());
        match self.kind {
            ConstraintKind::L1 => match &self.support {
                Some(support) => {
                    for &i in support {
                        s[i] = sign(w[i]);
                    }
                }
                None => s.zip_mut_with(w, |si, &wi| *si = sign(wi)),
            },
            ConstraintKind::PairwiseMax => {
                for e in self.edges() {
                    let (a, b) = (w[e.i].abs(), w[e.j].abs());
                    if a > b {
                        s[e.i] += sign(w[e.i]);
                    } else if b > a {
                        s[e.j] += sign(w[e.j]);
                    } else if a > 0.0 {
                        s[e.i] += 0.5 * sign(w[e.i]);
                        s[e.j] += 0.5 * sign(w[e.j]);
                    }
                }
            }
            ConstraintKind::PairwiseDiff => {
                for e in self.edges() {
                    let t = sign(w[e.i] - w[e.j]);
                    s[e.i] += t;
                    s[e.j] -= t;
                }
            }
            ConstraintKind::SignedPairwiseDiff => {
                for e in self.edges() {
                    let a = e.sign.value();
                    let t = sign(w[e.i] - a * w[e.j]);
                    s[e.i] += t;
                    s[e.j] -= a * t;
                }
            }
        }
        Ok(s)
    }
}
