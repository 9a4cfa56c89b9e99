//! Repeated train/test comparison of constraint families over a grid of
//! bounds.

use anyhow::{ensure, Result};
use ndarray::{Array1, Array2};
use outerproj::data::{auc, mse, random_splits, Split};
use outerproj::{solve_path, ConstraintSpec, RiskModel, SolverConfig, Task};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Mean squared prediction error on the test half; lower is better.
    Pmse,
    /// Test AUC; higher is better.
    Auc,
}

impl Metric {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Regression => Metric::Pmse,
            Task::Classification(_) => Metric::Auc,
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::Pmse => a < b,
            Metric::Auc => a > b,
        }
    }

    pub fn evaluate(self, x: &Array2<f64>, y: &Array1<f64>, w: &Array1<f64>) -> Result<f64> {
        let scores = x.dot(w);
        Ok(match self {
            Metric::Pmse => mse(y, &scores)?,
            Metric::Auc => auc(y, &scores)?,
        })
    }
}

pub struct Experiment {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub task: Task,
    /// One entry per family; their bounds are ignored.
    pub constraints: Vec<ConstraintSpec>,
    pub eta_grid: Vec<f64>,
    pub config: SolverConfig,
    pub folds: usize,
    pub train_fraction: f64,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSummary {
    pub constraint: String,
    /// Mean test metric over folds, one per grid bound.
    pub mean_by_eta: Vec<f64>,
    pub std_by_eta: Vec<f64>,
    pub best_eta: f64,
    pub best_mean: f64,
    /// Per-fold test metric at `best_eta`.
    pub fold_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub constraint: String,
    pub other: String,
    /// Folds where `constraint` did strictly better than `other`, each at
    /// its own best bound.
    pub folds_better: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metric: Metric,
    pub folds: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub eta_grid: Vec<f64>,
    pub constraints: Vec<ConstraintSummary>,
    pub comparisons: Vec<Comparison>,
}

impl ExperimentReport {
    pub fn summary(&self, name: &str) -> Option<&ConstraintSummary> {
        self.constraints.iter().find(|c| c.constraint == name)
    }

    pub fn folds_better(&self, name: &str, other: &str) -> Option<usize> {
        self.comparisons.iter().find(|c| c.constraint == name && c.other == other).map(|c| c.folds_better)
    }
}

impl Experiment {
    pub fn run(&self) -> Result<ExperimentReport> {
        ensure!(self.folds > 0, "need at least one fold");
        ensure!(!self.constraints.is_empty(), "need at least one constraint");
        let metric = Metric::for_task(self.task);
        let splits = random_splits(self.x.nrows(), self.train_fraction, self.folds, self.split_seed)?;

        // values[c][f][e]
        let jobs: Vec<(usize, usize)> =
            (0..self.constraints.len()).flat_map(|c| (0..self.folds).map(move |f| (c, f))).collect();
        let results: Vec<Vec<f64>> = jobs
            .par_iter()
            .map(|&(c, f)| self.fold_curve(&self.constraints[c], &splits[f], metric))
            .collect::<Result<_>>()?;
        let values: Vec<&[Vec<f64>]> = results.chunks(self.folds).collect();

        let mut summaries = Vec::with_capacity(self.constraints.len());
        for (spec, per_fold) in self.constraints.iter().zip(&values) {
            let n = self.folds as f64;
            let mean_by_eta: Vec<f64> = (0..self.eta_grid.len())
                .map(|e| per_fold.iter().map(|v| v[e]).sum::<f64>() / n)
                .collect();
            let std_by_eta: Vec<f64> = (0..self.eta_grid.len())
                .map(|e| {
                    let mean = mean_by_eta[e];
                    let ss: f64 = per_fold.iter().map(|v| (v[e] - mean).powi(2)).sum();
                    if self.folds > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 }
                })
                .collect();
            let mut best = 0;
            for e in 1..mean_by_eta.len() {
                if metric.better(mean_by_eta[e], mean_by_eta[best]) {
                    best = e;
                }
            }
            summaries.push(ConstraintSummary {
                constraint: spec.kind().name().to_string(),
                best_eta: self.eta_grid[best],
                best_mean: mean_by_eta[best],
                fold_values: per_fold.iter().map(|v| v[best]).collect(),
                mean_by_eta,
                std_by_eta,
            });
        }

        let mut comparisons = Vec::new();
        for a in &summaries {
            for b in &summaries {
                if a.constraint != b.constraint {
                    let folds_better = a
                        .fold_values
                        .iter()
                        .zip(&b.fold_values)
                        .filter(|(x, y)| metric.better(**x, **y))
                        .count();
                    comparisons.push(Comparison {
                        constraint: a.constraint.clone(),
                        other: b.constraint.clone(),
                        folds_better,
                    });
                }
            }
        }

        Ok(ExperimentReport {
            metric,
            folds: self.folds,
            train_size: splits[0].train.len(),
            test_size: splits[0].test.len(),
            eta_grid: self.eta_grid.clone(),
            constraints: summaries,
            comparisons,
        })
    }

    fn fold_curve(&self, spec: &ConstraintSpec, split: &Split, metric: Metric) -> Result<Vec<f64>> {
        let pick = |idx: &[usize]| {
            (self.x.select(ndarray::Axis(0), idx), self.y.select(ndarray::Axis(0), idx))
        };
        let (x_train, y_train) = pick(&split.train);
        let (x_test, y_test) = pick(&split.test);
        let model = RiskModel::new(x_train, y_train, self.task)?;
        let path = solve_path(&model, spec, &self.eta_grid, &self.config)?;
        path.iter().map(|p| metric.evaluate(&x_test, &y_test, &p.result.w_final)).collect()
    }
}
