//! Empirical risks for linear classifiers and least-squares regression.
//!
//! Classification losses are generated by a posterior link `f` that is
//! increasing, maps into `[0, 1]`, and is antisymmetric about `(0, 1/2)`.
//! The loss is `φ(t) = -t + ∫_{-∞}^t f`, so `φ' = f - 1` and `φ''(0) = f'(0)`
//! is the largest curvature of the loss.

use ndarray::{Array1, Array2, ArrayRef1, ArrayRef2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Margin loss satisfying the antisymmetric-posterior assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `ln(1 + e^{-t})`, posterior `1 / (1 + e^{-t})`.
    Logistic,
    /// `(-t + sqrt(1 + t²)) / 2`, posterior `(t / sqrt(1 + t²) + 1) / 2`.
    Matsusita,
}

impl LossKind {
    pub fn loss(self, t: f64) -> f64 {
        match self {
            // max(-t, 0) + ln(1 + e^{-|t|})
            LossKind::Logistic => (-t).max(0.0) + (-t.abs()).exp().ln_1p(),
            LossKind::Matsusita => {
                let r = t.hypot(1.0);
                if t > 0.0 {
                    // -t + r = 1 / (t + r) without cancellation
                    0.5 / (t + r)
                } else {
                    0.5 * (r - t)
                }
            }
        }
    }

    /// `φ'(t) = f(t) - 1 = -f(-t)`, always in `[-1, 0]`.
    pub fn loss_derivative(self, t: f64) -> f64 {
        -self.posterior(-t)
    }

    /// The link `f`: class `+1` probability for score `s`.
    pub fn posterior(self, s: f64) -> f64 {
        match self {
            LossKind::Logistic => {
                if s >= 0.0 {
                    1.0 / (1.0 + (-s).exp())
                } else {
                    let e = s.exp();
                    e / (1.0 + e)
                }
            }
            LossKind::Matsusita => 0.5 * (s / s.hypot(1.0) + 1.0),
        }
    }

    /// `φ''(0) = f'(0) = max φ''`.
    pub fn curvature_at_zero(self) -> f64 {
        match self {
            LossKind::Logistic => 0.25,
            LossKind::Matsusita => 0.5,
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(LossKind::Logistic),
            "matsusita" => Ok(LossKind::Matsusita),
            other => Err(Error::InvalidConfig(format!("unknown loss '{other}'"))),
        }
    }
}

/// Which risk a [`RiskModel`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// `(1/m) Σ φ(y_i ⟨x_i, w⟩)` with labels in `{-1, +1}`.
    Classification(LossKind),
    /// `(1/2m) Σ (⟨x_i, w⟩ - y_i)²`.
    Regression,
}

/// Power-iteration controls for the regression Lipschitz bound.
const POWER_MAX_ITERS: usize = 1000;
const POWER_REL_TOL: f64 = 1e-10;
const POWER_SAFETY: f64 = 1.05;
const POWER_SEED: u64 = 0x005E_ED0F_B0B5;

/// Samples (rows of `x`), targets, and the risk they define.
#[derive(Debug, Clone)]
pub struct RiskModel {
    x: Array2<f64>,
    y: Array1<f64>,
    task: Task,
}

impl RiskModel {
    pub fn new(x: Array2<f64>, y: Array1<f64>, task: Task) -> Result<Self> {
        let (m, d) = x.dim();
        if m == 0 || d == 0 {
            return Err(Error::InvalidData(format!(
                "design matrix must be non-empty, got {m}x{d}"
            )));
        }
        check_dim(m, y.len())?;
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite sample value".into()));
        }
        if let Task::Classification(_) = task {
            if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
                return Err(Error::InvalidData(format!(
                    "classification label {bad} is not -1 or +1"
                )));
            }
        }
        Ok(Self { x, y, task })
    }

    pub fn classification(x: Array2<f64>, y: Array1<f64>, loss: LossKind) -> Result<Self> {
        Self::new(x, y, Task::Classification(loss))
    }

    pub fn regression(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        Self::new(x, y, Task::Regression)
    }

    pub fn samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn features(&self) -> usize {
        self.x.ncols()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.y
    }

    /// Linear scores `⟨x_i, w⟩` for every sample.
    pub fn scores(&self, w: &ArrayRef1<f64>) -> Result<Array1<f64>> {
        check_dim(self.features(), w.len())?;
        Ok(self.x.dot(w))
    }

    pub fn risk_value(&self, w: &ArrayRef1<f64>) -> Result<f64> {
        let scores = self.scores(w)?;
        let m = self.samples() as f64;
        let total: f64 = match self.task {
            Task::Classification(loss) => scores
                .iter()
                .zip(self.y.iter())
                .map(|(s, y)| loss.loss(y * s))
                .sum(),
            Task::Regression => {
                return Ok(scores
                    .iter()
                    .zip(self.y.iter())
                    .map(|(s, y)| (s - y).powi(2))
                    .sum::<f64>()
                    / (2.0 * m))
            }
        };
        Ok(total / m)
    }

    pub fn risk_gradient(&self, w: &ArrayRef1<f64>) -> Result<Array1<f64>> {
        let scores = self.scores(w)?;
        let m = self.samples() as f64;
        let coeffs: Array1<f64> = match self.task {
            Task::Classification(loss) => scores
                .iter()
                .zip(self.y.iter())
                .map(|(s, y)| y * loss.loss_derivative(y * s) / m)
                .collect(),
            Task::Regression => scores
                .iter()
                .zip(self.y.iter())
                .map(|(s, y)| (s - y) / m)
                .collect(),
        };
        Ok(self.x.t().dot(&coeffs))
    }

    /// Upper bound `β` on the Lipschitz constant of the risk gradient.
    ///
    /// Classification uses `φ''(0) Σ‖x_i‖² / m`. Regression uses `σ₁² / m`
    /// with `σ₁` estimated by power iteration and inflated by 5%; if the
    /// iteration does not settle, the Frobenius bound `‖X‖_F² / m` is used.
    pub fn lipschitz_bound(&self) -> f64 {
        let m = self.samples() as f64;
        let frobenius_sq: f64 = self.x.iter().map(|v| v * v).sum();
        match self.task {
            Task::Classification(loss) => loss.curvature_at_zero() * frobenius_sq / m,
            Task::Regression => match largest_eigenvalue_gram(&self.x) {
                Some(lambda) => (POWER_SAFETY * lambda).min(frobenius_sq) / m,
                None => frobenius_sq / m,
            },
        }
    }
}

/// Largest eigenvalue of `XᵀX` by power iteration, or `None` if it fails to
/// reach the relative tolerance within the iteration cap.
fn largest_eigenvalue_gram(x: &ArrayRef2<f64>) -> Option<f64> {
    let d = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Array1<f64> = (0..d)
        .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 + 0.5)
        .collect();
    let norm = v.dot(&v).sqrt();
    v /= norm;

    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let xv = x.dot(&v);
        let next = x.t().dot(&xv);
        let next_norm = next.dot(&next).sqrt();
        if next_norm == 0.0 {
            // v lies in the null space; restart would need another seed, but
            // X = 0 is the only way every start vector is annihilated here.
            return if x.iter().all(|&a| a == 0.0) { Some(0.0) } else { None };
        }
        let converged = (next_norm - lambda).abs() <= POWER_REL_TOL * next_norm;
        lambda = next_norm;
        v = next / next_norm;
        if converged {
            return Some(lambda);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};

    const KINDS: [LossKind; 2] = [LossKind::Logistic, LossKind::Matsusita];

    #[test]
    fn loss_at_zero() {
        assert!((LossKind::Logistic.loss(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(LossKind::Matsusita.loss(0.0), 0.5);
    }

    #[test]
    fn logistic_does_not_overflow() {
        // ln(1 + e^{800}) = 800 + ln(1 + e^{-800}) = 800 exactly in f64.
        let v = LossKind::Logistic.loss(-800.0);
        assert!(v.is_finite());
        assert_eq!(v, 800.0);
        assert!(LossKind::Logistic.loss(800.0) >= 0.0);
        assert!(LossKind::Logistic.loss(800.0) < 1e-300);
    }

    #[test]
    fn matsusita_large_margin_is_accurate() {
        // (-t + sqrt(1+t^2))/2 ~ 1/(4t) for large t
        let t = 1e8;
        let v = LossKind::Matsusita.loss(t);
        assert!((v - 0.25 / t).abs() / v < 1e-12);
    }

    #[test]
    fn derivative_at_zero_is_minus_half() {
        for kind in KINDS {
            assert_eq!(kind.loss_derivative(0.0), -0.5);
            assert_eq!(kind.posterior(0.0), 0.5);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-5;
        for kind in KINDS {
            for &t in &[-3.0, -0.4, 0.0, 2.0, 5.5] {
                let fd = (kind.loss(t + h) - kind.loss(t - h)) / (2.0 * h);
                assert!((kind.loss_derivative(t) - fd).abs() < 1e-8, "{kind:?} at {t}");
            }
        }
    }

    #[test]
    fn logistic_posterior_at_one() {
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((LossKind::Logistic.posterior(1.0) - expected).abs() < 1e-15);
        assert!((LossKind::Logistic.posterior(1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
    }

    #[test]
    fn risk_at_origin() {
        let x = array![[1.0, 2.0], [-0.5, 3.0], [0.0, 1.0]];
        let y = array![1.0, -1.0, 1.0];
        let model = RiskModel::classification(x.clone(), y.clone(), LossKind::Logistic).unwrap();
        let w = Array::zeros(2);
        assert!((model.risk_value(&w).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let g = model.risk_gradient(&w).unwrap();
        let expected = x.t().dot(&y) * (-0.5 / 3.0);
        assert!((&g - &expected).iter().all(|v| v.abs() < 1e-15));

        let reg = RiskModel::regression(x, y.clone()).unwrap();
        let expected = y.dot(&y) / 6.0;
        assert!((reg.risk_value(&w).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn single_sample_risk() {
        let model =
            RiskModel::classification(array![[1.0, 0.0]], array![1.0], LossKind::Logistic)
                .unwrap();
        let v = model.risk_value(&array![2.0, 5.0]).unwrap();
        assert!((v - (1.0 + (-2.0f64).exp()).ln()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = RiskModel::regression(array![[1.0, 0.0]], array![1.0]).unwrap();
        assert!(matches!(
            model.risk_value(&array![1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(model.risk_gradient(&array![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn rejects_bad_labels() {
        let r = RiskModel::classification(array![[1.0]], array![0.5], LossKind::Logistic);
        assert!(matches!(r, Err(Error::InvalidData(_))));
        let r = RiskModel::regression(Array2::zeros((0, 2)), Array1::zeros(0));
        assert!(r.is_err());
    }

    #[test]
    fn lipschitz_bounds() {
        // unit-norm rows: β = φ''(0)
        let x = array![[1.0, 0.0], [0.6, 0.8], [0.0, -1.0]];
        let y = array![1.0, -1.0, 1.0];
        let model = RiskModel::classification(x, y, LossKind::Logistic).unwrap();
        assert!((model.lipschitz_bound() - 0.25).abs() < 1e-15);

        let model =
            RiskModel::classification(array![[2.0, 0.0]], array![1.0], LossKind::Matsusita)
                .unwrap();
        assert_eq!(model.lipschitz_bound(), 2.0);

        let m = 4;
        let model = RiskModel::regression(Array2::eye(m), Array1::ones(m)).unwrap();
        assert!((model.lipschitz_bound() - 1.05 / m as f64).abs() < 1e-12);
    }

    #[test]
    fn regression_gradient_vanishes_at_least_squares_solution() {
        // X square and invertible: w* = X^{-1} y.
        let x = array![[2.0, 1.0], [1.0, 3.0]];
        let y = array![1.0, 2.0];
        // inverse of [[2,1],[1,3]] is [[3,-1],[-1,2]]/5
        let w = array![(3.0 * 1.0 - 2.0) / 5.0, (-1.0 + 2.0 * 2.0) / 5.0];
        let model = RiskModel::regression(x, y).unwrap();
        let g = model.risk_gradient(&w).unwrap();
        assert!(g.dot(&g).sqrt() <= 1e-10);
    }
}
