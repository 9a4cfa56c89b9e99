use ndarray::ArrayRef1;

use crate::error::{check_dim, Error, Result};

/// Mean squared residual.
pub fn mse(y_true: &ArrayRef1<f64>, y_pred: &ArrayRef1<f64>) -> Result<f64> {
    check_dim(y_true.len(), y_pred.len())?;
    if y_true.is_empty() {
        return Err(Error::InvalidData("mse of an empty sample".into()));
    }
    let total: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(total / y_true.len() as f64)
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half. Labels are `+1` for positives, anything else negative.
pub fn auc(labels: &ArrayRef1<f64>, scores: &ArrayRef1<f64>) -> Result<f64> {
    check_dim(labels.len(), scores.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum of midranks (1-based) over positives
    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1.0).count();
        positive_rank_sum += midrank * positives as f64;
        start = end;
    }

    let n_pos = labels.iter().filter(|&&l| l == 1.0).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::InvalidData("AUC needs both classes present".into()));
    }
    let u = positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn mse_basics() {
        let y = array![1.0, -2.0, 3.5];
        assert_eq!(mse(&y, &y).unwrap(), 0.0);
        assert_eq!(mse(&array![0.0, 0.0], &array![1.0, 3.0]).unwrap(), 5.0);
        assert!(mse(&y, &array![1.0]).is_err());
    }

    #[test]
    fn auc_examples() {
        let labels = array![-1.0, -1.0, 1.0, 1.0];
        assert_eq!(auc(&labels, &array![0.1, 0.2, 0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(auc(&labels, &array![0.1, 0.4, 0.35, 0.8]).unwrap(), 0.75);
        assert_eq!(auc(&labels, &array![0.5, 0.5, 0.5, 0.5]).unwrap(), 0.5);
        assert!(auc(&array![1.0, 1.0], &array![0.1, 0.2]).is_err());
    }
}
