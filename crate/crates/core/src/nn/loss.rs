//! Softmax cross-entropy.

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Row-wise softmax, stabilized by subtracting each row's maximum.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        row.iter_mut().for_each(|x| *x /= sum);
    }
    out
}

/// Mean negative log-likelihood and its gradient `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: logits.rows(),
            actual: labels.len(),
        });
    }
    if logits.rows() == 0 {
        return Err(Error::EmptyBatch("cross-entropy"));
    }
    let classes = logits.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes,
        });
    }
    let batch = labels.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), classes);
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|x| (x - max).exp()).sum();
        let log_sum = sum.ln() + max;
        loss += log_sum - row[label];
        let g = grad.row_mut(i);
        for (gj, x) in g.iter_mut().zip(row) {
            *gj = (x - log_sum).exp() / batch;
        }
        g[label] -= 1.0 / batch;
    }
    Ok((loss / batch, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use rand::Rng;

    #[test]
    fn uniform_logits_give_log_classes() {
        let logits = Matrix::zeros(3, 4);
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 1, 3]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((loss - 1.38629).abs() < 1e-5);
    }

    #[test]
    fn saturated_correct_logit() {
        let logits = Matrix::from_vec(1, 3, vec![0.0, 30.0, 0.0]).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[1]).unwrap();
        assert!(loss < 1e-9);
    }

    #[test]
    fn label_out_of_range() {
        let logits = Matrix::zeros(1, 3);
        assert!(matches!(
            softmax_cross_entropy(&logits, &[3]),
            Err(Error::LabelOutOfRange { label: 3, classes: 3 })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngSeed(21).rng();
        let data: Vec<f64> = (0..15).map(|_| rng.random_range(-2.0..2.0)).collect();
        let logits = Matrix::from_vec(3, 5, data).unwrap();
        let labels = [4, 0, 2];
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        let h = 1e-5;
        for k in 0..15 {
            let mut plus = logits.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = logits.clone();
            minus.as_mut_slice()[k] -= h;
            let fd = (softmax_cross_entropy(&plus, &labels).unwrap().0
                - softmax_cross_entropy(&minus, &labels).unwrap().0)
                / (2.0 * h);
            let a = grad.as_slice()[k];
            assert!((a - fd).abs() <= 1e-6 * a.abs().max(fd.abs()).max(1e-3), "{a} vs {fd}");
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = Matrix::from_vec(2, 3, vec![1000.0, 0.0, -1000.0, 1.0, 2.0, 3.0]).unwrap();
        let p = softmax(&logits);
        for r in p.row_iter() {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
