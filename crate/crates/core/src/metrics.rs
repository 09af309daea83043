//! Neutral-model evaluation metrics.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EvalMetrics {
    Regression {
        mse: f64,
        mae: f64,
        rmse: f64,
    },
    /// Class 1 is the positive class.
    Classification {
        accuracy: f64,
        recall: f64,
        precision: f64,
    },
}

impl EvalMetrics {
    /// `(name, value)` pairs in table order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        match *self {
            EvalMetrics::Regression { mse, mae, rmse } => vec![("mse", mse), ("mae", mae), ("rmse", rmse)],
            EvalMetrics::Classification { accuracy, recall, precision } => {
                vec![("accuracy", accuracy), ("recall", recall), ("precision", precision)]
            }
        }
    }
}

pub fn regression_metrics(y: &[f64], predicted: &[f64]) -> EvalMetrics {
    assert_eq!(y.len(), predicted.len());
    let n = y.len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (a, b) in y.iter().zip(predicted) {
        let e = a - b;
        se += e * e;
        ae += e.abs();
    }
    let mse = se / n;
    EvalMetrics::Regression { mse, mae: ae / n, rmse: mse.sqrt() }
}

/// Labels are compared exactly; precision and recall are 0 when their
/// denominator is empty.
pub fn classification_metrics(y: &[f64], predicted: &[f64]) -> EvalMetrics {
    assert_eq!(y.len(), predicted.len());
    let (mut correct, mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&a, &b) in y.iter().zip(predicted) {
        if a == b {
            correct += 1;
        }
        match (a == 1.0, b == 1.0) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    EvalMetrics::Classification {
        accuracy: ratio(correct, y.len()),
        recall: ratio(tp, tp + fn_),
        precision: ratio(tp, tp + fp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_values() {
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 5.0]);
        match m {
            EvalMetrics::Regression { mse, mae, rmse } => {
                assert!((mse - 4.0 / 3.0).abs() < 1e-15);
                assert!((mae - 2.0 / 3.0).abs() < 1e-15);
                assert_eq!(rmse, mse.sqrt());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn classification_values() {
        let m = classification_metrics(&[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(m, EvalMetrics::Classification { accuracy: 0.5, recall: 0.5, precision: 0.5 });
        let perfect = classification_metrics(&[1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(perfect, EvalMetrics::Classification { accuracy: 1.0, recall: 1.0, precision: 1.0 });
    }
}
