//! Regression and binary-classification metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Sentiment;

/// Predictions are clamped to at least this before `ln(1 + p)`.
const MSLE_FLOOR: f64 = -1.0 + 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} predictions vs {1} actuals")]
    LengthMismatch(usize, usize),
    #[error("no samples to evaluate")]
    Empty,
    #[error("actual value {0} is ≤ -1; msle undefined")]
    MsleDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    pub mse: f64,
    pub rmse: f64,
    /// `None` when the actuals are constant (SS_tot = 0).
    pub r_squared: Option<f64>,
    pub msle: f64,
}

pub fn regression_report(pred: &[f64], actual: &[f64]) -> Result<RegressionReport, MetricsError> {
    if pred.len() != actual.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), actual.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&a) = actual.iter().find(|&&a| a <= -1.0) {
        return Err(MetricsError::MsleDomain(a));
    }
    let n = pred.len() as f64;
    let ss_res: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    let mse = ss_res / n;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    let r_squared = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    let msle = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| {
            let d = p.max(MSLE_FLOOR).ln_1p() - a.ln_1p();
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(RegressionReport {
        n: pred.len(),
        mse,
        rmse: mse.sqrt(),
        r_squared,
        msle,
    })
}

/// Binary confusion counts with `+1` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(pred: &[Sentiment], truth: &[Sentiment]) -> Result<ConfusionMatrix, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in pred.iter().zip(truth) {
        match (p, t) {
            (Sentiment::Positive, Sentiment::Positive) => cm.tp += 1,
            (Sentiment::Positive, Sentiment::Negative) => cm.fp += 1,
            (Sentiment::Negative, Sentiment::Negative) => cm.tn += 1,
            (Sentiment::Negative, Sentiment::Positive) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when `tp + fp = 0`; precision is then reported as 0.
    pub precision_degenerate: bool,
    /// Set when `tp + fn = 0`; recall is then reported as 0.
    pub recall_degenerate: bool,
}

pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassificationReport, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ClassificationReport {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1,
        precision_degenerate: cm.tp + cm.fp == 0,
        recall_degenerate: cm.tp + cm.fn_ == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Sentiment::{Negative as N, Positive as P};

    #[test]
    fn perfect_fit() {
        let a = [10.0, 12.0, 9.5];
        let r = regression_report(&a, &a).unwrap();
        assert_eq!((r.mse, r.rmse, r.r_squared, r.msle), (0.0, 0.0, Some(1.0), 0.0));
    }

    #[test]
    fn mean_baseline_has_zero_r2() {
        let a = [1.0, 2.0, 3.0, 6.0];
        let r = regression_report(&[3.0; 4], &a).unwrap();
        assert_eq!(r.r_squared, Some(0.0));
    }

    #[test]
    fn r2_can_be_negative_and_constant_actual_is_flagged() {
        let r = regression_report(&[5.0, -5.0], &[1.0, 2.0]).unwrap();
        assert!(r.r_squared.unwrap() < 0.0);
        assert_eq!(regression_report(&[1.0, 2.0], &[3.0, 3.0]).unwrap().r_squared, None);
    }

    #[test]
    fn regression_errors() {
        assert_eq!(regression_report(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch(1, 2)));
        assert_eq!(regression_report(&[], &[]), Err(MetricsError::Empty));
        assert_eq!(regression_report(&[0.0], &[-1.0]), Err(MetricsError::MsleDomain(-1.0)));
    }

    #[test]
    fn msle_clamps_predictions() {
        let r = regression_report(&[-5.0], &[0.0]).unwrap();
        assert!(r.msle.is_finite());
    }

    #[test]
    fn confusion_examples() {
        let truth: Vec<Sentiment> = (0..10).map(|i| if i < 6 { P } else { N }).collect();
        let cm = confusion(&truth, &truth).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 6, fp: 0, tn: 4, fn_: 0 });
        let inverted: Vec<Sentiment> = truth.iter().map(|s| s.flip()).collect();
        let cm = confusion(&inverted, &truth).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp + cm.fn_), (0, 0, 10));
        let cm = confusion(&[P, P, N, N], &[P, N, N, P]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, fp: 1, tn: 1, fn_: 1 });
        assert!(confusion(&[P], &[P, N]).is_err());
    }

    #[test]
    fn classification_examples() {
        let r = classification_report(&ConfusionMatrix { tp: 6, fp: 0, tn: 4, fn_: 0 }).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
        let r = classification_report(&ConfusionMatrix { tp: 1, fp: 1, tn: 1, fn_: 1 }).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (0.5, 0.5, 0.5, 0.5));
        let r = classification_report(&ConfusionMatrix { tp: 0, fp: 0, tn: 3, fn_: 2 }).unwrap();
        assert_eq!(r.precision, 0.0);
        assert!(r.precision_degenerate);
        assert_eq!(r.f1, 0.0);
        assert_eq!(classification_report(&ConfusionMatrix::default()), Err(MetricsError::Empty));
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse(v in proptest::collection::vec((0.0f64..1e4, 0.0f64..1e4), 1..50)) {
            let (p, a): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let r = regression_report(&p, &a).unwrap();
            prop_assert!((r.rmse * r.rmse - r.mse).abs() <= 1e-9 * r.mse.max(f64::MIN_POSITIVE));
            prop_assert!(r.mse >= 0.0 && r.msle >= 0.0);
            if let Some(r2) = r.r_squared { prop_assert!(r2 <= 1.0); }
        }

        #[test]
        fn msle_symmetric(v in proptest::collection::vec((0.0f64..1e3, 0.0f64..1e3), 1..30)) {
            let (p, a): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let x = regression_report(&p, &a).unwrap().msle;
            let y = regression_report(&a, &p).unwrap().msle;
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
        }

        #[test]
        fn f1_harmonic_mean(tp in 0usize..50, fp in 0usize..50, tn in 0usize..50, fn_ in 0usize..50) {
            let cm = ConfusionMatrix { tp, fp, tn, fn_ };
            prop_assume!(cm.total() > 0);
            let r = classification_report(&cm).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.f1));
            if r.precision + r.recall > 0.0 {
                let h = 2.0 * r.precision * r.recall / (r.precision + r.recall);
                prop_assert!((r.f1 - h).abs() < 1e-15);
            }
        }
    }
}
