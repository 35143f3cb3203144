//! Confusion-matrix construction and the detection metrics derived from it.
//!
//! The positive class is the attack class (label 1). "Detection rate" is the
//! recall of that class, and the false-alarm rate is the fraction of benign
//! examples flagged as attacks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("labels and predictions differ in length ({labels} vs {preds})")]
    LengthMismatch { labels: usize, preds: usize },
    #[error("cannot build a confusion matrix from empty inputs")]
    Empty,
    #[error("labels and predictions must be 0 or 1, got {0}")]
    NonBinary(u8),
}

/// TP/TN/FP/FN counts for a binary classifier, positive class = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Count the four outcome cases over paired label/prediction vectors.
pub fn confusion(labels: &[u8], preds: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if labels.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            labels: labels.len(),
            preds: preds.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for (&y, &p) in labels.iter().zip(preds) {
        match (y, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return Err(EvalError::NonBinary(y.max(p))),
        }
    }
    Ok(cm)
}

/// The five derived metrics, each in [0, 1].
///
/// A ratio whose denominator is zero is reported as 0 and the affected metric
/// name is listed in `degenerate` instead of producing a NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    /// Recall of the attack class: TP / (TP + FN).
    pub detection_rate: f64,
    pub f1: f64,
    /// FP / (FP + TN).
    pub false_alarm_rate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<String>,
}

fn ratio(num: u64, den: u64, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0 {
        degenerate.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Compute accuracy, precision, detection rate (recall), F1, and false alarms.
pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let mut degenerate = Vec::new();
    let accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy", &mut degenerate);
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut degenerate);
    let detection_rate = ratio(cm.tp, cm.tp + cm.fn_, "detection_rate", &mut degenerate);
    let false_alarm_rate = ratio(cm.fp, cm.fp + cm.tn, "false_alarm_rate", &mut degenerate);
    let f1 = if precision + detection_rate == 0.0 {
        degenerate.push("f1".to_string());
        0.0
    } else {
        2.0 * precision * detection_rate / (precision + detection_rate)
    };
    MetricsReport {
        accuracy,
        precision,
        detection_rate,
        f1,
        false_alarm_rate,
        degenerate,
    }
}

/// One row of the results table: model name plus its metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

impl ModelReport {
    pub fn new(model: &str, cm: ConfusionMatrix) -> Self {
        ModelReport {
            model: model.to_string(),
            metrics: metrics(&cm),
            confusion: cm,
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Render one or more model rows as a fixed-width text table.
///
/// Percentages are printed to two decimals; rows appear in input order.
pub fn format_table(rows: &[ModelReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:>9} {:>10} {:>9} {:>9} {:>12}\n",
        "Model", "Accuracy", "Precision", "Recall", "F1 Score", "False Alarms"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:>9} {:>10} {:>9} {:>9} {:>12}\n",
            r.model,
            pct(r.metrics.accuracy),
            pct(r.metrics.precision),
            pct(r.metrics.detection_rate),
            pct(r.metrics.f1),
            pct(r.metrics.false_alarm_rate),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_example() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 1,
                fn_: 1,
                tn: 1,
                fp: 1
            }
        );
    }

    #[test]
    fn perfect_classifier_has_no_errors() {
        let y = [1, 0, 1, 1, 0];
        let cm = confusion(&y, &y).unwrap();
        assert_eq!(cm.fp, 0);
        assert_eq!(cm.fn_, 0);
        assert_eq!(metrics(&cm).accuracy, 1.0);
        assert_eq!(metrics(&cm).false_alarm_rate, 0.0);
    }

    #[test]
    fn inverted_classifier_has_no_hits() {
        let y = [1, 0, 1, 0];
        let inv: Vec<u8> = y.iter().map(|&v| 1 - v).collect();
        let cm = confusion(&y, &inv).unwrap();
        assert_eq!(cm.tp, 0);
        assert_eq!(cm.tn, 0);
    }

    #[test]
    fn worked_metric_example() {
        let cm = ConfusionMatrix {
            tp: 50,
            tn: 40,
            fp: 5,
            fn_: 5,
        };
        let m = metrics(&cm);
        assert!((m.accuracy - 0.90).abs() < 1e-12);
        assert!((m.detection_rate - 50.0 / 55.0).abs() < 1e-12);
        assert!((m.false_alarm_rate - 5.0 / 45.0).abs() < 1e-12);
        assert!((m.precision - 50.0 / 55.0).abs() < 1e-12);
        let p = 50.0 / 55.0;
        assert!((m.f1 - 2.0 * p * p / (p + p)).abs() < 1e-12);
        assert!(m.degenerate.is_empty());
    }

    #[test]
    fn zero_denominators_are_flagged_not_nan() {
        // All-negative ground truth: TP+FN = 0.
        let cm = confusion(&[0, 0, 0], &[0, 0, 0]).unwrap();
        let m = metrics(&cm);
        assert_eq!(m.detection_rate, 0.0);
        assert!(m.degenerate.contains(&"detection_rate".to_string()));
        assert!(m.degenerate.contains(&"precision".to_string()));
        assert!(m.accuracy.is_finite());
    }

    #[test]
    fn accuracy_complements_error_rate() {
        let cm = ConfusionMatrix {
            tp: 13,
            tn: 29,
            fp: 7,
            fn_: 11,
        };
        let m = metrics(&cm);
        let err = (cm.fp + cm.fn_) as f64 / cm.total() as f64;
        assert!((m.accuracy - (1.0 - err)).abs() < 1e-15);
    }

    #[test]
    fn rejects_length_mismatch_and_empty() {
        assert!(confusion(&[1, 0], &[1]).is_err());
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[2], &[0]).is_err());
    }

    #[test]
    fn table_renders_one_row_per_model() {
        let perfect = ConfusionMatrix {
            tp: 5,
            tn: 5,
            fp: 0,
            fn_: 0,
        };
        let rows = vec![
            ModelReport::new("CNN", perfect),
            ModelReport::new("FNN", perfect),
        ];
        let table = format_table(&rows);
        assert_eq!(table.lines().count(), 3);
        let cnn_line = table.lines().nth(1).unwrap();
        assert!(cnn_line.starts_with("CNN"));
        assert!(cnn_line.contains("100.00%"));
    }

    #[test]
    fn report_json_round_trips() {
        let cm = ConfusionMatrix {
            tp: 50,
            tn: 40,
            fp: 5,
            fn_: 5,
        };
        let report = ModelReport::new("FNN", cm);
        let json = serde_json::to_string(&report).unwrap();
        let back: ModelReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.metrics, report.metrics);
        assert_eq!(back.confusion, report.confusion);
    }
}
