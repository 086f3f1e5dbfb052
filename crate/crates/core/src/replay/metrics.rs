//! Detection accuracy metrics over a replay result, with flaky as the
//! positive class and flaky-by-match as the only positive prediction.

use serde::Serialize;

use crate::replay::SimulationResult;

/// Precision/recall/F1 plus the always-predict-positive baseline. `None`
/// encodes an undefined value (zero denominator).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Precision of a model that flags everything flaky: the dataset's flaky
    /// proportion.
    pub baseline_precision: Option<f64>,
}

pub fn compute_metrics(result: &SimulationResult) -> Metrics {
    let c = &result.confusion;
    let tp = c.true_positive as f64;
    let predicted = c.true_positive + c.false_positive;
    let actual = c.true_positive + c.false_negative;
    let total = c.total();

    let precision = (predicted > 0).then(|| tp / predicted as f64);
    let recall = (actual > 0).then(|| tp / actual as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    let baseline_precision = (total > 0).then(|| actual as f64 / total as f64);

    Metrics {
        precision,
        recall,
        f1,
        baseline_precision,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::CaseMemory;
    use crate::replay::{Confusion, SimConfigEcho};

    fn result_with(confusion: Confusion) -> SimulationResult {
        SimulationResult {
            per_suite: vec![],
            confusion,
            config: SimConfigEcho {
                match_threshold: 1,
                min_unique_words: 1,
                rerun_budget: 3,
                purification: true,
                masking: true,
                early_stop: true,
                dedupe_within_suite: false,
            },
            final_memory: CaseMemory::new(),
        }
    }

    #[test]
    fn hand_counted_example() {
        let m = compute_metrics(&result_with(Confusion {
            true_positive: 3,
            false_positive: 0,
            true_negative: 2,
            false_negative: 1,
        }));
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(m.recall, Some(0.75));
        assert_eq!(m.baseline_precision, Some(4.0 / 6.0));
        let f1 = m.f1.unwrap();
        assert!((f1 - 2.0 * 0.75 / 1.75).abs() < 1e-12);
    }

    #[test]
    fn zero_predictions_leave_precision_undefined() {
        let m = compute_metrics(&result_with(Confusion {
            true_positive: 0,
            false_positive: 0,
            true_negative: 2,
            false_negative: 3,
        }));
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.f1, None);
    }

    #[test]
    fn no_actual_flaky_leaves_recall_undefined() {
        let m = compute_metrics(&result_with(Confusion {
            true_positive: 0,
            false_positive: 1,
            true_negative: 4,
            false_negative: 0,
        }));
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(m.recall, None);
        assert_eq!(m.f1, None);
    }

    #[test]
    fn both_zero_rates_leave_f1_undefined() {
        let m = compute_metrics(&result_with(Confusion {
            true_positive: 0,
            false_positive: 2,
            true_negative: 0,
            false_negative: 3,
        }));
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.f1, None);
    }

    #[test]
    fn empty_result_is_fully_undefined() {
        let m = compute_metrics(&result_with(Confusion::default()));
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.baseline_precision, None);
    }

    #[test]
    fn reference_proportion() {
        // 9,857 flaky of 13,168 suites; the naive always-positive baseline
        // equals the flaky proportion.
        let m = compute_metrics(&result_with(Confusion {
            true_positive: 9_000,
            false_positive: 100,
            true_negative: 3_211,
            false_negative: 857,
        }));
        assert_eq!(m.baseline_precision, Some(9_857.0 / 13_168.0));
        assert!((m.baseline_precision.unwrap() - 0.749).abs() < 5e-4);
    }
}
