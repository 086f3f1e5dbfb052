//! Rerun-resource savings relative to the pure rerun strategy.
//!
//! The denominator is what the pure rerun strategy spent: every recorded
//! rerun of every evaluable suite, as execution counts and as seconds. Match
//! verdicts save their suite's full recorded rerun cost; rerun-path suites
//! save nothing in the headline numbers. Early stopping on the rerun path
//! reduces what the hybrid actually spends, and that reduction is reported
//! separately so the headline percentages keep the pure-rerun denominator
//! semantics.
//!
//! All saved fractions are in `[0, 1]`.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::replay::{Dataset, SimulationResult};

/// One day's savings, keyed by the UTC calendar date of the run starts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DailySavings {
    pub date: String,
    pub executions_total: u64,
    pub executions_saved: u64,
    pub executions_saved_pct: Option<f64>,
    pub seconds_total: Option<f64>,
    pub seconds_saved: Option<f64>,
    pub time_saved_pct: Option<f64>,
}

/// Mean of the daily saved fractions over a sliding window of 14 calendar
/// days ending at `date`; days absent from the dataset do not contribute.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MovingAveragePoint {
    pub date: String,
    pub executions_saved_pct: Option<f64>,
    pub time_saved_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SavingsReport {
    /// Pure-rerun execution count over all evaluable suites.
    pub executions_total: u64,
    pub executions_saved: u64,
    pub executions_spent: u64,
    pub executions_saved_pct: Option<f64>,
    /// Pure-rerun seconds; `None` when any evaluable suite lacks recorded
    /// durations, in which case all time figures are unavailable while the
    /// execution counts above remain exact.
    pub machine_time_total_seconds: Option<f64>,
    pub machine_time_saved_seconds: Option<f64>,
    pub machine_time_spent_seconds: Option<f64>,
    pub machine_time_saved_pct: Option<f64>,
    /// Rerun executions the hybrid skipped by stopping early at a pass,
    /// relative to the recorded history. Excluded from the headline saved
    /// figures.
    pub early_stop_executions_avoided: u64,
    pub early_stop_seconds_avoided: Option<f64>,
    pub per_day: Vec<DailySavings>,
    pub moving_average_14d: Vec<MovingAveragePoint>,
}

#[derive(Debug, Error)]
pub enum SavingsError {
    #[error(
        "result and dataset disagree at row {index}: result has {result_suite:?}, dataset has {dataset_suite:?}"
    )]
    ResultDatasetMismatch {
        index: usize,
        result_suite: String,
        dataset_suite: String,
    },
}

struct CostAccumulator {
    executions_total: u64,
    executions_saved: u64,
    executions_spent: u64,
    seconds_total: Option<f64>,
    seconds_saved: Option<f64>,
    seconds_spent: Option<f64>,
}

impl CostAccumulator {
    fn new() -> Self {
        Self {
            executions_total: 0,
            executions_saved: 0,
            executions_spent: 0,
            seconds_total: Some(0.0),
            seconds_saved: Some(0.0),
            seconds_spent: Some(0.0),
        }
    }

    fn add(
        &mut self,
        recorded_executions: u64,
        recorded_seconds: Option<f64>,
        saved_executions: u64,
        saved_seconds: Option<f64>,
        spent_executions: u64,
        spent_seconds: Option<f64>,
    ) {
        self.executions_total += recorded_executions;
        self.executions_saved += saved_executions;
        self.executions_spent += spent_executions;
        self.seconds_total = add_opt(self.seconds_total, recorded_seconds);
        self.seconds_saved = add_opt(self.seconds_saved, saved_seconds);
        self.seconds_spent = add_opt(self.seconds_spent, spent_seconds);
    }

    fn exec_pct(&self) -> Option<f64> {
        (self.executions_total > 0)
            .then(|| self.executions_saved as f64 / self.executions_total as f64)
    }

    fn time_pct(&self) -> Option<f64> {
        match (self.seconds_total, self.seconds_saved) {
            (Some(total), Some(saved)) if total > 0.0 => Some(saved / total),
            _ => None,
        }
    }
}

fn add_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    }
}

/// Computes headline, per-day, and moving-average savings for a replay
/// result. The dataset must be the one the result was produced from; rows
/// and dataset suites are matched positionally and verified by id.
pub fn compute_savings(
    result: &SimulationResult,
    dataset: &Dataset,
) -> Result<SavingsReport, SavingsError> {
    let mut total = CostAccumulator::new();
    let mut per_day: BTreeMap<String, CostAccumulator> = BTreeMap::new();
    let mut early_stop_executions_avoided = 0u64;
    let mut early_stop_seconds_avoided = Some(0.0f64);

    for (index, (row, suite)) in result
        .per_suite
        .iter()
        .zip(dataset.iter_suites())
        .enumerate()
    {
        if row.run_id != suite.run_id || row.suite_id != suite.suite_id {
            return Err(SavingsError::ResultDatasetMismatch {
                index,
                result_suite: format!("{}/{}", row.run_id, row.suite_id),
                dataset_suite: format!("{}/{}", suite.run_id, suite.suite_id),
            });
        }
        let (recorded_executions, recorded_seconds) = suite.recorded_rerun_cost();
        let spent_executions = u64::from(row.reruns_consumed);

        total.add(
            recorded_executions,
            recorded_seconds,
            row.executions_saved,
            row.machine_time_saved_seconds,
            spent_executions,
            row.machine_time_spent_seconds,
        );
        per_day
            .entry(row.date.clone())
            .or_insert_with(CostAccumulator::new)
            .add(
                recorded_executions,
                recorded_seconds,
                row.executions_saved,
                row.machine_time_saved_seconds,
                spent_executions,
                row.machine_time_spent_seconds,
            );

        // Early-stop reduction exists only on the rerun path.
        if row.executions_saved == 0 {
            early_stop_executions_avoided += recorded_executions - spent_executions;
            let avoided = match (recorded_seconds, row.machine_time_spent_seconds) {
                (Some(recorded), Some(spent)) => Some(recorded - spent),
                _ => None,
            };
            early_stop_seconds_avoided = add_opt(early_stop_seconds_avoided, avoided);
        }
    }

    let per_day: Vec<DailySavings> = per_day
        .into_iter()
        .map(|(date, acc)| DailySavings {
            executions_saved_pct: acc.exec_pct(),
            time_saved_pct: acc.time_pct(),
            executions_total: acc.executions_total,
            executions_saved: acc.executions_saved,
            seconds_total: acc.seconds_total,
            seconds_saved: acc.seconds_saved,
            date,
        })
        .collect();

    let moving_average_14d = moving_average(&per_day, 14);

    Ok(SavingsReport {
        executions_total: total.executions_total,
        executions_saved: total.executions_saved,
        executions_spent: total.executions_spent,
        executions_saved_pct: total.exec_pct(),
        machine_time_total_seconds: total.seconds_total,
        machine_time_saved_seconds: total.seconds_saved,
        machine_time_spent_seconds: total.seconds_spent,
        machine_time_saved_pct: total.time_pct(),
        early_stop_executions_avoided,
        early_stop_seconds_avoided,
        per_day,
        moving_average_14d,
    })
}

fn moving_average(per_day: &[DailySavings], window_days: i64) -> Vec<MovingAveragePoint> {
    let dates: Vec<NaiveDate> = per_day
        .iter()
        .map(|day| {
            NaiveDate::parse_from_str(&day.date, "%Y-%m-%d")
                .expect("per-day keys are canonical dates")
        })
        .collect();

    fn mean(values: &[f64]) -> Option<f64> {
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    per_day
        .iter()
        .enumerate()
        .map(|(i, day)| {
            let window_start = dates[i] - Duration::days(window_days - 1);
            let mut exec_values = Vec::new();
            let mut time_values = Vec::new();
            for (other, date) in per_day.iter().zip(&dates) {
                if *date >= window_start && *date <= dates[i] {
                    exec_values.extend(other.executions_saved_pct);
                    time_values.extend(other.time_saved_pct);
                }
            }
            MovingAveragePoint {
                date: day.date.clone(),
                executions_saved_pct: mean(&exec_values),
                time_saved_pct: mean(&time_values),
            }
        })
        .collect()
}
