//! The replay state machine: runs are processed strictly in chronological
//! order against a case memory that starts empty; within a run every suite
//! failure is classified against the run-start memory snapshot, and the
//! staged updates from rerun-verified flaky failures are applied in one batch
//! at run end.
//!
//! Suites within a run are classified in parallel when the `parallel` feature
//! is enabled. The snapshot-and-batch protocol makes the output independent
//! of intra-run scheduling; results are collected in suite order and all
//! aggregation is sequential, so parallel and sequential replays are
//! bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{classify, DetectorConfig, RecordedRerunExecutor};
use crate::memory::{CaseMemory, FlakyObservation};
use crate::model::{ground_truth_label, CiRun, GroundTruth, SuiteFailureRecord, VerdictKind};
use crate::replay::{Dataset, ReplayError};

/// The hyperparameters a result was produced under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SimConfigEcho {
    pub match_threshold: u32,
    pub min_unique_words: u32,
    pub rerun_budget: u32,
    pub purification: bool,
    pub masking: bool,
    pub early_stop: bool,
    pub dedupe_within_suite: bool,
}

impl SimConfigEcho {
    fn from_config(config: &DetectorConfig) -> Self {
        Self {
            match_threshold: config.match_threshold,
            min_unique_words: config.min_unique_words,
            rerun_budget: config.rerun_budget,
            purification: config.abstraction.purification_enabled,
            masking: config.abstraction.masking_enabled,
            early_stop: config.early_stop,
            dedupe_within_suite: config.dedupe_within_suite,
        }
    }
}

/// Confusion counts with flaky as the positive class. Predicted-positive
/// means flaky-by-match; the rerun path is the fallback, not a prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub true_positive: u64,
    pub false_positive: u64,
    pub true_negative: u64,
    pub false_negative: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }

    pub fn observe(&mut self, predicted_flaky: bool, ground_truth: GroundTruth) {
        match (predicted_flaky, ground_truth) {
            (true, GroundTruth::Flaky) => self.true_positive += 1,
            (true, GroundTruth::NonFlaky) => self.false_positive += 1,
            (false, GroundTruth::Flaky) => self.false_negative += 1,
            (false, GroundTruth::NonFlaky) => self.true_negative += 1,
        }
    }
}

/// Per-suite replay outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteVerdictRow {
    pub run_id: String,
    pub suite_id: String,
    /// UTC calendar date of the run start.
    pub date: String,
    pub verdict: VerdictKind,
    pub ground_truth: GroundTruth,
    pub reruns_consumed: u32,
    /// Rerun seconds actually spent; `None` when a consumed rerun had no
    /// recorded duration.
    pub machine_time_spent_seconds: Option<f64>,
    /// Recorded rerun seconds avoided by a match verdict.
    pub machine_time_saved_seconds: Option<f64>,
    /// Recorded rerun executions avoided by a match verdict.
    pub executions_saved: u64,
}

/// Replay output: per-suite rows in replay order plus aggregate counts.
#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub per_suite: Vec<SuiteVerdictRow>,
    pub confusion: Confusion,
    pub config: SimConfigEcho,
    /// Memory state after the final run, for grouping reports.
    pub final_memory: CaseMemory,
}

impl SimulationResult {
    pub fn verdict_count(&self, kind: VerdictKind) -> u64 {
        self.per_suite
            .iter()
            .filter(|row| row.verdict == kind)
            .count() as u64
    }
}

type SuiteOutcome = (SuiteVerdictRow, Option<FlakyObservation>);

/// Runs with fewer suite failures than this classify sequentially even in
/// parallel mode; fork-join overhead outweighs the per-suite work on small
/// batches.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_SUITES: usize = 64;

fn classify_one(
    suite: &SuiteFailureRecord,
    memory: &CaseMemory,
    config: &DetectorConfig,
) -> Result<SuiteOutcome, ReplayError> {
    let ground_truth = ground_truth_label(suite)?;
    let mut executor = RecordedRerunExecutor::new(suite);
    let classification = classify(suite, memory, config, Some(&mut executor))?;

    let (recorded_executions, recorded_seconds) = suite.recorded_rerun_cost();
    let verdict = classification.verdict;
    let (spent, saved, executions_saved) = if verdict.kind == VerdictKind::FlakyByMatch {
        (Some(0.0), recorded_seconds, recorded_executions)
    } else {
        (classification.rerun_seconds_spent, Some(0.0), 0)
    };

    let row = SuiteVerdictRow {
        run_id: suite.run_id.clone(),
        suite_id: suite.suite_id.clone(),
        date: suite.started_at.date_key().to_string(),
        verdict: verdict.kind,
        ground_truth,
        reruns_consumed: verdict.reruns_consumed,
        machine_time_spent_seconds: spent,
        machine_time_saved_seconds: saved,
        executions_saved,
    };
    Ok((row, classification.staged_update))
}

#[cfg(feature = "parallel")]
fn classify_run_parallel(
    run: &CiRun,
    memory: &CaseMemory,
    config: &DetectorConfig,
) -> Vec<Result<SuiteOutcome, ReplayError>> {
    run.suite_failures
        .par_iter()
        .map(|suite| classify_one(suite, memory, config))
        .collect()
}

fn classify_run_sequential(
    run: &CiRun,
    memory: &CaseMemory,
    config: &DetectorConfig,
) -> Vec<Result<SuiteOutcome, ReplayError>> {
    run.suite_failures
        .iter()
        .map(|suite| classify_one(suite, memory, config))
        .collect()
}

fn simulate_impl(
    dataset: &Dataset,
    config: &DetectorConfig,
    parallel: bool,
) -> Result<SimulationResult, ReplayError> {
    config
        .validate()
        .map_err(crate::detector::DetectorError::from)?;
    let policy = config.update_policy();
    let mut memory = CaseMemory::new();
    let mut per_suite = Vec::with_capacity(dataset.suite_count());
    let mut confusion = Confusion::default();

    for run in &dataset.runs {
        #[cfg(feature = "parallel")]
        let outcomes = if parallel && run.suite_failures.len() >= MIN_PARALLEL_SUITES {
            classify_run_parallel(run, &memory, config)
        } else {
            classify_run_sequential(run, &memory, config)
        };
        #[cfg(not(feature = "parallel"))]
        let outcomes = {
            let _ = parallel;
            classify_run_sequential(run, &memory, config)
        };

        let mut staged = Vec::new();
        for outcome in outcomes {
            let (row, update) = outcome?;
            confusion.observe(VerdictKind::predicted_flaky(row.verdict), row.ground_truth);
            per_suite.push(row);
            if let Some(update) = update {
                staged.push(update);
            }
        }
        memory.merge_batch(&staged, &policy);
    }

    Ok(SimulationResult {
        per_suite,
        confusion,
        config: SimConfigEcho::from_config(config),
        final_memory: memory,
    })
}

/// Replays the hybrid strategy over the dataset, starting from an empty case
/// memory. Classifies suites within a run in parallel when the `parallel`
/// feature is enabled.
pub fn simulate(
    dataset: &Dataset,
    config: &DetectorConfig,
) -> Result<SimulationResult, ReplayError> {
    simulate_impl(dataset, config, true)
}

/// Same protocol as [`simulate`] but strictly single-threaded. Output is
/// identical; exists as the fallback path and for benchmarking the parallel
/// speedup.
pub fn simulate_sequential(
    dataset: &Dataset,
    config: &DetectorConfig,
) -> Result<SimulationResult, ReplayError> {
    simulate_impl(dataset, config, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Denylist;
    use crate::replay::ingest_str;

    fn dataset_from_lines(lines: &[String]) -> Dataset {
        ingest_str(&lines.join("\n"), &Denylist::empty(), "test").unwrap()
    }

    fn run_line(run_id: &str, started_at: &str, suites: &[(&str, &str, &str)]) -> String {
        let suites_json: Vec<String> = suites
            .iter()
            .map(|(suite_id, message, reruns)| {
                format!(
                    r#"{{"suite_id":"{suite_id}","initial_failure_duration_seconds":60.0,"cases":[{{"test_case_id":"tc0","trace":"","message":"{message}"}}],"reruns":[{reruns}]}}"#
                )
            })
            .collect();
        format!(
            r#"{{"run_id":"{run_id}","started_at":"{started_at}","suites":[{}]}}"#,
            suites_json.join(",")
        )
    }

    const FLAKY_RERUNS: &str = r#"{"outcome":"fail","duration_seconds":10.0},{"outcome":"pass","duration_seconds":12.0},{"outcome":"fail","duration_seconds":11.0}"#;
    const SOLID_RERUNS: &str = r#"{"outcome":"fail","duration_seconds":10.0},{"outcome":"fail","duration_seconds":10.0},{"outcome":"fail","duration_seconds":10.0}"#;

    #[test]
    fn recurring_symptom_matches_on_second_run() {
        let dataset = dataset_from_lines(&[
            run_line(
                "r1",
                "2022-01-01T00:00:00Z",
                &[("s", "connection pool exhausted", FLAKY_RERUNS)],
            ),
            run_line(
                "r2",
                "2022-01-01T01:00:00Z",
                &[("s", "connection pool exhausted", FLAKY_RERUNS)],
            ),
        ]);
        let result = simulate(&dataset, &DetectorConfig::default()).unwrap();
        assert_eq!(result.per_suite[0].verdict, VerdictKind::FlakyByRerun);
        assert_eq!(result.per_suite[1].verdict, VerdictKind::FlakyByMatch);
        assert_eq!(result.per_suite[1].reruns_consumed, 0);
        assert_eq!(result.per_suite[1].executions_saved, 3);
        assert_eq!(result.confusion.true_positive, 1);
        assert_eq!(result.confusion.false_negative, 1);
    }

    #[test]
    fn non_qualifying_symptom_is_never_stored() {
        // Message has zero alphabetic tokens, so it stays below any word
        // threshold and the second occurrence reruns again.
        let dataset = dataset_from_lines(&[
            run_line(
                "r1",
                "2022-01-01T00:00:00Z",
                &[("s", "### 123", FLAKY_RERUNS)],
            ),
            run_line(
                "r2",
                "2022-01-01T01:00:00Z",
                &[("s", "### 123", FLAKY_RERUNS)],
            ),
        ]);
        let result = simulate(&dataset, &DetectorConfig::default()).unwrap();
        assert_eq!(result.per_suite[0].verdict, VerdictKind::FlakyByRerun);
        assert_eq!(result.per_suite[1].verdict, VerdictKind::FlakyByRerun);
        assert!(result.final_memory.is_empty());
    }

    #[test]
    fn suites_in_one_run_read_the_same_snapshot() {
        // Both suites share a symptom; neither sees the other's staged update.
        let dataset = dataset_from_lines(&[run_line(
            "r1",
            "2022-01-01T00:00:00Z",
            &[
                ("sA", "shared symptom text", FLAKY_RERUNS),
                ("sB", "shared symptom text", FLAKY_RERUNS),
            ],
        )]);
        let result = simulate(&dataset, &DetectorConfig::default()).unwrap();
        assert!(result
            .per_suite
            .iter()
            .all(|row| row.verdict == VerdictKind::FlakyByRerun));
        // Both updates landed in the end-of-run batch.
        let canonical = "[callstack]\n[message]\nshared symptom text";
        assert_eq!(result.final_memory.count_of_canonical(canonical), 2);
    }

    #[test]
    fn non_flaky_consumes_full_budget_and_stores_nothing() {
        let dataset = dataset_from_lines(&[run_line(
            "r1",
            "2022-01-01T00:00:00Z",
            &[("s", "assertion failed badly", SOLID_RERUNS)],
        )]);
        let result = simulate(&dataset, &DetectorConfig::default()).unwrap();
        assert_eq!(result.per_suite[0].verdict, VerdictKind::NonFlaky);
        assert_eq!(result.per_suite[0].reruns_consumed, 3);
        assert_eq!(result.per_suite[0].machine_time_spent_seconds, Some(30.0));
        assert!(result.final_memory.is_empty());
        assert_eq!(result.confusion.true_negative, 1);
    }

    #[test]
    fn suite_order_within_a_run_does_not_change_outcomes() {
        let suites = [
            ("sA", "alpha failure mode", FLAKY_RERUNS),
            ("sB", "beta failure mode", SOLID_RERUNS),
            ("sC", "alpha failure mode", FLAKY_RERUNS),
            ("sD", "gamma failure mode", FLAKY_RERUNS),
        ];
        let mut shuffled = suites;
        shuffled.swap(0, 3);
        shuffled.swap(1, 2);

        let d1 = dataset_from_lines(&[
            run_line("r1", "2022-01-01T00:00:00Z", &suites),
            run_line("r2", "2022-01-01T01:00:00Z", &suites),
        ]);
        let d2 = dataset_from_lines(&[
            run_line("r1", "2022-01-01T00:00:00Z", &shuffled),
            run_line("r2", "2022-01-01T01:00:00Z", &shuffled),
        ]);
        let r1 = simulate(&d1, &DetectorConfig::default()).unwrap();
        let r2 = simulate(&d2, &DetectorConfig::default()).unwrap();
        assert_eq!(r1.confusion, r2.confusion);

        let mut rows1 = r1.per_suite.clone();
        let mut rows2 = r2.per_suite.clone();
        let key = |row: &SuiteVerdictRow| (row.run_id.clone(), row.suite_id.clone());
        rows1.sort_by_key(key);
        rows2.sort_by_key(key);
        assert_eq!(rows1, rows2);
    }

    #[test]
    fn replay_never_emits_needs_rerun() {
        let dataset = dataset_from_lines(&[
            run_line(
                "r1",
                "2022-01-01T00:00:00Z",
                &[
                    ("sA", "first failure kind", FLAKY_RERUNS),
                    ("sB", "second failure kind", SOLID_RERUNS),
                ],
            ),
            run_line(
                "r2",
                "2022-01-01T01:00:00Z",
                &[("sC", "first failure kind", FLAKY_RERUNS)],
            ),
        ]);
        let result = simulate(&dataset, &DetectorConfig::default()).unwrap();
        assert!(result
            .per_suite
            .iter()
            .all(|row| row.verdict != VerdictKind::NeedsRerun));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let dataset = dataset_from_lines(&[
            run_line(
                "r1",
                "2022-01-01T00:00:00Z",
                &[
                    ("sA", "alpha failure mode", FLAKY_RERUNS),
                    ("sB", "beta failure mode", SOLID_RERUNS),
                ],
            ),
            run_line(
                "r2",
                "2022-01-01T01:00:00Z",
                &[("sC", "alpha failure mode", FLAKY_RERUNS)],
            ),
        ]);
        let config = DetectorConfig::default();
        let par = simulate(&dataset, &config).unwrap();
        let seq = simulate_sequential(&dataset, &config).unwrap();
        assert_eq!(par.per_suite, seq.per_suite);
        assert_eq!(par.confusion, seq.confusion);
    }

    #[test]
    fn higher_threshold_defers_matching() {
        let lines: Vec<String> = (0..4)
            .map(|i| {
                run_line(
                    &format!("r{i}"),
                    &format!("2022-01-01T0{i}:00:00Z"),
                    &[("s", "recurring network glitch", FLAKY_RERUNS)],
                )
            })
            .collect();
        let dataset = dataset_from_lines(&lines);
        let config = DetectorConfig {
            match_threshold: 2,
            ..DetectorConfig::default()
        };
        let result = simulate(&dataset, &config).unwrap();
        let verdicts: Vec<VerdictKind> = result.per_suite.iter().map(|r| r.verdict).collect();
        // Occurrences 1 and 2 rerun (counts 0 and 1 below T=2); from the
        // third on the count stays at 2 because match verdicts do not update.
        assert_eq!(
            verdicts,
            vec![
                VerdictKind::FlakyByRerun,
                VerdictKind::FlakyByRerun,
                VerdictKind::FlakyByMatch,
                VerdictKind::FlakyByMatch,
            ]
        );
    }
}
