//! Chronological replay of the hybrid detection strategy over historical or
//! synthetic CI data: dataset ingestion, simulation, metrics, savings,
//! hyperparameter sweeps, corpus statistics, a synthetic data generator, and
//! a brute-force reference implementation used as a test oracle.

mod metrics;
mod reference;
mod savings;
mod simulate;
mod stats;
mod sweep;
mod synthetic;

pub use metrics::{compute_metrics, Metrics};
pub use reference::reference_simulate;
pub use savings::{compute_savings, DailySavings, MovingAveragePoint, SavingsError, SavingsReport};
pub use simulate::{
    simulate, simulate_sequential, Confusion, SimConfigEcho, SimulationResult, SuiteVerdictRow,
};
pub use stats::{unique_symptom_stats, UniqueSymptomStats};
pub use sweep::{sweep, sweep_csv, sweep_sequential, AblationSetting, SweepCell};
pub use synthetic::{
    generate_synthetic, DurationModel, FamilyManifest, GroundTruthManifest, NoiseParams,
    Recurrence, SuiteLabel, SyntheticOutput, SyntheticSpec, TemplateParams,
};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{symptom_validity, Denylist, DetectorError, Validity};
use crate::model::{
    compare_runs, ground_truth_label, CiRun, GroundTruth, LabelError, RawSymptom, RecordedRerun,
    RerunOutcome, SuiteFailureRecord, TimestampError, UtcTimestamp,
};

/// Wire form of one CI run: one JSON object per line in the dataset file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunWire {
    pub run_id: String,
    pub started_at: String,
    pub suites: Vec<SuiteWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteWire {
    pub suite_id: String,
    pub initial_failure_duration_seconds: f64,
    pub cases: Vec<CaseWire>,
    pub reruns: Vec<RerunWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseWire {
    pub test_case_id: String,
    pub trace: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RerunWire {
    pub outcome: RerunOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("dataset line {line}: {source}")]
    Timestamp {
        line: usize,
        #[source]
        source: TimestampError,
    },
    #[error("dataset line {line}: {detail}")]
    Schema { line: usize, detail: String },
    #[error("dataset holds two runs with id {run_id:?} and equal start times")]
    DuplicateRun { run_id: String },
}

/// Errors surfaced while replaying a dataset.
#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Label(#[from] LabelError),
}

/// Why suite failures were dropped at ingestion, mirroring the strata of the
/// dataset-construction filter: failures outside test cases, uninformative
/// messages, and records that no rerun history can label.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExclusionSummary {
    pub suites_total: usize,
    pub suites_with_case_failures: usize,
    pub suites_with_valid_symptoms: usize,
    pub suites_evaluable: usize,
    pub evaluable_flaky: usize,
    pub evaluable_non_flaky: usize,
    pub excluded_by_reason: BTreeMap<String, usize>,
}

impl ExclusionSummary {
    fn note_exclusion(&mut self, reason: &str) {
        *self
            .excluded_by_reason
            .entry(reason.to_string())
            .or_insert(0) += 1;
    }
}

/// An ingested dataset: runs in replay order, each holding only the suite
/// failures that survived filtering (valid symptoms and at least one
/// recorded rerun).
#[derive(Clone, Debug)]
pub struct Dataset {
    pub runs: Vec<CiRun>,
    pub provenance: String,
    pub exclusions: ExclusionSummary,
}

impl Dataset {
    /// Number of evaluable suite failures.
    pub fn suite_count(&self) -> usize {
        self.runs.iter().map(|run| run.suite_failures.len()).sum()
    }

    pub fn iter_suites(&self) -> impl Iterator<Item = &SuiteFailureRecord> {
        self.runs.iter().flat_map(|run| run.suite_failures.iter())
    }

    /// Ground-truth `(flaky, non_flaky)` counts over evaluable suites.
    pub fn label_counts(&self) -> (usize, usize) {
        let mut flaky = 0;
        let mut non_flaky = 0;
        for suite in self.iter_suites() {
            match ground_truth_label(suite) {
                Ok(GroundTruth::Flaky) => flaky += 1,
                Ok(GroundTruth::NonFlaky) => non_flaky += 1,
                Err(_) => unreachable!("evaluable suites have recorded reruns"),
            }
        }
        (flaky, non_flaky)
    }

    /// Serializes back to the JSON-lines interchange format, one run per
    /// line, trailing newline included.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for run in &self.runs {
            let wire = RunWire {
                run_id: run.run_id.clone(),
                started_at: run.started_at.as_str().to_string(),
                suites: run
                    .suite_failures
                    .iter()
                    .map(|suite| SuiteWire {
                        suite_id: suite.suite_id.clone(),
                        initial_failure_duration_seconds: suite.initial_failure_duration_seconds,
                        cases: suite
                            .case_symptoms
                            .iter()
                            .map(|(test_case_id, raw)| CaseWire {
                                test_case_id: test_case_id.clone(),
                                trace: raw.trace_text.clone(),
                                message: raw.message.clone(),
                            })
                            .collect(),
                        reruns: suite
                            .recorded_reruns
                            .iter()
                            .map(|rerun| RerunWire {
                                outcome: rerun.outcome,
                                duration_seconds: rerun.duration_seconds,
                            })
                            .collect(),
                    })
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&wire).expect("wire serialization is infallible"));
            out.push('\n');
        }
        out
    }
}

/// Reads a JSON-lines dataset file, applying the filtering and ordering
/// rules. See [`ingest_str`].
pub fn ingest(path: &Path, denylist: &Denylist) -> Result<Dataset, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_str(&text, denylist, &path.display().to_string())
}

/// Parses dataset text: one run per line. Runs are sorted by
/// `(started_at, run_id)`; suite failures without test-case failures, with an
/// uninformative message, or without rerun history are excluded and counted
/// in the returned summary.
pub fn ingest_str(
    text: &str,
    denylist: &Denylist,
    provenance: &str,
) -> Result<Dataset, IngestError> {
    let mut runs = Vec::new();
    let mut exclusions = ExclusionSummary::default();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let wire: RunWire = serde_json::from_str(line).map_err(|source| IngestError::Json {
            line: line_no,
            source,
        })?;
        if wire.run_id.is_empty() {
            return Err(IngestError::Schema {
                line: line_no,
                detail: "run_id is empty".into(),
            });
        }
        let started_at =
            UtcTimestamp::parse(&wire.started_at).map_err(|source| IngestError::Timestamp {
                line: line_no,
                source,
            })?;

        let mut suite_failures = Vec::new();
        for suite in wire.suites {
            if suite.suite_id.is_empty() {
                return Err(IngestError::Schema {
                    line: line_no,
                    detail: "suite_id is empty".into(),
                });
            }
            if suite.initial_failure_duration_seconds < 0.0
                || suite
                    .reruns
                    .iter()
                    .any(|r| r.duration_seconds.is_some_and(|d| d < 0.0))
            {
                return Err(IngestError::Schema {
                    line: line_no,
                    detail: format!("suite {:?} has a negative duration", suite.suite_id),
                });
            }

            exclusions.suites_total += 1;
            let record = SuiteFailureRecord {
                run_id: wire.run_id.clone(),
                suite_id: suite.suite_id,
                started_at: started_at.clone(),
                case_symptoms: suite
                    .cases
                    .into_iter()
                    .map(|case| (case.test_case_id, RawSymptom::new(case.trace, case.message)))
                    .collect(),
                recorded_reruns: suite
                    .reruns
                    .into_iter()
                    .map(|r| RecordedRerun {
                        outcome: r.outcome,
                        duration_seconds: r.duration_seconds,
                    })
                    .collect(),
                initial_failure_duration_seconds: suite.initial_failure_duration_seconds,
            };

            if !record.case_symptoms.is_empty() {
                exclusions.suites_with_case_failures += 1;
            }
            match symptom_validity(&record.case_symptoms, denylist) {
                Validity::Invalid(reason) => {
                    exclusions.note_exclusion(reason.code());
                    continue;
                }
                Validity::Valid => {}
            }
            exclusions.suites_with_valid_symptoms += 1;
            if record.recorded_reruns.is_empty() {
                exclusions.note_exclusion("no_recorded_reruns");
                continue;
            }
            exclusions.suites_evaluable += 1;
            match ground_truth_label(&record).expect("recorded reruns present") {
                GroundTruth::Flaky => exclusions.evaluable_flaky += 1,
                GroundTruth::NonFlaky => exclusions.evaluable_non_flaky += 1,
            }
            suite_failures.push(record);
        }

        runs.push(CiRun {
            run_id: wire.run_id,
            started_at,
            suite_failures,
        });
    }

    runs.sort_by(compare_runs);
    for pair in runs.windows(2) {
        if pair[0].replay_key() == pair[1].replay_key() {
            return Err(IngestError::DuplicateRun {
                run_id: pair[0].run_id.clone(),
            });
        }
    }

    Ok(Dataset {
        runs,
        provenance: provenance.to_string(),
        exclusions,
    })
}
