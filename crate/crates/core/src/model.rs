//! Shared domain types: symptoms, suite failures, CI runs, and detection verdicts.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One call frame of a purified stack trace: the file path as it appeared in
/// the traceback plus the function name. Line numbers and source echoes are
/// dropped during parsing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StackFrame {
    pub file: String,
    pub function: String,
}

impl StackFrame {
    pub fn new(file: impl Into<String>, function: impl Into<String>) -> Self {
        Self {
            file: file.into(),
            function: function.into(),
        }
    }
}

impl fmt::Display for StackFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.file, self.function)
    }
}

/// A test-case failure's raw output before any abstraction: the stack trace
/// text (possibly empty or malformed) and the error message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSymptom {
    pub trace_text: String,
    pub message: String,
}

impl RawSymptom {
    pub fn new(trace_text: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            trace_text: trace_text.into(),
            message: message.into(),
        }
    }

    /// A symptom with an empty (after trimming) message carries no signal and
    /// is rejected by abstraction.
    pub fn has_message(&self) -> bool {
        !self.message.trim().is_empty()
    }
}

/// A failure symptom after purification and masking. Equality and hashing are
/// defined by byte equality of the canonical text form, which is the case
/// memory key.
#[derive(Clone, Debug)]
pub struct AbstractedSymptom {
    frames: Vec<StackFrame>,
    masked_message: String,
    canonical: String,
}

impl AbstractedSymptom {
    /// Builds the symptom and its canonical serialization:
    ///
    /// ```text
    /// [callstack]
    /// <file>,<function>     (one line per frame, outermost first)
    /// [message]
    /// <masked message verbatim>
    /// ```
    ///
    /// UTF-8, LF line endings, no trailing newline. An empty frame list puts
    /// `[message]` directly after `[callstack]`.
    pub fn new(frames: Vec<StackFrame>, masked_message: String) -> Self {
        let mut canonical = String::with_capacity(masked_message.len() + frames.len() * 32 + 24);
        canonical.push_str("[callstack]\n");
        for frame in &frames {
            canonical.push_str(&frame.file);
            canonical.push(',');
            canonical.push_str(&frame.function);
            canonical.push('\n');
        }
        canonical.push_str("[message]\n");
        canonical.push_str(&masked_message);
        Self {
            frames,
            masked_message,
            canonical,
        }
    }

    pub fn frames(&self) -> &[StackFrame] {
        &self.frames
    }

    pub fn masked_message(&self) -> &str {
        &self.masked_message
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn into_canonical(self) -> String {
        self.canonical
    }
}

impl PartialEq for AbstractedSymptom {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for AbstractedSymptom {}

impl Hash for AbstractedSymptom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl fmt::Display for AbstractedSymptom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

/// Outcome of a single test-suite execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RerunOutcome {
    Pass,
    Fail,
}

/// One recorded rerun of a failed suite: its outcome and, when the data
/// source kept it, its duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedRerun {
    pub outcome: RerunOutcome,
    pub duration_seconds: Option<f64>,
}

impl RecordedRerun {
    pub fn new(outcome: RerunOutcome, duration_seconds: f64) -> Self {
        Self {
            outcome,
            duration_seconds: Some(duration_seconds),
        }
    }

    pub fn pass(duration_seconds: f64) -> Self {
        Self::new(RerunOutcome::Pass, duration_seconds)
    }

    pub fn fail(duration_seconds: f64) -> Self {
        Self::new(RerunOutcome::Fail, duration_seconds)
    }
}

/// A UTC timestamp held in a canonical fixed-width text form
/// (`YYYY-MM-DDTHH:MM:SS.ffffffZ`) so that lexicographic order equals
/// chronological order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct UtcTimestamp(String);

impl UtcTimestamp {
    /// Parses an RFC 3339 / ISO-8601 timestamp, converts it to UTC, and
    /// normalizes it to the canonical microsecond form.
    pub fn parse(text: &str) -> Result<Self, TimestampError> {
        let parsed = DateTime::parse_from_rfc3339(text.trim())
            .map_err(|source| TimestampError::Unparseable {
                text: text.to_string(),
                source,
            })?
            .with_timezone(&Utc);
        Ok(Self::from_datetime(parsed))
    }

    pub fn from_datetime(at: DateTime<Utc>) -> Self {
        Self(at.format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The UTC calendar date (`YYYY-MM-DD`) this timestamp falls on.
    pub fn date_key(&self) -> &str {
        &self.0[..10]
    }

    pub fn date(&self) -> NaiveDate {
        NaiveDate::parse_from_str(self.date_key(), "%Y-%m-%d")
            .expect("canonical timestamp holds a valid date")
    }
}

impl fmt::Display for UtcTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for UtcTimestamp {
    type Error = TimestampError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<UtcTimestamp> for String {
    fn from(value: UtcTimestamp) -> Self {
        value.0
    }
}

#[derive(Debug, Error)]
pub enum TimestampError {
    #[error("timestamp {text:?} is not ISO-8601: {source}")]
    Unparseable {
        text: String,
        #[source]
        source: chrono::ParseError,
    },
}

/// One failed test-suite instance observed in a CI run, together with the
/// rerun history recorded for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteFailureRecord {
    pub run_id: String,
    pub suite_id: String,
    pub started_at: UtcTimestamp,
    /// Symptoms of the failed test cases, `(test_case_id, symptom)`. May be
    /// empty when the suite failed outside its test cases.
    pub case_symptoms: Vec<(String, RawSymptom)>,
    /// Rerun outcomes recorded by the data source, in execution order.
    pub recorded_reruns: Vec<RecordedRerun>,
    pub initial_failure_duration_seconds: f64,
}

impl SuiteFailureRecord {
    /// Total recorded rerun cost of this record: `(executions, seconds)`.
    /// Seconds are `None` when any recorded duration is missing.
    pub fn recorded_rerun_cost(&self) -> (u64, Option<f64>) {
        let executions = self.recorded_reruns.len() as u64;
        let seconds = self
            .recorded_reruns
            .iter()
            .map(|rerun| rerun.duration_seconds)
            .sum::<Option<f64>>();
        (executions, seconds)
    }
}

/// A single CI run: an ordered bag of suite failures sharing one `run_id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiRun {
    pub run_id: String,
    pub started_at: UtcTimestamp,
    pub suite_failures: Vec<SuiteFailureRecord>,
}

impl CiRun {
    /// Replay order: by start time, ties broken by `run_id`.
    pub fn replay_key(&self) -> (&UtcTimestamp, &str) {
        (&self.started_at, &self.run_id)
    }
}

/// Orders runs chronologically, `run_id` breaking start-time ties.
pub fn compare_runs(a: &CiRun, b: &CiRun) -> Ordering {
    a.replay_key().cmp(&b.replay_key())
}

/// Ground-truth flakiness of a suite failure, derived from its recorded
/// reruns: flaky iff at least one rerun passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    Flaky,
    NonFlaky,
}

impl GroundTruth {
    pub fn is_flaky(self) -> bool {
        matches!(self, GroundTruth::Flaky)
    }
}

impl fmt::Display for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundTruth::Flaky => f.write_str("flaky"),
            GroundTruth::NonFlaky => f.write_str("non_flaky"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LabelError {
    /// No recorded reruns, so no ground truth can be derived.
    #[error("suite {suite_id} in run {run_id} has no recorded reruns to label it")]
    UnlabeledRecord { run_id: String, suite_id: String },
}

/// Derives the ground-truth label from recorded reruns: flaky iff any rerun
/// passed, non-flaky iff all failed. Order-insensitive.
pub fn ground_truth_label(record: &SuiteFailureRecord) -> Result<GroundTruth, LabelError> {
    if record.recorded_reruns.is_empty() {
        return Err(LabelError::UnlabeledRecord {
            run_id: record.run_id.clone(),
            suite_id: record.suite_id.clone(),
        });
    }
    let any_pass = record
        .recorded_reruns
        .iter()
        .any(|rerun| rerun.outcome == RerunOutcome::Pass);
    Ok(if any_pass {
        GroundTruth::Flaky
    } else {
        GroundTruth::NonFlaky
    })
}

/// How a suite failure was classified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    /// Every symptom matched the case memory at the threshold; no reruns.
    FlakyByMatch,
    /// A rerun passed.
    FlakyByRerun,
    /// Every rerun in the budget failed.
    NonFlaky,
    /// No match and no rerun executor attached; the caller owns the reruns.
    NeedsRerun,
}

impl VerdictKind {
    /// Whether the symptom matcher predicted this failure flaky. Rerun-path
    /// verdicts are fallbacks, not predictions.
    pub fn predicted_flaky(self) -> bool {
        matches!(self, VerdictKind::FlakyByMatch)
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictKind::FlakyByMatch => f.write_str("flaky_by_match"),
            VerdictKind::FlakyByRerun => f.write_str("flaky_by_rerun"),
            VerdictKind::NonFlaky => f.write_str("non_flaky"),
            VerdictKind::NeedsRerun => f.write_str("needs_rerun"),
        }
    }
}

/// The full classification outcome for one suite failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub reruns_consumed: u32,
    /// Observation counts per matched symptom, present for
    /// [`VerdictKind::FlakyByMatch`].
    pub matched_counts: Option<Vec<(String, u64)>>,
}

impl Verdict {
    pub fn flaky_by_match(matched_counts: Vec<(String, u64)>) -> Self {
        Self {
            kind: VerdictKind::FlakyByMatch,
            reruns_consumed: 0,
            matched_counts: Some(matched_counts),
        }
    }

    pub fn flaky_by_rerun(reruns_consumed: u32) -> Self {
        debug_assert!(reruns_consumed >= 1);
        Self {
            kind: VerdictKind::FlakyByRerun,
            reruns_consumed,
            matched_counts: None,
        }
    }

    pub fn non_flaky(reruns_consumed: u32) -> Self {
        Self {
            kind: VerdictKind::NonFlaky,
            reruns_consumed,
            matched_counts: None,
        }
    }

    pub fn needs_rerun() -> Self {
        Self {
            kind: VerdictKind::NeedsRerun,
            reruns_consumed: 0,
            matched_counts: None,
        }
    }
}
