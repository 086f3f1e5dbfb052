//! Per-suite classification: validity filtering, symptom matching against the
//! case memory, and the rerun fallback.
//!
//! The decision flow for one failed suite:
//!
//! 1. suites without test-case failures, with an empty message, or with a
//!    denylisted message skip matching and go straight to reruns (their
//!    symptoms are never stored);
//! 2. otherwise the abstracted symptoms are matched against the case memory;
//!    a full match at threshold `T` ends the decision with zero reruns;
//! 3. on a miss the suite is rerun up to `K` times, stopping at the first
//!    pass unless early stop is disabled. Any pass verifies flakiness and
//!    stages a memory update; `K` failures classify the failure non-flaky.
//!
//! `classify` only ever *stages* updates. The caller applies staged updates
//! in one batch per CI run, so that parallel classifications within a run all
//! read the same memory snapshot.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use regex::Regex;
use thiserror::Error;

use crate::abstraction::{abstract_symptom, AbstractionConfig};
use crate::memory::{CaseMemory, FlakyObservation, UpdatePolicy};
use crate::model::{RawSymptom, RerunOutcome, SuiteFailureRecord, Verdict};

/// A single denylist rule for uninformative error messages.
#[derive(Clone, Debug)]
pub enum DenyPattern {
    /// Anchored full-message regular expression (`.` spans line breaks).
    Full { raw: String, regex: Regex },
    /// Literal substring containment.
    Substring(String),
}

impl DenyPattern {
    pub fn matches(&self, message: &str) -> bool {
        match self {
            DenyPattern::Full { regex, .. } => regex.is_match(message),
            DenyPattern::Substring(needle) => message.contains(needle.as_str()),
        }
    }

    pub fn source_text(&self) -> &str {
        match self {
            DenyPattern::Full { raw, .. } => raw,
            DenyPattern::Substring(needle) => needle,
        }
    }
}

/// Message patterns whose failures are excluded from symptom-based detection.
#[derive(Clone, Debug, Default)]
pub struct Denylist {
    patterns: Vec<DenyPattern>,
}

impl Denylist {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    /// Compiles patterns, failing fast on malformed regular expressions.
    /// Each pattern is a full-message anchored regex unless prefixed with
    /// `substr:`, which switches it to literal substring mode.
    pub fn compile<I, S>(patterns: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut compiled = Vec::new();
        for pattern in patterns {
            let pattern = pattern.as_ref();
            if let Some(needle) = pattern.strip_prefix("substr:") {
                compiled.push(DenyPattern::Substring(needle.to_string()));
                continue;
            }
            let anchored = format!("^(?s:{pattern})$");
            let regex = Regex::new(&anchored).map_err(|source| ConfigError::BadDenyPattern {
                pattern: pattern.to_string(),
                source,
            })?;
            compiled.push(DenyPattern::Full {
                raw: pattern.to_string(),
                regex,
            });
        }
        Ok(Self { patterns: compiled })
    }

    /// Parses the denylist file format: one pattern per line, `#` comment
    /// lines and blank lines ignored, optional `substr:` prefix.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::compile(
            text.lines()
                .map(str::trim)
                .filter(|line| !line.is_empty() && !line.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::DenylistIo {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The first pattern matching the message, if any.
    pub fn match_for(&self, message: &str) -> Option<&DenyPattern> {
        self.patterns.iter().find(|p| p.matches(message))
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("denylist pattern {pattern:?} is not a valid regular expression: {source}")]
    BadDenyPattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("cannot read denylist file {path}: {source}")]
    DenylistIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{field} must be at least 1, got {value}")]
    OutOfRange { field: &'static str, value: u32 },
}

/// Full detection configuration.
#[derive(Clone, Debug)]
pub struct DetectorConfig {
    /// Minimum observation count every symptom must reach for a
    /// flaky-by-match verdict (T).
    pub match_threshold: u32,
    /// Minimum distinct alphabetic tokens a message needs for its symptom to
    /// be stored (W).
    pub min_unique_words: u32,
    /// Rerun budget when matching misses (K).
    pub rerun_budget: u32,
    pub denylist: Denylist,
    pub abstraction: AbstractionConfig,
    /// Count a symptom once per suite rather than once per failing test case.
    pub dedupe_within_suite: bool,
    /// Stop rerunning at the first pass. The verdict is unaffected; only the
    /// consumed rerun count changes.
    pub early_stop: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            match_threshold: 1,
            min_unique_words: 1,
            rerun_budget: 3,
            denylist: Denylist::empty(),
            abstraction: AbstractionConfig::default(),
            dedupe_within_suite: false,
            early_stop: true,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, value) in [
            ("match threshold", self.match_threshold),
            ("minimum unique words", self.min_unique_words),
            ("rerun budget", self.rerun_budget),
        ] {
            if value < 1 {
                return Err(ConfigError::OutOfRange { field, value });
            }
        }
        Ok(())
    }

    pub fn update_policy(&self) -> UpdatePolicy {
        UpdatePolicy {
            min_unique_words: self.min_unique_words,
            dedupe_within_suite: self.dedupe_within_suite,
        }
    }
}

/// Why a suite failure is ineligible for symptom matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvalidReason {
    /// The suite failed outside its test cases; there is nothing to match.
    NoCaseFailures,
    /// A test case carried an empty error message.
    EmptyMessage { test_case_id: String },
    /// A message matched a denylist pattern.
    Denylisted {
        test_case_id: String,
        pattern: String,
    },
}

impl InvalidReason {
    pub fn code(&self) -> &'static str {
        match self {
            InvalidReason::NoCaseFailures => "no_case_failures",
            InvalidReason::EmptyMessage { .. } => "empty_message",
            InvalidReason::Denylisted { .. } => "denylisted",
        }
    }
}

/// Validity of a suite failure's symptoms for matching and storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(InvalidReason),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Checks that a suite failure has matchable symptoms: at least one test-case
/// failure, no empty messages, and no denylisted message.
pub fn symptom_validity(symptoms: &[(String, RawSymptom)], denylist: &Denylist) -> Validity {
    if symptoms.is_empty() {
        return Validity::Invalid(InvalidReason::NoCaseFailures);
    }
    for (test_case_id, symptom) in symptoms {
        if !symptom.has_message() {
            return Validity::Invalid(InvalidReason::EmptyMessage {
                test_case_id: test_case_id.clone(),
            });
        }
        if let Some(pattern) = denylist.match_for(&symptom.message) {
            return Validity::Invalid(InvalidReason::Denylisted {
                test_case_id: test_case_id.clone(),
                pattern: pattern.source_text().to_string(),
            });
        }
    }
    Validity::Valid
}

/// Executes reruns for a suite whose symptoms did not match.
pub trait RerunExecutor {
    /// Runs attempt `attempt` (0-based) for `suite_id`, returning the outcome
    /// and its duration when known.
    fn rerun(&mut self, suite_id: &str, attempt: u32) -> Result<RerunResult, RerunError>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RerunResult {
    pub outcome: RerunOutcome,
    pub duration_seconds: Option<f64>,
}

#[derive(Debug, Error)]
pub enum RerunError {
    /// A replay-backed executor ran out of recorded outcomes.
    #[error("recorded rerun history exhausted after {available} outcomes")]
    Exhausted { available: u32 },
    #[error("rerun execution failed: {0}")]
    Execution(String),
}

/// Replay-mode executor backed by the recorded rerun history of a suite
/// failure, consumed in order.
#[derive(Debug)]
pub struct RecordedRerunExecutor<'a> {
    record: &'a SuiteFailureRecord,
    cursor: usize,
}

impl<'a> RecordedRerunExecutor<'a> {
    pub fn new(record: &'a SuiteFailureRecord) -> Self {
        Self { record, cursor: 0 }
    }
}

impl RerunExecutor for RecordedRerunExecutor<'_> {
    fn rerun(&mut self, _suite_id: &str, _attempt: u32) -> Result<RerunResult, RerunError> {
        match self.record.recorded_reruns.get(self.cursor) {
            Some(rerun) => {
                self.cursor += 1;
                Ok(RerunResult {
                    outcome: rerun.outcome,
                    duration_seconds: rerun.duration_seconds,
                })
            }
            None => Err(RerunError::Exhausted {
                available: self.cursor as u32,
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Replay data could not satisfy the rerun demand for a suite.
    #[error("suite {suite_id} in run {run_id}: {source}")]
    ReplayData {
        run_id: String,
        suite_id: String,
        #[source]
        source: RerunError,
    },
}

/// Outcome of classifying one suite failure.
#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    /// Memory update to apply at the end of the CI run; staged only for
    /// rerun-verified flaky failures with valid symptoms.
    pub staged_update: Option<FlakyObservation>,
    /// Whether the symptoms were eligible for matching.
    pub validity: Validity,
    /// Durations of the reruns actually executed; `None` when any consumed
    /// rerun had no recorded duration.
    pub rerun_seconds_spent: Option<f64>,
}

/// Classifies one suite failure against a frozen memory snapshot.
///
/// With no executor attached, a matching miss yields a
/// [`crate::model::VerdictKind::NeedsRerun`] verdict and the caller owns the
/// rerun step.
pub fn classify(
    suite: &SuiteFailureRecord,
    memory: &CaseMemory,
    config: &DetectorConfig,
    executor: Option<&mut dyn RerunExecutor>,
) -> Result<Classification, DetectorError> {
    config.validate()?;
    let validity = symptom_validity(&suite.case_symptoms, &config.denylist);

    let abstracted: Option<Vec<(String, crate::model::AbstractedSymptom)>> = if validity.is_valid()
    {
        let mut list = Vec::with_capacity(suite.case_symptoms.len());
        for (test_case_id, raw) in &suite.case_symptoms {
            // Validity already screened empty messages.
            let symptom = abstract_symptom(raw, &config.abstraction)
                .expect("valid symptoms abstract cleanly");
            list.push((test_case_id.clone(), symptom));
        }
        Some(list)
    } else {
        None
    };

    if let Some(symptoms) = &abstracted {
        let distinct: Vec<&crate::model::AbstractedSymptom> = {
            let mut seen = HashSet::new();
            symptoms
                .iter()
                .map(|(_, s)| s)
                .filter(|s| seen.insert(s.canonical()))
                .collect()
        };
        // `symptoms` is non-empty here, so the matcher never sees an empty set.
        let matched = memory
            .is_flaky_match(distinct.iter().copied(), config.match_threshold)
            .expect("non-empty symptom set");
        if matched {
            let matched_counts = distinct
                .iter()
                .map(|s| (s.canonical().to_string(), memory.count_of(s)))
                .collect();
            return Ok(Classification {
                verdict: Verdict::flaky_by_match(matched_counts),
                staged_update: None,
                validity,
                rerun_seconds_spent: Some(0.0),
            });
        }
    }

    let Some(executor) = executor else {
        return Ok(Classification {
            verdict: Verdict::needs_rerun(),
            staged_update: None,
            validity,
            rerun_seconds_spent: Some(0.0),
        });
    };

    let mut consumed = 0u32;
    let mut passed = false;
    let mut seconds = Some(0.0f64);
    for attempt in 0..config.rerun_budget {
        let result = executor.rerun(&suite.suite_id, attempt).map_err(|source| {
            DetectorError::ReplayData {
                run_id: suite.run_id.clone(),
                suite_id: suite.suite_id.clone(),
                source,
            }
        })?;
        consumed += 1;
        seconds = match (seconds, result.duration_seconds) {
            (Some(total), Some(d)) => Some(total + d),
            _ => None,
        };
        if result.outcome == RerunOutcome::Pass {
            passed = true;
            if config.early_stop {
                break;
            }
        }
    }

    if passed {
        let staged_update = abstracted.map(|symptoms| FlakyObservation {
            run_id: suite.run_id.clone(),
            suite_id: suite.suite_id.clone(),
            symptoms,
        });
        Ok(Classification {
            verdict: Verdict::flaky_by_rerun(consumed),
            staged_update,
            validity,
            rerun_seconds_spent: seconds,
        })
    } else {
        Ok(Classification {
            verdict: Verdict::non_flaky(consumed),
            staged_update: None,
            validity,
            rerun_seconds_spent: seconds,
        })
    }
}
