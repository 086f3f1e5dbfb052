//! The case memory: a persistent map from canonical flaky-failure symptom to
//! its observation count.
//!
//! Only rerun-verified flaky failures are recorded (a finite number of reruns
//! can prove flakiness but never non-flakiness, so non-flaky symptoms cannot
//! be collected reliably). Entries are never evicted or decayed.
//!
//! Concurrency contract: many concurrent readers or one exclusive writer.
//! `CaseMemory` is plain data (`Send + Sync`); shared `&CaseMemory` lookups
//! during a batch of classifications and a single `&mut` batch application
//! give readers either the pre-batch or post-batch state, never a partially
//! applied one.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::unique_alphabetic_tokens;
use crate::model::AbstractedSymptom;

/// On-disk format version this build reads and writes.
pub const MEMORY_FORMAT_VERSION: u32 = 1;

/// Past this many distinct symptoms a warning is logged on insert. Never
/// enforced.
const ENTRY_WARN_THRESHOLD: usize = 1_000_000;

/// Per-symptom state: the observation count plus provenance for grouping
/// reports.
#[derive(Clone, Debug, Default)]
pub struct MemoryEntry {
    count: u64,
    first_seen_run: String,
    last_seen_run: String,
    distinct_test_cases: u64,
    distinct_runs: u64,
    // Identity sets behind the distinct counters. They are not part of the
    // file format: within one process the counters are exact (replays run in
    // one process), while across save/load cycles deduplication restarts and
    // the counters become upper bounds.
    seen_cases: HashSet<String>,
    seen_runs: HashSet<String>,
}

impl MemoryEntry {
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn first_seen_run(&self) -> &str {
        &self.first_seen_run
    }

    pub fn last_seen_run(&self) -> &str {
        &self.last_seen_run
    }

    pub fn distinct_test_cases(&self) -> u64 {
        self.distinct_test_cases
    }

    pub fn distinct_runs(&self) -> u64 {
        self.distinct_runs
    }

    fn observe(&mut self, test_case_id: &str, run_id: &str, increment: u64) {
        if self.count == 0 {
            self.first_seen_run = run_id.to_string();
        }
        self.count += increment;
        self.last_seen_run = run_id.to_string();
        if self.seen_cases.insert(test_case_id.to_string()) {
            self.distinct_test_cases += 1;
        }
        if self.seen_runs.insert(run_id.to_string()) {
            self.distinct_runs += 1;
        }
    }
}

/// One verified-flaky suite failure's contribution to the memory: the
/// abstracted symptoms of its failed test cases.
#[derive(Clone, Debug)]
pub struct FlakyObservation {
    pub run_id: String,
    pub suite_id: String,
    /// `(test_case_id, symptom)` per failed test case.
    pub symptoms: Vec<(String, AbstractedSymptom)>,
}

/// Storage policy for updates.
#[derive(Clone, Copy, Debug)]
pub struct UpdatePolicy {
    /// Minimum distinct purely-alphabetic tokens a masked message needs for
    /// its symptom to be stored (the W filter).
    pub min_unique_words: u32,
    /// When set, a symptom shared by several test cases of one suite counts
    /// once per suite instead of once per occurrence.
    pub dedupe_within_suite: bool,
}

impl Default for UpdatePolicy {
    fn default() -> Self {
        Self {
            min_unique_words: 1,
            dedupe_within_suite: false,
        }
    }
}

impl UpdatePolicy {
    pub fn qualifies(&self, symptom: &AbstractedSymptom) -> bool {
        unique_alphabetic_tokens(symptom.masked_message()) >= self.min_unique_words as usize
    }
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("cannot match an empty symptom set")]
    EmptySymptomSet,
}

#[derive(Debug, Error)]
pub enum MemoryFormatError {
    #[error("cannot access memory file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("memory file {path} is empty")]
    EmptyFile { path: String },
    #[error("memory file {path} is not valid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("memory file {path} has format version {found}, this build reads version {expected}")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("memory file {path} is corrupt: {detail}")]
    Corrupt { path: String, detail: String },
}

#[derive(Serialize, Deserialize)]
struct MemoryFileWire {
    version: u32,
    entries: Vec<EntryWire>,
}

#[derive(Serialize, Deserialize)]
struct EntryWire {
    symptom: String,
    count: u64,
    first_seen_run: String,
    last_seen_run: String,
    distinct_test_cases: u64,
    distinct_runs: u64,
}

/// The case memory itself. Lookup of an absent symptom yields count 0.
#[derive(Clone, Debug, Default)]
pub struct CaseMemory {
    entries: HashMap<String, MemoryEntry>,
}

impl CaseMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, canonical: &str) -> Option<&MemoryEntry> {
        self.entries.get(canonical)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &MemoryEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Observation count for a symptom; 0 when absent.
    pub fn count_of(&self, symptom: &AbstractedSymptom) -> u64 {
        self.count_of_canonical(symptom.canonical())
    }

    pub fn count_of_canonical(&self, canonical: &str) -> u64 {
        self.entries.get(canonical).map_or(0, |entry| entry.count)
    }

    /// The count-based matching predicate: true iff every symptom in the set
    /// has an observation count of at least `threshold`. The empty set is
    /// rejected rather than vacuously matched.
    pub fn is_flaky_match<'a, I>(&self, symptoms: I, threshold: u32) -> Result<bool, MatchError>
    where
        I: IntoIterator<Item = &'a AbstractedSymptom>,
    {
        let mut any = false;
        for symptom in symptoms {
            any = true;
            if self.count_of(symptom) < u64::from(threshold) {
                return Ok(false);
            }
        }
        if !any {
            return Err(MatchError::EmptySymptomSet);
        }
        Ok(true)
    }

    /// Records a verified-flaky suite failure. Symptoms whose masked message
    /// falls below the policy's word threshold are skipped. Returns
    /// `(stored, skipped)` increment counts.
    pub fn record_flaky(
        &mut self,
        observation: &FlakyObservation,
        policy: &UpdatePolicy,
    ) -> (u64, u64) {
        let mut stored = 0;
        let mut skipped = 0;
        let mut counted_in_suite: HashSet<&str> = HashSet::new();
        for (test_case_id, symptom) in &observation.symptoms {
            if !policy.qualifies(symptom) {
                skipped += 1;
                continue;
            }
            let increment =
                if policy.dedupe_within_suite && !counted_in_suite.insert(symptom.canonical()) {
                    0
                } else {
                    1
                };
            let was_present = self.entries.contains_key(symptom.canonical());
            let entry = self
                .entries
                .entry(symptom.canonical().to_string())
                .or_default();
            entry.observe(test_case_id, &observation.run_id, increment);
            stored += increment;
            if !was_present && self.entries.len() == ENTRY_WARN_THRESHOLD {
                log::warn!(
                    "case memory reached {ENTRY_WARN_THRESHOLD} distinct symptoms; \
                     consider reviewing symptom quality"
                );
            }
        }
        (stored, skipped)
    }

    /// Applies a batch of observations collected from one CI run, equivalent
    /// to recording them sequentially sorted by `(suite_id, run_id)`. The
    /// exclusive borrow makes the batch atomic for readers.
    pub fn merge_batch(&mut self, batch: &[FlakyObservation], policy: &UpdatePolicy) {
        let mut ordered: Vec<&FlakyObservation> = batch.iter().collect();
        ordered.sort_by(|a, b| {
            (a.suite_id.as_str(), a.run_id.as_str()).cmp(&(b.suite_id.as_str(), b.run_id.as_str()))
        });
        for observation in ordered {
            self.record_flaky(observation, policy);
        }
    }

    /// Installs a bare count without provenance. Only the in-crate reference
    /// replay uses this to surface its unindexed store in result form.
    pub(crate) fn set_count_for_tests(&mut self, canonical: &str, count: u64) {
        let entry = self.entries.entry(canonical.to_string()).or_default();
        entry.count = count;
    }

    /// Entries with count >= `min_count`, sorted by count descending, ties by
    /// canonical text ascending.
    pub fn group_report(&self, min_count: u64) -> Vec<GroupReportRow> {
        let mut rows: Vec<GroupReportRow> = self
            .entries
            .iter()
            .filter(|(_, entry)| entry.count >= min_count)
            .map(|(canonical, entry)| GroupReportRow {
                symptom: canonical.clone(),
                count: entry.count,
                distinct_test_cases: entry.distinct_test_cases,
                distinct_runs: entry.distinct_runs,
            })
            .collect();
        rows.sort_by(|a, b| {
            b.count
                .cmp(&a.count)
                .then_with(|| a.symptom.cmp(&b.symptom))
        });
        rows
    }

    /// Serializes to the versioned JSON format, entries sorted by canonical
    /// text for reproducible diffs. The write goes through a temp file in the
    /// target directory followed by a rename, so a reader of `path` sees
    /// either the old or the new file, never a partial one.
    pub fn save(&self, path: &Path) -> Result<(), MemoryFormatError> {
        let io_err = |source| MemoryFormatError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut entries: Vec<EntryWire> = self
            .entries
            .iter()
            .map(|(canonical, entry)| EntryWire {
                symptom: canonical.clone(),
                count: entry.count,
                first_seen_run: entry.first_seen_run.clone(),
                last_seen_run: entry.last_seen_run.clone(),
                distinct_test_cases: entry.distinct_test_cases,
                distinct_runs: entry.distinct_runs,
            })
            .collect();
        entries.sort_by(|a, b| a.symptom.cmp(&b.symptom));
        let wire = MemoryFileWire {
            version: MEMORY_FORMAT_VERSION,
            entries,
        };
        let json = serde_json::to_string_pretty(&wire).expect("memory serialization is infallible");

        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        let mut tmp = match dir {
            Some(dir) => tempfile::NamedTempFile::new_in(dir),
            None => tempfile::NamedTempFile::new_in("."),
        }
        .map_err(io_err)?;
        tmp.write_all(json.as_bytes()).map_err(io_err)?;
        tmp.write_all(b"\n").map_err(io_err)?;
        tmp.flush().map_err(io_err)?;
        tmp.persist(path).map_err(|e| io_err(e.error)).map(|_| ())
    }

    /// Loads a memory file, rejecting empty files, unknown versions, and
    /// corrupt entries.
    pub fn load(path: &Path) -> Result<Self, MemoryFormatError> {
        let text = fs::read_to_string(path).map_err(|source| MemoryFormatError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if text.trim().is_empty() {
            return Err(MemoryFormatError::EmptyFile {
                path: path.display().to_string(),
            });
        }
        let wire: MemoryFileWire =
            serde_json::from_str(&text).map_err(|source| MemoryFormatError::Json {
                path: path.display().to_string(),
                source,
            })?;
        if wire.version != MEMORY_FORMAT_VERSION {
            return Err(MemoryFormatError::Version {
                path: path.display().to_string(),
                found: wire.version,
                expected: MEMORY_FORMAT_VERSION,
            });
        }
        let mut entries = HashMap::with_capacity(wire.entries.len());
        for entry in wire.entries {
            if entry.count == 0 {
                return Err(MemoryFormatError::Corrupt {
                    path: path.display().to_string(),
                    detail: format!("entry {:?} has count 0", entry.symptom),
                });
            }
            let previous = entries.insert(
                entry.symptom.clone(),
                MemoryEntry {
                    count: entry.count,
                    first_seen_run: entry.first_seen_run,
                    last_seen_run: entry.last_seen_run,
                    distinct_test_cases: entry.distinct_test_cases,
                    distinct_runs: entry.distinct_runs,
                    seen_cases: HashSet::new(),
                    seen_runs: HashSet::new(),
                },
            );
            if previous.is_some() {
                return Err(MemoryFormatError::Corrupt {
                    path: path.display().to_string(),
                    detail: format!("duplicate symptom {:?}", entry.symptom),
                });
            }
        }
        Ok(Self { entries })
    }
}

/// One row of the grouping report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupReportRow {
    pub symptom: String,
    pub count: u64,
    pub distinct_test_cases: u64,
    pub distinct_runs: u64,
}
