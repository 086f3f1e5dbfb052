//! Just-in-time flaky-test-failure detection from failure symptoms.
//!
//! A failed test suite's symptoms (stack traces and error messages) are
//! abstracted and matched against a persistent case memory of symptoms from
//! rerun-verified flaky failures. A full match classifies the failure flaky
//! without any reruns; a miss falls back to the conventional rerun strategy,
//! and rerun-verified flaky symptoms feed the memory for next time.
//!
//! The crate provides:
//!
//! - [`abstraction`]: stack-trace purification and number masking;
//! - [`memory`]: the case memory with its matching predicate, batched
//!   updates, grouping report, and atomic persistence;
//! - [`detector`]: per-suite classification with validity filtering and the
//!   rerun fallback;
//! - [`replay`]: chronological simulation over historical or synthetic CI
//!   data, with accuracy metrics, rerun-savings accounting, hyperparameter
//!   sweeps, and a deterministic synthetic data generator.
//!
//! Replay inner loops (within-run classification, sweep cells, corpus
//! statistics) are data-parallel under the default `parallel` feature and
//! fall back to sequential when it is disabled; both paths produce identical
//! output.

pub mod abstraction;
pub mod detector;
pub mod memory;
pub mod model;
pub mod replay;

pub use abstraction::{
    abstract_symptom, mask_numbers, parse_stack_trace, purify, unique_alphabetic_tokens,
    AbstractionConfig, AbstractionError, EntryPointPattern,
};
pub use detector::{
    classify, symptom_validity, Classification, ConfigError, Denylist, DetectorConfig,
    DetectorError, RecordedRerunExecutor, RerunExecutor, RerunResult, Validity,
};
pub use memory::{
    CaseMemory, FlakyObservation, GroupReportRow, MemoryFormatError, UpdatePolicy,
    MEMORY_FORMAT_VERSION,
};
pub use model::{
    ground_truth_label, AbstractedSymptom, CiRun, GroundTruth, RawSymptom, RecordedRerun,
    RerunOutcome, StackFrame, SuiteFailureRecord, UtcTimestamp, Verdict, VerdictKind,
};
pub use replay::{
    compute_metrics, compute_savings, generate_synthetic, ingest, simulate, simulate_sequential,
    sweep, sweep_csv, AblationSetting, Dataset, IngestError, Metrics, ReplayError, SavingsReport,
    SimulationResult, SweepCell, SyntheticSpec,
};
