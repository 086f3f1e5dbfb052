//! Library-level workflow tests: the just-in-time decision loop as a CI
//! integration would drive it, and the file round trip from generated data
//! through ingestion to replay.

use flakesieve_core::memory::UpdatePolicy;
use flakesieve_core::model::{RecordedRerun, UtcTimestamp, VerdictKind};
use flakesieve_core::replay::{
    generate_synthetic, ingest_str, DurationModel, NoiseParams, Recurrence, SyntheticSpec,
    TemplateParams,
};
use flakesieve_core::{
    classify, simulate, CaseMemory, Denylist, DetectorConfig, RawSymptom, SuiteFailureRecord,
};

fn failure(run_id: &str, message: &str, reruns: Vec<RecordedRerun>) -> SuiteFailureRecord {
    SuiteFailureRecord {
        run_id: run_id.to_string(),
        suite_id: "suite-db".to_string(),
        started_at: UtcTimestamp::parse("2022-03-01T08:00:00Z").unwrap(),
        case_symptoms: vec![("test_connect".to_string(), RawSymptom::new("", message))],
        recorded_reruns: reruns,
        initial_failure_duration_seconds: 45.0,
    }
}

/// Live-mode loop: first sighting needs a rerun, the caller verifies
/// flakiness and records, and the recurrence is flagged without reruns.
#[test]
fn just_in_time_loop_over_the_public_api() {
    let config = DetectorConfig::default();
    let mut memory = CaseMemory::new();

    // New failure arrives; no executor is attached in live mode.
    let first = failure("run-1", "connection reset by peer port 30024", vec![]);
    let outcome = classify(&first, &memory, &config, None).unwrap();
    assert_eq!(outcome.verdict.kind, VerdictKind::NeedsRerun);

    // The CI system reran the suite and saw a pass; it records the symptoms.
    let symptom =
        flakesieve_core::abstract_symptom(&first.case_symptoms[0].1, &config.abstraction).unwrap();
    memory.record_flaky(
        &flakesieve_core::FlakyObservation {
            run_id: first.run_id.clone(),
            suite_id: first.suite_id.clone(),
            symptoms: vec![("test_connect".to_string(), symptom)],
        },
        &UpdatePolicy::default(),
    );

    // The same failure mode with different numbers now matches outright.
    let second = failure("run-2", "connection reset by peer port 31999", vec![]);
    let outcome = classify(&second, &memory, &config, None).unwrap();
    assert_eq!(outcome.verdict.kind, VerdictKind::FlakyByMatch);
    assert_eq!(outcome.verdict.reruns_consumed, 0);

    // An unrelated failure still needs the rerun fallback.
    let other = failure("run-3", "segmentation fault in planner", vec![]);
    let outcome = classify(&other, &memory, &config, None).unwrap();
    assert_eq!(outcome.verdict.kind, VerdictKind::NeedsRerun);
}

/// Generated data written to the interchange format and read back replays to
/// the same result as the in-memory dataset.
#[test]
fn file_round_trip_replays_identically() {
    let spec = SyntheticSpec {
        number_of_runs: 30,
        runs_per_day: 10,
        flaky_family_count: 5,
        family_recurrence: Recurrence::Uniform { min: 2, max: 8 },
        non_flaky_rate: 0.3,
        templates: TemplateParams::default(),
        noise: NoiseParams::default(),
        durations: DurationModel::default(),
        rerun_budget: 3,
        seed: 321,
    };
    let generated = generate_synthetic(&spec).unwrap().dataset;
    let text = generated.to_jsonl();
    let reloaded = ingest_str(&text, &Denylist::empty(), "round trip").unwrap();

    let config = DetectorConfig {
        abstraction: SyntheticSpec::abstraction_config(),
        ..DetectorConfig::default()
    };
    let a = simulate(&generated, &config).unwrap();
    let b = simulate(&reloaded, &config).unwrap();
    assert_eq!(a.per_suite, b.per_suite);
    assert_eq!(a.confusion, b.confusion);
    assert_eq!(
        a.final_memory.group_report(1),
        b.final_memory.group_report(1)
    );
}
