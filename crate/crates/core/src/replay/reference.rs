//! A deliberately naive reimplementation of the replay protocol, used as a
//! test oracle for [`crate::replay::simulate`].
//!
//! It shares only the symptom abstraction functions with the production
//! path; matching, word counting, memory bookkeeping, and batching are all
//! reimplemented here the slow way: the memory is an unindexed list scanned
//! linearly, word counting walks characters into a deduplicated vector, and
//! reruns are never cut short. Verdicts and confusion counts must equal the
//! production replay on every dataset; consumed-rerun accounting matches
//! whenever early stopping is disabled there.

use crate::abstraction::abstract_symptom;
use crate::detector::{DetectorConfig, DetectorError, RerunError};
use crate::memory::CaseMemory;
use crate::model::{
    ground_truth_label, GroundTruth, RerunOutcome, SuiteFailureRecord, Verdict, VerdictKind,
};
use crate::replay::{
    Confusion, Dataset, ReplayError, SimConfigEcho, SimulationResult, SuiteVerdictRow,
};

/// Unindexed count store.
#[derive(Default)]
struct NaiveMemory {
    entries: Vec<(String, u64)>,
}

impl NaiveMemory {
    fn count(&self, canonical: &str) -> u64 {
        for (key, count) in &self.entries {
            if key == canonical {
                return *count;
            }
        }
        0
    }

    fn bump(&mut self, canonical: &str) {
        for (key, count) in &mut self.entries {
            if key == canonical {
                *count += 1;
                return;
            }
        }
        self.entries.push((canonical.to_string(), 1));
    }
}

/// Character-walking reimplementation of the distinct-alphabetic-token count.
fn naive_word_count(message: &str) -> usize {
    let mut tokens: Vec<String> = Vec::new();
    let mut current = String::new();
    for ch in message.chars().chain(std::iter::once(' ')) {
        if ch.is_alphabetic() {
            current.push(ch);
        } else if !current.is_empty() {
            let token = std::mem::take(&mut current);
            if !tokens.contains(&token) {
                tokens.push(token);
            }
        }
    }
    tokens.len()
}

fn naive_denylisted(config: &DetectorConfig, message: &str) -> bool {
    config.denylist.match_for(message).is_some()
}

struct StagedSuite {
    suite_id: String,
    canonicals: Vec<(String, String, usize)>, // (test_case_id, canonical, word_count)
}

/// Replays the protocol without indexes or early stopping. See the module
/// docs for the oracle contract.
pub fn reference_simulate(
    dataset: &Dataset,
    config: &DetectorConfig,
) -> Result<SimulationResult, ReplayError> {
    config
        .validate()
        .map_err(crate::detector::DetectorError::from)?;
    let mut memory = NaiveMemory::default();
    let mut per_suite = Vec::new();
    let mut confusion = Confusion::default();

    for run in &dataset.runs {
        let mut staged: Vec<StagedSuite> = Vec::new();

        for suite in &run.suite_failures {
            let ground_truth = ground_truth_label(suite)?;

            // Validity, re-derived step by step.
            let mut valid = !suite.case_symptoms.is_empty();
            if valid {
                for (_, raw) in &suite.case_symptoms {
                    if raw.message.trim().is_empty() || naive_denylisted(config, &raw.message) {
                        valid = false;
                        break;
                    }
                }
            }

            let mut canonicals: Vec<(String, String, usize)> = Vec::new();
            if valid {
                for (test_case_id, raw) in &suite.case_symptoms {
                    let symptom = abstract_symptom(raw, &config.abstraction)
                        .expect("valid symptoms abstract cleanly");
                    let words = naive_word_count(symptom.masked_message());
                    canonicals.push((test_case_id.clone(), symptom.into_canonical(), words));
                }
            }

            let mut matched = valid && !canonicals.is_empty();
            if matched {
                for (_, canonical, _) in &canonicals {
                    if memory.count(canonical) < u64::from(config.match_threshold) {
                        matched = false;
                        break;
                    }
                }
            }

            let verdict = if matched {
                let mut counts = Vec::new();
                for (_, canonical, _) in &canonicals {
                    if !counts.iter().any(|(c, _)| c == canonical) {
                        counts.push((canonical.clone(), memory.count(canonical)));
                    }
                }
                Verdict::flaky_by_match(counts)
            } else {
                // Consume the full budget from the recorded history.
                let mut passed = false;
                for attempt in 0..config.rerun_budget {
                    match suite.recorded_reruns.get(attempt as usize) {
                        Some(rerun) => {
                            if rerun.outcome == RerunOutcome::Pass {
                                passed = true;
                            }
                        }
                        None => {
                            return Err(ReplayError::Detector(DetectorError::ReplayData {
                                run_id: suite.run_id.clone(),
                                suite_id: suite.suite_id.clone(),
                                source: RerunError::Exhausted { available: attempt },
                            }));
                        }
                    }
                }
                if passed {
                    Verdict::flaky_by_rerun(config.rerun_budget)
                } else {
                    Verdict::non_flaky(config.rerun_budget)
                }
            };

            if verdict.kind == VerdictKind::FlakyByRerun && valid {
                staged.push(StagedSuite {
                    suite_id: suite.suite_id.clone(),
                    canonicals: canonicals.clone(),
                });
            }

            per_suite.push(build_row(suite, &verdict, ground_truth));
            confusion.observe(verdict.kind == VerdictKind::FlakyByMatch, ground_truth);
        }

        staged.sort_by(|a, b| a.suite_id.cmp(&b.suite_id));
        for suite in staged {
            for (_, canonical, words) in &suite.canonicals {
                if *words >= config.min_unique_words as usize {
                    memory.bump(canonical);
                }
            }
        }
    }

    let mut final_memory = CaseMemory::new();
    for (canonical, count) in memory.entries {
        final_memory.set_count_for_tests(&canonical, count);
    }

    Ok(SimulationResult {
        per_suite,
        confusion,
        config: SimConfigEcho {
            match_threshold: config.match_threshold,
            min_unique_words: config.min_unique_words,
            rerun_budget: config.rerun_budget,
            purification: config.abstraction.purification_enabled,
            masking: config.abstraction.masking_enabled,
            early_stop: false,
            dedupe_within_suite: false,
        },
        final_memory,
    })
}

fn build_row(
    suite: &SuiteFailureRecord,
    verdict: &Verdict,
    ground_truth: GroundTruth,
) -> SuiteVerdictRow {
    let (recorded_executions, recorded_seconds) = suite.recorded_rerun_cost();
    let consumed = verdict.reruns_consumed;
    let spent_seconds = suite.recorded_reruns[..consumed as usize]
        .iter()
        .map(|r| r.duration_seconds)
        .sum::<Option<f64>>();
    let (spent, saved, executions_saved) = if verdict.kind == VerdictKind::FlakyByMatch {
        (Some(0.0), recorded_seconds, recorded_executions)
    } else {
        (spent_seconds, Some(0.0), 0)
    };
    SuiteVerdictRow {
        run_id: suite.run_id.clone(),
        suite_id: suite.suite_id.clone(),
        date: suite.started_at.date_key().to_string(),
        verdict: verdict.kind,
        ground_truth,
        reruns_consumed: consumed,
        machine_time_spent_seconds: spent,
        machine_time_saved_seconds: saved,
        executions_saved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Denylist;
    use crate::replay::{ingest_str, simulate};

    #[test]
    fn naive_word_count_matches_spec_examples() {
        assert_eq!(naive_word_count("AssertionError: # != #"), 1);
        assert_eq!(
            naive_word_count("Connection failed rc=#:Connection refused"),
            4
        );
        assert_eq!(naive_word_count("### 123"), 0);
    }

    #[test]
    fn single_suite_dataset_is_trivially_identical() {
        let text = r#"{"run_id":"r1","started_at":"2022-01-01T00:00:00Z","suites":[{"suite_id":"s","initial_failure_duration_seconds":5.0,"cases":[{"test_case_id":"t","trace":"","message":"network blip detected"}],"reruns":[{"outcome":"fail","duration_seconds":1.0},{"outcome":"pass","duration_seconds":1.0},{"outcome":"fail","duration_seconds":1.0}]}]}"#;
        let dataset = ingest_str(text, &Denylist::empty(), "test").unwrap();
        let config = DetectorConfig {
            early_stop: false,
            ..DetectorConfig::default()
        };
        let fast = simulate(&dataset, &config).unwrap();
        let slow = reference_simulate(&dataset, &config).unwrap();
        assert_eq!(fast.per_suite, slow.per_suite);
        assert_eq!(fast.confusion, slow.confusion);
    }
}
