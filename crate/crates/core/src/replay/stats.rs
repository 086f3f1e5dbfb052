//! Corpus-level symptom statistics: how strongly each abstraction setting
//! collapses the space of distinct symptoms.

use std::collections::HashSet;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::{abstract_symptom, AbstractionConfig};
use crate::replay::{AblationSetting, Dataset};

/// Distinct-symptom count and mean canonical length (in characters) for one
/// abstraction setting, over every test-case symptom in the dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniqueSymptomStats {
    pub purification: bool,
    pub masking: bool,
    pub unique_count: usize,
    /// Mean over all symptom instances; 0 when the dataset has none.
    pub mean_length_chars: f64,
}

/// Abstracts every test-case symptom under each setting and counts distinct
/// canonical forms. Purification patterns come from `base`.
pub fn unique_symptom_stats(
    dataset: &Dataset,
    base: &AbstractionConfig,
    settings: &[AblationSetting],
) -> Vec<UniqueSymptomStats> {
    let raw_symptoms: Vec<_> = dataset
        .iter_suites()
        .flat_map(|suite| suite.case_symptoms.iter().map(|(_, raw)| raw))
        .collect();

    settings
        .iter()
        .map(|setting| {
            let config = base
                .clone()
                .with_toggles(setting.purification, setting.masking);
            let canonicals = abstract_all(&raw_symptoms, &config);
            let total_len: usize = canonicals.iter().map(|c| c.chars().count()).sum();
            let mean_length_chars = if canonicals.is_empty() {
                0.0
            } else {
                total_len as f64 / canonicals.len() as f64
            };
            let unique: HashSet<&str> = canonicals.iter().map(String::as_str).collect();
            UniqueSymptomStats {
                purification: setting.purification,
                masking: setting.masking,
                unique_count: unique.len(),
                mean_length_chars,
            }
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn abstract_all(
    raw_symptoms: &[&crate::model::RawSymptom],
    config: &AbstractionConfig,
) -> Vec<String> {
    raw_symptoms
        .par_iter()
        .map(|raw| {
            abstract_symptom(raw, config)
                .expect("evaluable suites carry valid symptoms")
                .into_canonical()
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn abstract_all(
    raw_symptoms: &[&crate::model::RawSymptom],
    config: &AbstractionConfig,
) -> Vec<String> {
    raw_symptoms
        .iter()
        .map(|raw| {
            abstract_symptom(raw, config)
                .expect("evaluable suites carry valid symptoms")
                .into_canonical()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Denylist;
    use crate::replay::ingest_str;

    fn dataset_with_messages(messages: &[&str]) -> Dataset {
        let lines: Vec<String> = messages
            .iter()
            .enumerate()
            .map(|(i, message)| {
                format!(
                    r#"{{"run_id":"r{i}","started_at":"2022-01-01T{:02}:00:00Z","suites":[{{"suite_id":"s","initial_failure_duration_seconds":1.0,"cases":[{{"test_case_id":"t","trace":"","message":"{message}"}}],"reruns":[{{"outcome":"pass","duration_seconds":1.0}}]}}]}}"#,
                    i
                )
            })
            .collect();
        ingest_str(&lines.join("\n"), &Denylist::empty(), "test").unwrap()
    }

    #[test]
    fn identical_corpus_collapses_to_one() {
        let dataset = dataset_with_messages(&["same text", "same text", "same text"]);
        let stats = unique_symptom_stats(
            &dataset,
            &AbstractionConfig::default(),
            &AblationSetting::all(),
        );
        assert!(stats.iter().all(|s| s.unique_count == 1));
    }

    #[test]
    fn masking_collapses_digit_variants() {
        let dataset = dataset_with_messages(&[
            "timeout after 10 ms",
            "timeout after 25 ms",
            "timeout after 99 ms",
        ]);
        let stats = unique_symptom_stats(
            &dataset,
            &AbstractionConfig::default(),
            &[AblationSetting::RAW, AblationSetting::FULL],
        );
        assert_eq!(stats[0].unique_count, 3);
        assert_eq!(stats[1].unique_count, 1);
        assert!(stats[1].mean_length_chars < stats[0].mean_length_chars);
    }

    #[test]
    fn abstraction_never_increases_unique_count() {
        let dataset = dataset_with_messages(&[
            "fault 17 in sector 3",
            "fault 18 in sector 3",
            "other problem entirely",
            "fault 17 in sector 3",
        ]);
        let stats = unique_symptom_stats(
            &dataset,
            &AbstractionConfig::default(),
            &[AblationSetting::RAW, AblationSetting::FULL],
        );
        assert!(stats[1].unique_count <= stats[0].unique_count);
    }
}
