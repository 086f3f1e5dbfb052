//! Deterministic synthetic CI datasets with planted ground truth.
//!
//! Each flaky "family" is a recurring failure mode: one symptom template
//! whose raw instantiations differ only in digit content (and optionally in
//! test-runner entry-point frames), so that full abstraction collapses the
//! family to a single canonical symptom. Non-flaky noise failures carry
//! symptoms disjoint from every family. Recorded reruns are consistent with
//! the planted labels: flaky suites have at least one pass in their history,
//! noise suites fail every rerun.
//!
//! Generation is a pure function of [`SyntheticSpec`] (including its seed):
//! equal parameters yield byte-identical datasets.

use chrono::{Duration, TimeZone, Utc};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{mask_numbers, AbstractionConfig, EntryPointPattern};
use crate::detector::Denylist;
use crate::model::{AbstractedSymptom, GroundTruth, StackFrame};
use crate::replay::{ingest_str, Dataset};

/// How often each flaky family recurs across the dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Recurrence {
    Fixed(usize),
    /// Inclusive range sampled uniformly per family.
    Uniform {
        min: usize,
        max: usize,
    },
}

impl Recurrence {
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match *self {
            Recurrence::Fixed(n) => n,
            Recurrence::Uniform { min, max } => rng.gen_range(min..=max),
        }
    }

    fn bounds(&self) -> (usize, usize) {
        match *self {
            Recurrence::Fixed(n) => (n, n),
            Recurrence::Uniform { min, max } => (min, max),
        }
    }
}

/// Symptom template shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TemplateParams {
    /// Body frames per stack trace (below the entry points).
    pub frames_per_trace: usize,
    /// Generic alphabetic tokens per message, on top of the family marker
    /// tokens. Controls how many word thresholds the symptom clears.
    pub message_words: usize,
    /// Distinct digit instantiations a family cycles through.
    pub raw_variants_per_family: usize,
}

impl Default for TemplateParams {
    fn default() -> Self {
        Self {
            frames_per_trace: 4,
            message_words: 8,
            raw_variants_per_family: 5,
        }
    }
}

/// Noise knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseParams {
    /// Probability that an occurrence uses a digit-jittered variant instead
    /// of the family's base form. At 1.0 occurrences cycle deterministically
    /// through all variants.
    pub digit_jitter_rate: f64,
    /// Probability that an occurrence's trace carries the standard
    /// test-runner entry-point prefix frames.
    pub entry_prefix_rate: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            digit_jitter_rate: 1.0,
            entry_prefix_rate: 0.5,
        }
    }
}

/// Rerun duration model: `rerun_seconds * (1 ± jitter_fraction)` uniform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DurationModel {
    pub rerun_seconds: f64,
    pub jitter_fraction: f64,
}

impl Default for DurationModel {
    fn default() -> Self {
        Self {
            rerun_seconds: 100.0,
            jitter_fraction: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub number_of_runs: usize,
    pub runs_per_day: usize,
    pub flaky_family_count: usize,
    pub family_recurrence: Recurrence,
    /// Target non-flaky share of the evaluable suites, in `[0, 1)`.
    pub non_flaky_rate: f64,
    pub templates: TemplateParams,
    pub noise: NoiseParams,
    pub durations: DurationModel,
    /// Recorded reruns per suite; also the replay rerun budget to use.
    pub rerun_budget: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            number_of_runs: 100,
            runs_per_day: 80,
            flaky_family_count: 10,
            family_recurrence: Recurrence::Uniform { min: 2, max: 10 },
            non_flaky_rate: 0.25,
            templates: TemplateParams::default(),
            noise: NoiseParams::default(),
            durations: DurationModel::default(),
            rerun_budget: 3,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// The entry-point patterns matching the prefix frames this generator
    /// plants; purification configured with them strips those frames.
    pub fn standard_entry_points() -> Vec<EntryPointPattern> {
        vec![
            EntryPointPattern::new("harness/SuiteRunner.py", "run"),
            EntryPointPattern::new("harness/SuiteCase.py", "setUp"),
        ]
    }

    /// Full abstraction config for datasets from this generator.
    pub fn abstraction_config() -> AbstractionConfig {
        AbstractionConfig::with_entry_points(Self::standard_entry_points())
    }

    fn validate(&self) -> Result<(), SpecError> {
        if self.number_of_runs == 0 {
            return Err(SpecError::ZeroRuns);
        }
        if self.runs_per_day == 0 || self.runs_per_day > 86_400 {
            return Err(SpecError::BadRunsPerDay(self.runs_per_day));
        }
        if self.rerun_budget == 0 {
            return Err(SpecError::ZeroRerunBudget);
        }
        if self.templates.raw_variants_per_family == 0 {
            return Err(SpecError::ZeroVariants);
        }
        if !(0.0..1.0).contains(&self.non_flaky_rate) {
            return Err(SpecError::BadNonFlakyRate(self.non_flaky_rate));
        }
        let (min, max) = self.family_recurrence.bounds();
        if min == 0 || min > max {
            return Err(SpecError::BadRecurrence { min, max });
        }
        if max > self.number_of_runs {
            return Err(SpecError::RecurrenceExceedsRuns {
                max,
                runs: self.number_of_runs,
            });
        }
        for rate in [self.noise.digit_jitter_rate, self.noise.entry_prefix_rate] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SpecError::BadNoiseRate(rate));
            }
        }
        if self.durations.rerun_seconds < 0.0
            || !(0.0..1.0).contains(&self.durations.jitter_fraction)
        {
            return Err(SpecError::BadDurations);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("a synthetic dataset needs at least one run")]
    ZeroRuns,
    #[error("runs_per_day must be in 1..=86400, got {0}")]
    BadRunsPerDay(usize),
    #[error("rerun_budget must be at least 1")]
    ZeroRerunBudget,
    #[error("raw_variants_per_family must be at least 1")]
    ZeroVariants,
    #[error("non_flaky_rate must be in [0, 1), got {0}")]
    BadNonFlakyRate(f64),
    #[error("recurrence bounds {min}..={max} are invalid")]
    BadRecurrence { min: usize, max: usize },
    #[error("recurrence up to {max} needs {max} distinct runs but the dataset has {runs}")]
    RecurrenceExceedsRuns { max: usize, runs: usize },
    #[error("noise rate {0} is outside [0, 1]")]
    BadNoiseRate(f64),
    #[error("durations must be non-negative with jitter_fraction in [0, 1)")]
    BadDurations,
}

/// One planted family in the ground-truth manifest.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyManifest {
    pub family_id: String,
    /// Canonical symptom under full abstraction; every occurrence of the
    /// family collapses to this form.
    pub canonical: String,
    pub occurrences: Vec<SuiteRef>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRef {
    pub run_id: String,
    pub suite_id: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteLabel {
    pub run_id: String,
    pub suite_id: String,
    pub label: GroundTruth,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_id: Option<String>,
}

/// Everything the generator knows about the dataset it produced.
#[derive(Clone, Debug, Serialize)]
pub struct GroundTruthManifest {
    pub seed: u64,
    pub spec: SyntheticSpec,
    pub total_suites: usize,
    pub flaky_suites: usize,
    pub non_flaky_suites: usize,
    pub entry_point_patterns: Vec<(String, String)>,
    pub families: Vec<FamilyManifest>,
    pub suites: Vec<SuiteLabel>,
}

pub struct SyntheticOutput {
    pub dataset: Dataset,
    pub manifest: GroundTruthManifest,
}

const GENERIC_TOKENS_BASE: &str = "tok";
const BODY_FUNCTIONS: [&str; 5] = ["prepare", "dispatch", "invoke", "execute", "finish"];

/// Fixed-width base-26 id, e.g. 0 -> "aaaa", 1 -> "aaab".
fn alpha_code(mut index: usize) -> String {
    let mut chars = [b'a'; 4];
    for slot in chars.iter_mut().rev() {
        *slot = b'a' + (index % 26) as u8;
        index /= 26;
    }
    String::from_utf8(chars.to_vec()).unwrap()
}

struct FamilyTemplate {
    code: String,
    /// Body frames as `(file, function)`.
    frames: Vec<(String, String)>,
    /// Message instantiations; index 0 is the base form.
    message_variants: Vec<String>,
}

impl FamilyTemplate {
    fn build(index: usize, params: &TemplateParams, rng: &mut ChaCha8Rng) -> Self {
        let code = alpha_code(index);
        let frames: Vec<(String, String)> = (0..params.frames_per_trace)
            .map(|j| {
                (
                    format!("ZZZ/svc/layer{j}_{code}.py"),
                    BODY_FUNCTIONS[j % BODY_FUNCTIONS.len()].to_string(),
                )
            })
            .collect();

        let generic: Vec<String> = (0..params.message_words)
            .map(|k| format!("{GENERIC_TOKENS_BASE}{}", alpha_code(k)))
            .collect();
        let message_variants = (0..params.raw_variants_per_family)
            .map(|v| {
                // The first digit slot pins variant distinctness.
                let anchor = 10_000 + v;
                let d: Vec<u32> = (0..6).map(|_| rng.gen_range(1..=99_999)).collect();
                format!(
                    "FlakyFault fam{code}: {} rc={anchor}:{} endpoint {}.{}.{}.{}:{}",
                    generic.join(" "),
                    d[0],
                    d[1],
                    d[2],
                    d[3],
                    d[4],
                    d[5],
                )
            })
            .collect();

        Self {
            code,
            frames,
            message_variants,
        }
    }

    fn trace_text(&self, with_prefix: bool, rng: &mut ChaCha8Rng) -> String {
        let mut lines = vec!["Traceback (most recent call last):".to_string()];
        if with_prefix {
            for (file, function) in [
                ("ZZZ/harness/SuiteRunner.py", "run"),
                ("ZZZ/harness/SuiteCase.py", "setUp"),
            ] {
                lines.push(format!(
                    "  File {file} line {}, in {function}",
                    rng.gen_range(10..=999)
                ));
                lines.push(format!("    self.{function}()"));
            }
        }
        for (file, function) in &self.frames {
            lines.push(format!(
                "  File {file} line {}, in {function}",
                rng.gen_range(10..=9999)
            ));
            lines.push(format!("    return self.{function}()"));
        }
        lines.join("\n")
    }
}

fn sample_duration(model: &DurationModel, rng: &mut ChaCha8Rng) -> f64 {
    let jitter = model.jitter_fraction * (rng.gen::<f64>() * 2.0 - 1.0);
    model.rerun_seconds * (1.0 + jitter)
}

fn rerun_history(
    label: GroundTruth,
    budget: usize,
    model: &DurationModel,
    rng: &mut ChaCha8Rng,
) -> Vec<(bool, f64)> {
    let first_pass = match label {
        GroundTruth::Flaky => Some(rng.gen_range(0..budget)),
        GroundTruth::NonFlaky => None,
    };
    (0..budget)
        .map(|j| {
            let passed = match first_pass {
                Some(p) if j == p => true,
                Some(p) if j > p => rng.gen_bool(0.25),
                _ => false,
            };
            (passed, sample_duration(model, rng))
        })
        .collect()
}

fn suite_json(
    suite_id: &str,
    test_case_id: &str,
    trace: &str,
    message: &str,
    initial_duration: f64,
    reruns: &[(bool, f64)],
) -> serde_json::Value {
    serde_json::json!({
        "suite_id": suite_id,
        "initial_failure_duration_seconds": initial_duration,
        "cases": [{
            "test_case_id": test_case_id,
            "trace": trace,
            "message": message,
        }],
        "reruns": reruns
            .iter()
            .map(|(passed, duration)| {
                serde_json::json!({
                    "outcome": if *passed { "pass" } else { "fail" },
                    "duration_seconds": duration,
                })
            })
            .collect::<Vec<_>>(),
    })
}

/// Generates a dataset plus its ground-truth manifest.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticOutput, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let run_ids: Vec<String> = (0..spec.number_of_runs)
        .map(|i| format!("run-{i:05}"))
        .collect();
    let base = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
    let spacing_seconds = (86_400 / spec.runs_per_day) as i64;
    let timestamps: Vec<String> = (0..spec.number_of_runs)
        .map(|i| {
            let day = (i / spec.runs_per_day) as i64;
            let slot = (i % spec.runs_per_day) as i64;
            let at = base + Duration::days(day) + Duration::seconds(slot * spacing_seconds);
            crate::model::UtcTimestamp::from_datetime(at)
                .as_str()
                .to_string()
        })
        .collect();

    let mut suites_per_run: Vec<Vec<serde_json::Value>> = vec![Vec::new(); spec.number_of_runs];
    let mut families = Vec::with_capacity(spec.flaky_family_count);
    let mut labels = Vec::new();
    let mut flaky_suites = 0usize;

    for family_index in 0..spec.flaky_family_count {
        let template = FamilyTemplate::build(family_index, &spec.templates, &mut rng);
        let occurrence_count = spec.family_recurrence.sample(&mut rng);
        let mut run_indices =
            rand::seq::index::sample(&mut rng, spec.number_of_runs, occurrence_count).into_vec();
        run_indices.sort_unstable();

        let family_id = format!("fam-{}", template.code);
        let suite_id = format!("suite-fam-{}", template.code);
        let test_case_id = format!("case-fam-{}", template.code);
        let mut occurrences = Vec::with_capacity(occurrence_count);

        for (k, &run_index) in run_indices.iter().enumerate() {
            let variants = spec.templates.raw_variants_per_family;
            let variant = if variants == 1 {
                0
            } else if rng.gen::<f64>() < spec.noise.digit_jitter_rate {
                k % variants
            } else {
                0
            };
            let with_prefix = rng.gen::<f64>() < spec.noise.entry_prefix_rate;
            let trace = template.trace_text(with_prefix, &mut rng);
            let message = &template.message_variants[variant];
            let reruns = rerun_history(
                GroundTruth::Flaky,
                spec.rerun_budget,
                &spec.durations,
                &mut rng,
            );
            let initial = sample_duration(&spec.durations, &mut rng) * 1.5;

            suites_per_run[run_index].push(suite_json(
                &suite_id,
                &test_case_id,
                &trace,
                message,
                initial,
                &reruns,
            ));
            occurrences.push(SuiteRef {
                run_id: run_ids[run_index].clone(),
                suite_id: suite_id.clone(),
            });
            labels.push(SuiteLabel {
                run_id: run_ids[run_index].clone(),
                suite_id: suite_id.clone(),
                label: GroundTruth::Flaky,
                family_id: Some(family_id.clone()),
            });
            flaky_suites += 1;
        }

        // Full abstraction keeps only the body frames and masks the digits,
        // so any variant yields the same canonical form.
        let canonical = AbstractedSymptom::new(
            template
                .frames
                .iter()
                .map(|(file, function)| StackFrame::new(file.clone(), function.clone()))
                .collect(),
            mask_numbers(
                &template.message_variants[0],
                &SyntheticSpec::abstraction_config(),
            ),
        )
        .into_canonical();

        families.push(FamilyManifest {
            family_id,
            canonical,
            occurrences,
        });
    }

    let noise_count = if spec.non_flaky_rate > 0.0 {
        (flaky_suites as f64 * spec.non_flaky_rate / (1.0 - spec.non_flaky_rate)).round() as usize
    } else {
        0
    };
    for noise_index in 0..noise_count {
        let code = alpha_code(noise_index);
        let run_index = rng.gen_range(0..spec.number_of_runs);
        let suite_id = format!("suite-nz-{code}");
        let trace = format!(
            "Traceback (most recent call last):\n  File ZZZ/app/check_{code}.py line {}, in verify\n    self.assert_state()",
            rng.gen_range(10..=9999)
        );
        let message = format!(
            "SolidFault nz{code}: invariant breach observed in sector {} marker {} position {}",
            rng.gen_range(1..=9999u32),
            rng.gen_range(1..=9999u32),
            rng.gen_range(1..=9999u32),
        );
        let reruns = rerun_history(
            GroundTruth::NonFlaky,
            spec.rerun_budget,
            &spec.durations,
            &mut rng,
        );
        let initial = sample_duration(&spec.durations, &mut rng) * 1.5;
        suites_per_run[run_index].push(suite_json(
            &suite_id,
            &format!("case-nz-{code}"),
            &trace,
            &message,
            initial,
            &reruns,
        ));
        labels.push(SuiteLabel {
            run_id: run_ids[run_index].clone(),
            suite_id,
            label: GroundTruth::NonFlaky,
            family_id: None,
        });
    }

    let mut jsonl = String::new();
    for (i, mut suites) in suites_per_run.into_iter().enumerate() {
        suites.sort_by_key(|suite| suite["suite_id"].as_str().unwrap().to_string());
        let line = serde_json::json!({
            "run_id": run_ids[i],
            "started_at": timestamps[i],
            "suites": suites,
        });
        jsonl.push_str(&serde_json::to_string(&line).unwrap());
        jsonl.push('\n');
    }

    let provenance = format!("synthetic seed {}", spec.seed);
    let dataset = ingest_str(&jsonl, &Denylist::empty(), &provenance)
        .expect("generated data satisfies its own schema");

    labels.sort_by(|a, b| (&a.run_id, &a.suite_id).cmp(&(&b.run_id, &b.suite_id)));
    let total_suites = labels.len();
    let non_flaky_suites = total_suites - flaky_suites;

    Ok(SyntheticOutput {
        dataset,
        manifest: GroundTruthManifest {
            seed: spec.seed,
            spec: *spec,
            total_suites,
            flaky_suites,
            non_flaky_suites,
            entry_point_patterns: SyntheticSpec::standard_entry_points()
                .into_iter()
                .map(|p| (p.file_suffix, p.function))
                .collect(),
            families,
            suites: labels,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::abstract_symptom;
    use crate::model::{ground_truth_label, GroundTruth};

    #[test]
    fn same_seed_is_byte_identical() {
        let spec = SyntheticSpec {
            number_of_runs: 20,
            flaky_family_count: 3,
            family_recurrence: Recurrence::Uniform { min: 2, max: 5 },
            seed: 7,
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.dataset.to_jsonl(), b.dataset.to_jsonl());
        assert_eq!(
            serde_json::to_string(&a.manifest).unwrap(),
            serde_json::to_string(&b.manifest).unwrap()
        );
    }

    #[test]
    fn different_seeds_differ() {
        let spec = SyntheticSpec {
            number_of_runs: 20,
            flaky_family_count: 3,
            seed: 1,
            ..SyntheticSpec::default()
        };
        let other = SyntheticSpec { seed: 2, ..spec };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&other).unwrap();
        assert_ne!(a.dataset.to_jsonl(), b.dataset.to_jsonl());
    }

    #[test]
    fn zero_runs_is_rejected() {
        let spec = SyntheticSpec {
            number_of_runs: 0,
            ..SyntheticSpec::default()
        };
        assert!(matches!(
            generate_synthetic(&spec),
            Err(SpecError::ZeroRuns)
        ));
    }

    #[test]
    fn recurrence_must_fit_run_count() {
        let spec = SyntheticSpec {
            number_of_runs: 3,
            family_recurrence: Recurrence::Fixed(5),
            ..SyntheticSpec::default()
        };
        assert!(matches!(
            generate_synthetic(&spec),
            Err(SpecError::RecurrenceExceedsRuns { .. })
        ));
    }

    #[test]
    fn labels_agree_with_rerun_histories() {
        let spec = SyntheticSpec {
            number_of_runs: 30,
            flaky_family_count: 4,
            family_recurrence: Recurrence::Uniform { min: 1, max: 6 },
            seed: 42,
            ..SyntheticSpec::default()
        };
        let output = generate_synthetic(&spec).unwrap();
        let mut by_key: std::collections::HashMap<(String, String), GroundTruth> =
            std::collections::HashMap::new();
        for label in &output.manifest.suites {
            by_key.insert((label.run_id.clone(), label.suite_id.clone()), label.label);
        }
        for suite in output.dataset.iter_suites() {
            let expected = by_key[&(suite.run_id.clone(), suite.suite_id.clone())];
            assert_eq!(ground_truth_label(suite).unwrap(), expected);
            assert_eq!(suite.recorded_reruns.len(), spec.rerun_budget);
        }
        assert_eq!(output.dataset.suite_count(), output.manifest.total_suites);
    }

    #[test]
    fn families_collapse_under_full_abstraction() {
        let spec = SyntheticSpec {
            number_of_runs: 25,
            flaky_family_count: 3,
            family_recurrence: Recurrence::Fixed(10),
            non_flaky_rate: 0.0,
            seed: 9,
            ..SyntheticSpec::default()
        };
        let output = generate_synthetic(&spec).unwrap();
        let config = SyntheticSpec::abstraction_config();
        for family in &output.manifest.families {
            for occurrence in &family.occurrences {
                let suite = output
                    .dataset
                    .iter_suites()
                    .find(|s| s.run_id == occurrence.run_id && s.suite_id == occurrence.suite_id)
                    .unwrap();
                let (_, raw) = &suite.case_symptoms[0];
                let canonical = abstract_symptom(raw, &config).unwrap().into_canonical();
                assert_eq!(canonical, family.canonical);
            }
        }
    }

    #[test]
    fn zero_noise_rate_leaves_no_negatives() {
        let spec = SyntheticSpec {
            number_of_runs: 20,
            flaky_family_count: 3,
            family_recurrence: Recurrence::Fixed(5),
            non_flaky_rate: 0.0,
            seed: 5,
            ..SyntheticSpec::default()
        };
        let output = generate_synthetic(&spec).unwrap();
        assert_eq!(output.manifest.non_flaky_suites, 0);
        let (flaky, non_flaky) = output.dataset.label_counts();
        assert_eq!((flaky, non_flaky), (15, 0));
    }

    #[test]
    fn noise_rate_shapes_label_mix() {
        let spec = SyntheticSpec {
            number_of_runs: 50,
            flaky_family_count: 10,
            family_recurrence: Recurrence::Fixed(6),
            non_flaky_rate: 0.25,
            seed: 3,
            ..SyntheticSpec::default()
        };
        let output = generate_synthetic(&spec).unwrap();
        assert_eq!(output.manifest.flaky_suites, 60);
        assert_eq!(output.manifest.non_flaky_suites, 20);
        let (flaky, non_flaky) = output.dataset.label_counts();
        assert_eq!((flaky, non_flaky), (60, 20));
    }
}
