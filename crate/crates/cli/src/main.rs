//! `flakesieve`: symptom-based flaky-failure detection from the command line.
//!
//! The check/record pair is deliberately split so the CI system owns the
//! rerun step: `check` answers "is this failure a known flaky symptom?" via
//! exit code, and `record` stores symptoms after the caller has verified
//! flakiness by rerunning. `replay`, `sweep`, `groups`, and `gen` drive the
//! simulation and reporting toolkit.
//!
//! Exit codes are a stable contract: 0 match/success, 1 no match, 2 invalid
//! input, 3 storage error.

use std::fmt::Display;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flakesieve_core::abstraction::parse_entry_points;
use flakesieve_core::memory::MatchError;
use flakesieve_core::replay::{
    generate_synthetic, sweep_csv, unique_symptom_stats, AblationSetting, Dataset, DurationModel,
    NoiseParams, Recurrence, SyntheticSpec, TemplateParams,
};
use flakesieve_core::{
    abstract_symptom, compute_metrics, compute_savings, simulate, sweep, AbstractionConfig,
    CaseMemory, Denylist, DetectorConfig, FlakyObservation, RawSymptom, UpdatePolicy,
};

const EXIT_NO_MATCH: u8 = 1;
const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_STORAGE: u8 = 3;

/// Separator between the stack-trace section and the message section of a
/// symptom input file.
const MESSAGE_SEPARATOR: &str = "---MESSAGE---";

#[derive(Parser)]
#[command(
    name = "flakesieve",
    version,
    about = "Detect recurring flaky test failures by matching abstracted failure symptoms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Abstract one failure symptom and print its canonical form.
    Abstract(AbstractArgs),
    /// Match symptoms against a memory file (exit 0 = flaky, 1 = rerun).
    Check(CheckArgs),
    /// Record rerun-verified flaky symptoms into a memory file.
    Record(RecordArgs),
    /// Replay a dataset chronologically and report accuracy and savings.
    Replay(ReplayArgs),
    /// Replay every (T, W) combination and write the result grid as CSV.
    Sweep(SweepArgs),
    /// Print recurring symptom groups from a memory file.
    Groups(GroupsArgs),
    /// Generate a synthetic dataset with a ground-truth manifest.
    Gen(GenArgs),
}

#[derive(Args)]
struct AbstractionOpts {
    /// Entry-point patterns file (one `file_suffix,function` per line).
    #[arg(long = "entry-points", value_name = "PATH")]
    entry_points: Option<PathBuf>,
    /// Keep test-runner entry-point frames.
    #[arg(long = "no-purify")]
    no_purify: bool,
    /// Keep numbers in error messages.
    #[arg(long = "no-mask")]
    no_mask: bool,
}

impl AbstractionOpts {
    fn build(&self) -> Result<AbstractionConfig, CliError> {
        let patterns = match &self.entry_points {
            Some(path) => parse_entry_points(
                &fs::read_to_string(path)
                    .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?,
            )
            .map_err(invalid)?,
            None => Vec::new(),
        };
        Ok(AbstractionConfig::with_entry_points(patterns)
            .with_toggles(!self.no_purify, !self.no_mask))
    }
}

#[derive(Args)]
struct DetectorOpts {
    /// Minimum observation count for a match verdict (T).
    #[arg(short = 'T', long = "match-threshold", default_value_t = 1)]
    match_threshold: u32,
    /// Minimum distinct alphabetic words to store a symptom (W).
    #[arg(short = 'W', long = "min-words", default_value_t = 1)]
    min_unique_words: u32,
    /// Rerun budget when matching misses (K).
    #[arg(short = 'K', long = "rerun-budget", default_value_t = 3)]
    rerun_budget: u32,
    /// Denylist file of uninformative-message patterns.
    #[arg(long, value_name = "PATH")]
    denylist: Option<PathBuf>,
    /// Count a symptom once per suite instead of once per test case.
    #[arg(long = "dedupe-within-suite")]
    dedupe_within_suite: bool,
    /// Consume the full rerun budget even after a pass.
    #[arg(long = "no-early-stop")]
    no_early_stop: bool,
    #[command(flatten)]
    abstraction: AbstractionOpts,
}

impl DetectorOpts {
    fn build(&self) -> Result<DetectorConfig, CliError> {
        let denylist = match &self.denylist {
            Some(path) => Denylist::load(path).map_err(invalid)?,
            None => Denylist::empty(),
        };
        let config = DetectorConfig {
            match_threshold: self.match_threshold,
            min_unique_words: self.min_unique_words,
            rerun_budget: self.rerun_budget,
            denylist,
            abstraction: self.abstraction.build()?,
            dedupe_within_suite: self.dedupe_within_suite,
            early_stop: !self.no_early_stop,
        };
        config.validate().map_err(invalid)?;
        Ok(config)
    }
}

#[derive(Args)]
struct MemoryOpt {
    /// Case-memory file (falls back to $FLAKESIEVE_MEMORY).
    #[arg(long, value_name = "PATH", env = "FLAKESIEVE_MEMORY")]
    memory: PathBuf,
}

#[derive(Args)]
struct AbstractArgs {
    /// Symptom input file; stdin when omitted. Format: stack trace,
    /// a `---MESSAGE---` line, then the error message.
    input: Option<PathBuf>,
    #[command(flatten)]
    abstraction: AbstractionOpts,
}

#[derive(Args)]
struct CheckArgs {
    /// Symptom input files, one per failed test case.
    files: Vec<PathBuf>,
    #[command(flatten)]
    memory: MemoryOpt,
    /// Treat a missing memory file as empty instead of failing.
    #[arg(long = "allow-empty-memory")]
    allow_empty_memory: bool,
    #[command(flatten)]
    detector: DetectorOpts,
}

#[derive(Args)]
struct RecordArgs {
    /// Symptom input files, one per failed test case.
    files: Vec<PathBuf>,
    #[command(flatten)]
    memory: MemoryOpt,
    /// CI run the verified-flaky failure came from.
    #[arg(long = "run-id")]
    run_id: String,
    /// Suite the failure came from.
    #[arg(long = "suite-id", default_value = "suite")]
    suite_id: String,
    #[command(flatten)]
    detector: DetectorOpts,
}

#[derive(Args)]
struct ReplayArgs {
    /// Dataset file in JSON-lines format.
    dataset: PathBuf,
    /// Where to write the JSON report.
    #[arg(long, value_name = "PATH", default_value = "flakesieve_report.json")]
    report: PathBuf,
    /// Stdout format for the summary (text, csv, or json).
    #[arg(long, value_name = "FORMAT", default_value = "text")]
    format: String,
    #[command(flatten)]
    detector: DetectorOpts,
}

#[derive(Args)]
struct SweepArgs {
    /// Dataset file in JSON-lines format.
    dataset: PathBuf,
    /// Where to write the grid CSV.
    #[arg(long, value_name = "PATH", default_value = "sweep.csv")]
    out: PathBuf,
    /// Comma-separated T values.
    #[arg(long = "t-values", value_name = "LIST", default_value = "1,2,3,4,5,6")]
    t_values: String,
    /// Comma-separated W values.
    #[arg(long = "w-values", value_name = "LIST", default_value = "1,2,3,4,5,6")]
    w_values: String,
    /// Also sweep the four abstraction ablation settings.
    #[arg(long)]
    ablations: bool,
    /// Also report unique-symptom statistics per ablation setting.
    #[arg(long = "symptom-stats")]
    symptom_stats: bool,
    #[command(flatten)]
    detector: DetectorOpts,
}

#[derive(Args)]
struct GroupsArgs {
    #[command(flatten)]
    memory: MemoryOpt,
    /// Only show symptoms observed at least this often.
    #[arg(long = "min-count", default_value_t = 20)]
    min_count: u64,
    /// Output format (csv or json).
    #[arg(long, value_name = "FORMAT", default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct GenArgs {
    /// Where to write the dataset (JSON lines).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Where to write the ground-truth manifest (JSON).
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Where to write the entry-point patterns matching the planted traces,
    /// ready for `--entry-points`.
    #[arg(long = "entry-points-out", value_name = "PATH")]
    entry_points_out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long = "runs-per-day", default_value_t = 80)]
    runs_per_day: usize,
    #[arg(long, default_value_t = 10)]
    families: usize,
    /// Family recurrence: `N` (fixed) or `MIN:MAX` (uniform).
    #[arg(long, default_value = "2:10")]
    recurrence: String,
    #[arg(long = "non-flaky-rate", default_value_t = 0.25)]
    non_flaky_rate: f64,
    /// Distinct digit variants per family.
    #[arg(long, default_value_t = 5)]
    variants: usize,
    #[arg(long = "message-words", default_value_t = 8)]
    message_words: usize,
    #[arg(long = "frames", default_value_t = 4)]
    frames_per_trace: usize,
    #[arg(long = "digit-jitter-rate", default_value_t = 1.0)]
    digit_jitter_rate: f64,
    #[arg(long = "entry-prefix-rate", default_value_t = 0.5)]
    entry_prefix_rate: f64,
    #[arg(long = "rerun-seconds", default_value_t = 100.0)]
    rerun_seconds: f64,
    #[arg(long = "duration-jitter", default_value_t = 0.2)]
    duration_jitter: f64,
    #[arg(short = 'K', long = "rerun-budget", default_value_t = 3)]
    rerun_budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

fn invalid(message: impl Display) -> CliError {
    CliError {
        code: EXIT_INVALID_INPUT,
        message: message.to_string(),
    }
}

fn storage(message: impl Display) -> CliError {
    CliError {
        code: EXIT_STORAGE,
        message: message.to_string(),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("flakesieve: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Abstract(args) => cmd_abstract(args),
        Command::Check(args) => cmd_check(args),
        Command::Record(args) => cmd_record(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Groups(args) => cmd_groups(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

/// Splits a symptom input into its trace and message sections.
fn parse_symptom_input(text: &str) -> Result<RawSymptom, CliError> {
    let mut trace_lines = Vec::new();
    let mut message_lines = Vec::new();
    let mut in_message = false;
    for line in text.lines() {
        if !in_message && line.trim() == MESSAGE_SEPARATOR {
            in_message = true;
        } else if in_message {
            message_lines.push(line);
        } else {
            trace_lines.push(line);
        }
    }
    if !in_message {
        return Err(invalid(format!(
            "symptom input has no `{MESSAGE_SEPARATOR}` separator line"
        )));
    }
    Ok(RawSymptom::new(
        trace_lines.join("\n"),
        message_lines.join("\n"),
    ))
}

fn read_symptom_file(path: &Path) -> Result<RawSymptom, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_symptom_input(&text)
}

fn load_memory(path: &Path, allow_missing: bool) -> Result<CaseMemory, CliError> {
    if allow_missing && !path.exists() {
        return Ok(CaseMemory::new());
    }
    CaseMemory::load(path).map_err(storage)
}

fn cmd_abstract(args: AbstractArgs) -> Result<u8, CliError> {
    let config = args.abstraction.build()?;
    let text = match &args.input {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?,
        None => {
            let mut buffer = String::new();
            std::io::stdin()
                .read_to_string(&mut buffer)
                .map_err(|e| invalid(format!("cannot read stdin: {e}")))?;
            buffer
        }
    };
    let raw = parse_symptom_input(&text)?;
    let symptom = abstract_symptom(&raw, &config).map_err(invalid)?;
    println!("{}", symptom.canonical());
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> Result<u8, CliError> {
    let config = args.detector.build()?;
    if args.files.is_empty() {
        return Err(invalid("no symptom files given; nothing to match"));
    }
    let memory = load_memory(&args.memory.memory, args.allow_empty_memory)?;

    let mut symptoms = Vec::new();
    for path in &args.files {
        let raw = read_symptom_file(path)?;
        let symptom = abstract_symptom(&raw, &config.abstraction)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        symptoms.push((path, symptom));
    }

    let matched = memory
        .is_flaky_match(symptoms.iter().map(|(_, s)| s), config.match_threshold)
        .map_err(|e: MatchError| invalid(e))?;

    let report = serde_json::json!({
        "verdict": if matched { "match" } else { "no_match" },
        "match_threshold": config.match_threshold,
        "symptoms": symptoms
            .iter()
            .map(|(path, symptom)| {
                serde_json::json!({
                    "path": path.display().to_string(),
                    "count": memory.count_of(symptom),
                })
            })
            .collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(if matched { 0 } else { EXIT_NO_MATCH })
}

fn cmd_record(args: RecordArgs) -> Result<u8, CliError> {
    let config = args.detector.build()?;
    if args.files.is_empty() {
        return Err(invalid("no symptom files given; nothing to record"));
    }
    let mut memory = load_memory(&args.memory.memory, true)?;

    let mut observation = FlakyObservation {
        run_id: args.run_id.clone(),
        suite_id: args.suite_id.clone(),
        symptoms: Vec::new(),
    };
    for path in &args.files {
        let raw = read_symptom_file(path)?;
        let symptom = abstract_symptom(&raw, &config.abstraction)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        observation
            .symptoms
            .push((path.display().to_string(), symptom));
    }

    let policy = UpdatePolicy {
        min_unique_words: config.min_unique_words,
        dedupe_within_suite: config.dedupe_within_suite,
    };
    let (stored, skipped) = memory.record_flaky(&observation, &policy);
    memory.save(&args.memory.memory).map_err(storage)?;
    println!("stored: {stored}");
    println!("skipped: {skipped}");
    Ok(0)
}

fn fmt_pct(value: Option<f64>) -> String {
    value
        .map(|v| format!("{:.1}%", v * 100.0))
        .unwrap_or_else(|| "n/a".to_string())
}

fn fmt_metric(value: Option<f64>) -> String {
    value
        .map(|v| format!("{v:.3}"))
        .unwrap_or_else(|| "n/a".to_string())
}

fn cmd_replay(args: ReplayArgs) -> Result<u8, CliError> {
    let config = args.detector.build()?;
    let dataset = flakesieve_core::ingest(&args.dataset, &config.denylist).map_err(invalid)?;
    let result = simulate(&dataset, &config).map_err(invalid)?;
    let metrics = compute_metrics(&result);
    let savings = compute_savings(&result, &dataset).map_err(invalid)?;

    let report = serde_json::json!({
        "config": result.config,
        "exclusions": dataset.exclusions,
        "evaluated_suites": result.per_suite.len(),
        "confusion": result.confusion,
        "metrics": metrics,
        "flaky_by_match": result.verdict_count(flakesieve_core::VerdictKind::FlakyByMatch),
        "savings": savings,
    });
    fs::write(
        &args.report,
        serde_json::to_string_pretty(&report).unwrap() + "\n",
    )
    .map_err(|e| storage(format!("cannot write {}: {e}", args.report.display())))?;

    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        "csv" => {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            println!("precision,recall,f1,baseline_precision,time_saved_pct,exec_saved_pct");
            println!(
                "{},{},{},{},{},{}",
                opt(metrics.precision),
                opt(metrics.recall),
                opt(metrics.f1),
                opt(metrics.baseline_precision),
                opt(savings.machine_time_saved_pct),
                opt(savings.executions_saved_pct),
            );
        }
        _ => {
            let e = &dataset.exclusions;
            println!("dataset: {}", dataset.provenance);
            println!(
                "suites: {} failed, {} with case failures, {} with valid symptoms, {} evaluable ({} flaky / {} non-flaky)",
                e.suites_total,
                e.suites_with_case_failures,
                e.suites_with_valid_symptoms,
                e.suites_evaluable,
                e.evaluable_flaky,
                e.evaluable_non_flaky,
            );
            for (reason, count) in &e.excluded_by_reason {
                println!("excluded ({reason}): {count}");
            }
            let c = &result.confusion;
            println!(
                "confusion: tp={} fp={} tn={} fn={}",
                c.true_positive, c.false_positive, c.true_negative, c.false_negative
            );
            println!(
                "precision: {}  recall: {}  f1: {}  baseline: {}",
                fmt_metric(metrics.precision),
                fmt_metric(metrics.recall),
                fmt_metric(metrics.f1),
                fmt_metric(metrics.baseline_precision),
            );
            println!(
                "machine time saved: {}  executions saved: {}",
                fmt_pct(savings.machine_time_saved_pct),
                fmt_pct(savings.executions_saved_pct),
            );
            println!(
                "early-stop extra: {} executions, {} seconds",
                savings.early_stop_executions_avoided,
                savings
                    .early_stop_seconds_avoided
                    .map(|v| format!("{v:.0}"))
                    .unwrap_or_else(|| "n/a".to_string()),
            );
            println!("report written to {}", args.report.display());
        }
    }
    Ok(0)
}

fn parse_value_list(text: &str, flag: &str) -> Result<Vec<u32>, CliError> {
    let values: Result<Vec<u32>, _> = text
        .split(',')
        .map(|part| part.trim().parse::<u32>())
        .collect();
    let values = values.map_err(|e| invalid(format!("bad {flag} list {text:?}: {e}")))?;
    if values.is_empty() || values.iter().any(|v| *v < 1) {
        return Err(invalid(format!("{flag} values must be at least 1")));
    }
    Ok(values)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, CliError> {
    let config = args.detector.build()?;
    let dataset = flakesieve_core::ingest(&args.dataset, &config.denylist).map_err(invalid)?;
    let t_values = parse_value_list(&args.t_values, "T")?;
    let w_values = parse_value_list(&args.w_values, "W")?;
    let settings: Vec<AblationSetting> = if args.ablations {
        AblationSetting::all().to_vec()
    } else {
        vec![AblationSetting::FULL]
    };

    let cells = sweep(&dataset, &config, &t_values, &w_values, &settings).map_err(invalid)?;
    let csv = sweep_csv(&cells);
    fs::write(&args.out, &csv)
        .map_err(|e| storage(format!("cannot write {}: {e}", args.out.display())))?;
    println!("{} cells written to {}", cells.len(), args.out.display());

    if args.symptom_stats {
        let stats = unique_symptom_stats(&dataset, &config.abstraction, &settings);
        println!("setting,unique_symptoms,mean_length_chars");
        for row in stats {
            let setting = AblationSetting {
                purification: row.purification,
                masking: row.masking,
            };
            println!(
                "{},{},{:.1}",
                setting.label(),
                row.unique_count,
                row.mean_length_chars
            );
        }
    }
    Ok(0)
}

fn cmd_groups(args: GroupsArgs) -> Result<u8, CliError> {
    let memory = CaseMemory::load(&args.memory.memory).map_err(storage)?;
    let rows = memory.group_report(args.min_count);
    match args.format.as_str() {
        "json" => println!("{}", serde_json::to_string_pretty(&rows).unwrap()),
        _ => {
            println!("count,distinct_test_cases,distinct_runs,symptom");
            for row in rows {
                println!(
                    "{},{},{},{}",
                    row.count,
                    row.distinct_test_cases,
                    row.distinct_runs,
                    serde_json::to_string(&row.symptom).unwrap(),
                );
            }
        }
    }
    Ok(0)
}

fn parse_recurrence(text: &str) -> Result<Recurrence, CliError> {
    if let Some((min, max)) = text.split_once(':') {
        let min = min
            .trim()
            .parse()
            .map_err(|e| invalid(format!("bad recurrence {text:?}: {e}")))?;
        let max = max
            .trim()
            .parse()
            .map_err(|e| invalid(format!("bad recurrence {text:?}: {e}")))?;
        Ok(Recurrence::Uniform { min, max })
    } else {
        let n = text
            .trim()
            .parse()
            .map_err(|e| invalid(format!("bad recurrence {text:?}: {e}")))?;
        Ok(Recurrence::Fixed(n))
    }
}

fn cmd_gen(args: GenArgs) -> Result<u8, CliError> {
    let spec = SyntheticSpec {
        number_of_runs: args.runs,
        runs_per_day: args.runs_per_day,
        flaky_family_count: args.families,
        family_recurrence: parse_recurrence(&args.recurrence)?,
        non_flaky_rate: args.non_flaky_rate,
        templates: TemplateParams {
            frames_per_trace: args.frames_per_trace,
            message_words: args.message_words,
            raw_variants_per_family: args.variants,
        },
        noise: NoiseParams {
            digit_jitter_rate: args.digit_jitter_rate,
            entry_prefix_rate: args.entry_prefix_rate,
        },
        durations: DurationModel {
            rerun_seconds: args.rerun_seconds,
            jitter_fraction: args.duration_jitter,
        },
        rerun_budget: args.rerun_budget,
        seed: args.seed,
    };
    let output = generate_synthetic(&spec).map_err(invalid)?;
    write_dataset(&output.dataset, &args.out)?;
    println!(
        "dataset: {} runs, {} suites ({} flaky / {} non-flaky) -> {}",
        output.dataset.runs.len(),
        output.manifest.total_suites,
        output.manifest.flaky_suites,
        output.manifest.non_flaky_suites,
        args.out.display(),
    );
    if let Some(path) = &args.manifest {
        fs::write(
            path,
            serde_json::to_string_pretty(&output.manifest).unwrap() + "\n",
        )
        .map_err(|e| storage(format!("cannot write {}: {e}", path.display())))?;
        println!("manifest -> {}", path.display());
    }
    if let Some(path) = &args.entry_points_out {
        let lines: String = SyntheticSpec::standard_entry_points()
            .iter()
            .map(|p| format!("{},{}\n", p.file_suffix, p.function))
            .collect();
        fs::write(path, lines)
            .map_err(|e| storage(format!("cannot write {}: {e}", path.display())))?;
        println!("entry points -> {}", path.display());
    }
    Ok(0)
}

fn write_dataset(dataset: &Dataset, path: &Path) -> Result<(), CliError> {
    fs::write(path, dataset.to_jsonl())
        .map_err(|e| storage(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symptom_input_splits_on_separator() {
        let raw = parse_symptom_input("line a\nline b\n---MESSAGE---\nboom 42\nsecond").unwrap();
        assert_eq!(raw.trace_text, "line a\nline b");
        assert_eq!(raw.message, "boom 42\nsecond");
    }

    #[test]
    fn symptom_input_allows_empty_trace() {
        let raw = parse_symptom_input("---MESSAGE---\nboom").unwrap();
        assert_eq!(raw.trace_text, "");
        assert_eq!(raw.message, "boom");
    }

    #[test]
    fn symptom_input_requires_separator() {
        assert!(parse_symptom_input("just a message").is_err());
    }

    #[test]
    fn recurrence_parsing() {
        assert_eq!(parse_recurrence("7").unwrap(), Recurrence::Fixed(7));
        assert_eq!(
            parse_recurrence("2:9").unwrap(),
            Recurrence::Uniform { min: 2, max: 9 }
        );
        assert!(parse_recurrence("x").is_err());
    }
}
