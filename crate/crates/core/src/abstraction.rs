//! Symptom abstraction: stack-trace purification and number masking.
//!
//! Raw failure symptoms from the same root cause rarely match byte-for-byte;
//! they differ in line numbers, IP addresses, ports, memory addresses, and
//! similar dynamic detail. Abstraction strips that detail so recurring
//! failures collapse onto one canonical form:
//!
//! 1. the stack trace is reduced to `(file, function)` pairs and the leading
//!    test-runner entry-point frames are dropped ("purification");
//! 2. hexadecimal literals and decimal digit runs in the error message are
//!    replaced with `#` ("number masking");
//! 3. both parts are concatenated into the canonical text form.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use thiserror::Error;

use crate::model::{AbstractedSymptom, RawSymptom, StackFrame};

/// A test-execution entry point to strip from the head of a trace: frames
/// whose file ends with `file_suffix` and whose function equals `function`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryPointPattern {
    pub file_suffix: String,
    pub function: String,
}

impl EntryPointPattern {
    pub fn new(file_suffix: impl Into<String>, function: impl Into<String>) -> Self {
        Self {
            file_suffix: file_suffix.into(),
            function: function.into(),
        }
    }

    pub fn matches(&self, frame: &StackFrame) -> bool {
        frame.file.ends_with(&self.file_suffix) && frame.function == self.function
    }
}

/// Abstraction settings. The four toggle combinations of
/// `purification_enabled` x `masking_enabled` are the ablation settings; the
/// hex/decimal switches subdivide masking and default to on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractionConfig {
    pub entry_point_patterns: Vec<EntryPointPattern>,
    pub hex_mask_enabled: bool,
    pub decimal_mask_enabled: bool,
    pub purification_enabled: bool,
    pub masking_enabled: bool,
}

impl Default for AbstractionConfig {
    fn default() -> Self {
        Self {
            entry_point_patterns: Vec::new(),
            hex_mask_enabled: true,
            decimal_mask_enabled: true,
            purification_enabled: true,
            masking_enabled: true,
        }
    }
}

impl AbstractionConfig {
    pub fn with_entry_points(patterns: Vec<EntryPointPattern>) -> Self {
        Self {
            entry_point_patterns: patterns,
            ..Self::default()
        }
    }

    /// Applies an ablation setting on top of this config.
    pub fn with_toggles(mut self, purification: bool, masking: bool) -> Self {
        self.purification_enabled = purification;
        self.masking_enabled = masking;
        self
    }

    /// Loads entry-point patterns from a text file: one `file_suffix,function`
    /// pair per line, `#` starts a comment line, blank lines ignored.
    pub fn load_entry_points(path: &Path) -> Result<Vec<EntryPointPattern>, AbstractionError> {
        let text = fs::read_to_string(path).map_err(|source| AbstractionError::EntryPointIo {
            path: path.display().to_string(),
            source,
        })?;
        parse_entry_points(&text)
    }
}

/// Parses the entry-point file format. See
/// [`AbstractionConfig::load_entry_points`].
pub fn parse_entry_points(text: &str) -> Result<Vec<EntryPointPattern>, AbstractionError> {
    let mut patterns = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (file_suffix, function) =
            line.split_once(',')
                .ok_or_else(|| AbstractionError::EntryPointSyntax {
                    line: i + 1,
                    text: line.to_string(),
                })?;
        let (file_suffix, function) = (file_suffix.trim(), function.trim());
        if file_suffix.is_empty() || function.is_empty() {
            return Err(AbstractionError::EntryPointSyntax {
                line: i + 1,
                text: line.to_string(),
            });
        }
        patterns.push(EntryPointPattern::new(file_suffix, function));
    }
    Ok(patterns)
}

#[derive(Debug, Error)]
pub enum AbstractionError {
    /// The error message is empty after trimming, so the symptom carries no
    /// matchable content.
    #[error("invalid symptom: empty error message")]
    InvalidSymptom,
    #[error("cannot read entry-point file {path}: {source}")]
    EntryPointIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("entry-point file line {line}: expected `file_suffix,function`, got {text:?}")]
    EntryPointSyntax { line: usize, text: String },
}

/// Call-frame header: `File <path> line <n>, in <function>`, the comma after
/// the path and double quotes around it both optional.
static FRAME_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"^\s*File\s+"?(.+?)"?,?\s+line\s+([0-9]+),\s+in\s+(.+?)\s*$"#).unwrap()
});

static HEX_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"0[xX][0-9a-fA-F]+").unwrap());
static DECIMAL_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"[0-9]+").unwrap());

/// Extracts `(file, function)` pairs from traceback text, outermost frame
/// first. The `Traceback` header, source-echo lines, and anything else that
/// is not a frame header are skipped; fully unparseable input yields an empty
/// list.
pub fn parse_stack_trace(trace_text: &str) -> Vec<StackFrame> {
    trace_text
        .lines()
        .filter_map(|line| {
            FRAME_RE.captures(line).map(|caps| StackFrame {
                file: caps[1].to_string(),
                function: caps[3].to_string(),
            })
        })
        .collect()
}

/// Drops the longest prefix of frames in which every frame matches some
/// entry-point pattern. A no-op when purification is disabled or the pattern
/// list is empty.
pub fn purify(frames: Vec<StackFrame>, config: &AbstractionConfig) -> Vec<StackFrame> {
    if !config.purification_enabled || config.entry_point_patterns.is_empty() {
        return frames;
    }
    let dropped = frames
        .iter()
        .take_while(|frame| {
            config
                .entry_point_patterns
                .iter()
                .any(|pattern| pattern.matches(frame))
        })
        .count();
    frames.into_iter().skip(dropped).collect()
}

/// Masks numbers in an error message: every maximal hexadecimal literal
/// (`0[xX][0-9a-fA-F]+`) becomes `#` first, then every remaining maximal run
/// of decimal digits becomes `#`. All other characters pass through
/// byte-for-byte. Identity when masking is disabled.
pub fn mask_numbers(message: &str, config: &AbstractionConfig) -> String {
    if !config.masking_enabled {
        return message.to_string();
    }
    let hex_masked = if config.hex_mask_enabled {
        HEX_RE.replace_all(message, "#")
    } else {
        std::borrow::Cow::Borrowed(message)
    };
    if config.decimal_mask_enabled {
        DECIMAL_RE.replace_all(&hex_masked, "#").into_owned()
    } else {
        hex_masked.into_owned()
    }
}

/// Full abstraction pipeline: parse, purify, mask, concatenate.
///
/// Fails with [`AbstractionError::InvalidSymptom`] when the message is empty
/// after trimming.
pub fn abstract_symptom(
    raw: &RawSymptom,
    config: &AbstractionConfig,
) -> Result<AbstractedSymptom, AbstractionError> {
    if !raw.has_message() {
        return Err(AbstractionError::InvalidSymptom);
    }
    let frames = purify(parse_stack_trace(&raw.trace_text), config);
    let masked_message = mask_numbers(&raw.message, config);
    Ok(AbstractedSymptom::new(frames, masked_message))
}

/// Counts the distinct purely-alphabetic tokens of a message: tokens are
/// maximal runs of alphabetic characters (every non-letter separates), and
/// distinctness is case-sensitive. This is the quality gate for storing a
/// symptom in the case memory.
pub fn unique_alphabetic_tokens(message: &str) -> usize {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut start = None;
    for (i, ch) in message.char_indices() {
        if ch.is_alphabetic() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            seen.insert(&message[s..i]);
        }
    }
    if let Some(s) = start {
        seen.insert(&message[s..]);
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Traceback of a recurring connection failure, used across the module
    /// tests; the corresponding purified/masked forms are frozen below.
    pub(crate) const CONNECT_TRACE: &str = "\
Traceback (most recent call last):
  File ZZZ/ZZZ/NewDbTestCase.py line 937, in run
    self.setUp()
  File ZZZ/ZZZ/testCrossDBAtrMultiDB.py line 303, in setUp
    super(testCrossDBAtrMultiDB, self).setUp()
  File ZZZ/ZZZ/testCrossDBQuery.py line 1359, in setUp
    self.conn2 = self.conman2.createConnection()
  File ZZZ/ZZZ/connectionManager.py line 629, in createConnection
    return self.createNamedConnection(conn_id, **kw_args)
  File ZZZ/ZZZ/connectionManager.py line 704, in createNamedConnection
    **props)
  File ZZZ/ZZZ/connectionManager.py line 113, in __init__
    retryChecker(dbapi.Connection.__init__, self, **keys)
  File ZZZ/ZZZ/RetryChecker.py line 20, in __call__
    return function(*args, **kwargs)";

    pub(crate) const CONNECT_MESSAGE: &str = "Error: (-10709, Connection failed (RTE:[89006] System call 'connect' failed, rc=111:Connection refused {1.2.3.3:30024 -> 1.2.3.3:31144} (1.2.3.3:30024 -> 1.2.3.3:31144)))";

    pub(crate) fn test_entry_points() -> Vec<EntryPointPattern> {
        vec![
            EntryPointPattern::new("NewDbTestCase.py", "run"),
            EntryPointPattern::new("testCrossDBAtrMultiDB.py", "setUp"),
        ]
    }

    #[test]
    fn parses_all_frame_headers() {
        let frames = parse_stack_trace(CONNECT_TRACE);
        assert_eq!(frames.len(), 7);
        assert_eq!(
            frames[0],
            StackFrame::new("ZZZ/ZZZ/NewDbTestCase.py", "run")
        );
        assert_eq!(
            frames[6],
            StackFrame::new("ZZZ/ZZZ/RetryChecker.py", "__call__")
        );
    }

    #[test]
    fn parses_comma_and_quote_variants() {
        let frames = parse_stack_trace(
            "  File \"pkg/mod.py\", line 3, in <module>\n  File a.py line 1, in f",
        );
        assert_eq!(
            frames,
            vec![
                StackFrame::new("pkg/mod.py", "<module>"),
                StackFrame::new("a.py", "f"),
            ]
        );
    }

    #[test]
    fn empty_and_garbage_input_yield_no_frames() {
        assert!(parse_stack_trace("").is_empty());
        assert!(parse_stack_trace("garbage line\nmore garbage").is_empty());
    }

    #[test]
    fn purify_drops_entry_point_prefix() {
        let config = AbstractionConfig::with_entry_points(test_entry_points());
        let frames = purify(parse_stack_trace(CONNECT_TRACE), &config);
        assert_eq!(frames.len(), 5);
        assert_eq!(
            frames[0],
            StackFrame::new("ZZZ/ZZZ/testCrossDBQuery.py", "setUp")
        );
        assert_eq!(
            frames,
            vec![
                StackFrame::new("ZZZ/ZZZ/testCrossDBQuery.py", "setUp"),
                StackFrame::new("ZZZ/ZZZ/connectionManager.py", "createConnection"),
                StackFrame::new("ZZZ/ZZZ/connectionManager.py", "createNamedConnection"),
                StackFrame::new("ZZZ/ZZZ/connectionManager.py", "__init__"),
                StackFrame::new("ZZZ/ZZZ/RetryChecker.py", "__call__"),
            ]
        );
    }

    #[test]
    fn purify_without_patterns_is_identity() {
        let config = AbstractionConfig::default();
        let frames = parse_stack_trace(CONNECT_TRACE);
        assert_eq!(purify(frames.clone(), &config), frames);
    }

    #[test]
    fn purify_stops_at_first_non_matching_frame() {
        // First frame matches no pattern, so nothing is dropped even though a
        // later frame would match.
        let config = AbstractionConfig::with_entry_points(test_entry_points());
        let frames = vec![
            StackFrame::new("ZZZ/other.py", "helper"),
            StackFrame::new("ZZZ/NewDbTestCase.py", "run"),
        ];
        assert_eq!(purify(frames.clone(), &config), frames);
    }

    #[test]
    fn purify_disabled_keeps_entry_points() {
        let config =
            AbstractionConfig::with_entry_points(test_entry_points()).with_toggles(false, true);
        let frames = parse_stack_trace(CONNECT_TRACE);
        assert_eq!(purify(frames.clone(), &config), frames);
    }

    #[test]
    fn masks_ip_like_sequences() {
        let config = AbstractionConfig::default();
        assert_eq!(
            mask_numbers("{~1.2.3.3:30024~ -> ~1.2.3.3:31144~}", &config),
            "{~#.#.#.#:#~ -> ~#.#.#.#:#~}"
        );
    }

    #[test]
    fn masks_message_with_codes() {
        let config = AbstractionConfig::default();
        assert_eq!(
            mask_numbers(
                "Error: (-10709, Connection failed (RTE:[89006] System call 'connect' failed, rc=111:...",
                &config
            ),
            "Error: (-#, Connection failed (RTE:[#] System call 'connect' failed, rc=#:..."
        );
    }

    #[test]
    fn masks_hex_literals_whole() {
        let config = AbstractionConfig::default();
        assert_eq!(mask_numbers("addr 0xDEADbeef ok", &config), "addr # ok");
        assert_eq!(mask_numbers("0x1F", &config), "#");
        assert_eq!(mask_numbers("0X0", &config), "#");
    }

    #[test]
    fn masking_identity_on_digit_free_input() {
        let config = AbstractionConfig::default();
        assert_eq!(mask_numbers("no digits here", &config), "no digits here");
    }

    #[test]
    fn masking_embedded_in_identifiers() {
        let config = AbstractionConfig::default();
        assert_eq!(mask_numbers("QMDS5781", &config), "QMDS#");
    }

    #[test]
    fn masking_disabled_is_identity() {
        let config = AbstractionConfig::default().with_toggles(true, false);
        assert_eq!(mask_numbers("rc=111", &config), "rc=111");
    }

    #[test]
    fn abstract_symptom_golden() {
        let config = AbstractionConfig::with_entry_points(test_entry_points());
        let raw = RawSymptom::new(CONNECT_TRACE, CONNECT_MESSAGE);
        let symptom = abstract_symptom(&raw, &config).unwrap();
        let expected = "\
[callstack]
ZZZ/ZZZ/testCrossDBQuery.py,setUp
ZZZ/ZZZ/connectionManager.py,createConnection
ZZZ/ZZZ/connectionManager.py,createNamedConnection
ZZZ/ZZZ/connectionManager.py,__init__
ZZZ/ZZZ/RetryChecker.py,__call__
[message]
Error: (-#, Connection failed (RTE:[#] System call 'connect' failed, rc=#:Connection refused {#.#.#.#:# -> #.#.#.#:#} (#.#.#.#:# -> #.#.#.#:#)))";
        assert_eq!(symptom.canonical(), expected);
    }

    #[test]
    fn abstract_symptom_degenerate_trace() {
        let raw = RawSymptom::new("", "x y");
        let symptom = abstract_symptom(&raw, &AbstractionConfig::default()).unwrap();
        assert_eq!(symptom.canonical(), "[callstack]\n[message]\nx y");
    }

    #[test]
    fn abstract_symptom_rejects_empty_message() {
        let raw = RawSymptom::new("trace", "   \n ");
        assert!(matches!(
            abstract_symptom(&raw, &AbstractionConfig::default()),
            Err(AbstractionError::InvalidSymptom)
        ));
    }

    #[test]
    fn token_counting() {
        assert_eq!(unique_alphabetic_tokens("AssertionError: # != #"), 1);
        assert_eq!(
            unique_alphabetic_tokens("Connection failed rc=#:Connection refused"),
            4
        );
        assert_eq!(unique_alphabetic_tokens("### 123"), 0);
        assert_eq!(unique_alphabetic_tokens(""), 0);
    }

    #[test]
    fn token_counting_is_case_sensitive() {
        assert_eq!(unique_alphabetic_tokens("error Error ERROR"), 3);
    }

    #[test]
    fn ablation_toggles_compose() {
        let base = AbstractionConfig::with_entry_points(test_entry_points());
        let raw = RawSymptom::new(CONNECT_TRACE, CONNECT_MESSAGE);
        let mut canonicals = HashSet::new();
        for purification in [false, true] {
            for masking in [false, true] {
                let config = base.clone().with_toggles(purification, masking);
                let symptom = abstract_symptom(&raw, &config).unwrap();
                let frame_count = symptom.frames().len();
                assert_eq!(frame_count, if purification { 5 } else { 7 });
                assert_eq!(symptom.masked_message().contains('#'), masking);
                canonicals.insert(symptom.into_canonical());
            }
        }
        assert_eq!(canonicals.len(), 4);
    }

    #[test]
    fn entry_point_file_parsing() {
        let parsed = parse_entry_points(
            "# test runner entry points\nNewDbTestCase.py,run\n\n testCase.py , setUp \n",
        )
        .unwrap();
        assert_eq!(
            parsed,
            vec![
                EntryPointPattern::new("NewDbTestCase.py", "run"),
                EntryPointPattern::new("testCase.py", "setUp"),
            ]
        );
        assert!(parse_entry_points("no-comma-here").is_err());
    }

    proptest! {
        #[test]
        fn masking_is_idempotent(message in "[ -~]{0,120}") {
            let config = AbstractionConfig::default();
            let once = mask_numbers(&message, &config);
            prop_assert_eq!(mask_numbers(&once, &config), once);
        }

        #[test]
        fn masking_preserves_non_digit_text(message in "[a-zA-Z .:#~-]{0,80}") {
            // No decimal digits anywhere, so masking must be the identity.
            let config = AbstractionConfig::default();
            prop_assert_eq!(mask_numbers(&message, &config), message);
        }

        #[test]
        fn purify_is_idempotent(drop_count in 0usize..4, tail in 0usize..4) {
            let config = AbstractionConfig::with_entry_points(test_entry_points());
            let mut frames = Vec::new();
            for _ in 0..drop_count {
                frames.push(StackFrame::new("x/NewDbTestCase.py", "run"));
            }
            for i in 0..tail {
                frames.push(StackFrame::new(format!("x/mod{i}.py"), "work"));
            }
            let once = purify(frames, &config);
            prop_assert_eq!(purify(once.clone(), &config), once);
        }

        #[test]
        fn token_count_invariant_under_digit_insertion(
            words in proptest::collection::vec("[a-z]{1,8}", 0..8),
            digits in "[0-9]{1,6}",
        ) {
            // Hex-free by construction: separators are spaces, so inserting a
            // digit run as its own token never changes the alphabetic token set.
            let plain = words.join(" ");
            let with_digits = format!("{plain} {digits}");
            prop_assert_eq!(
                unique_alphabetic_tokens(&plain),
                unique_alphabetic_tokens(&with_digits)
            );
        }

        #[test]
        fn abstraction_is_deterministic(msg in "[ -~]{1,60}") {
            let config = AbstractionConfig::default();
            let raw = RawSymptom::new("", format!("x{msg}"));
            let a = abstract_symptom(&raw, &config).unwrap();
            let b = abstract_symptom(&raw, &config).unwrap();
            prop_assert_eq!(a.canonical(), b.canonical());
        }
    }
}
