//! Prompt/survey corpora: JSONL ingestion and the evaluation-data filtering
//! pipeline (dedupe, PII, language, length bounds).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::survey::{survey_from_value, IssueKind, ParseIssue, Survey};

/// One user prompt and the survey generated for it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub id: String,
    pub variant: String,
    pub user_prompt: String,
    pub pii_flagged: bool,
    pub language: String,
    pub created_at: DateTime<Utc>,
    pub survey: Survey,
}

impl Serialize for CorpusRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CorpusRecord", 7)?;
        st.serialize_field("id", &self.id)?;
        st.serialize_field("variant", &self.variant)?;
        st.serialize_field("user_prompt", &self.user_prompt)?;
        st.serialize_field("pii_flagged", &self.pii_flagged)?;
        st.serialize_field("language", &self.language)?;
        st.serialize_field(
            "created_at",
            &self.created_at.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        )?;
        st.serialize_field("survey", &self.survey)?;
        st.end()
    }
}

impl CorpusRecord {
    /// Character length of the prompt: Unicode scalar values after trimming
    /// outer whitespace.
    pub fn prompt_chars(&self) -> usize {
        self.user_prompt.trim().chars().count()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization is infallible")
    }

    /// Validates one parsed JSONL object.
    pub fn from_value(value: &Value) -> Result<Self, Vec<ParseIssue>> {
        let Some(obj) = value.as_object() else {
            return Err(vec![ParseIssue::new(
                "",
                IssueKind::BadType,
                "record must be a JSON object",
            )]);
        };
        let mut issues = Vec::new();
        let id = string_field(obj, "id", &mut issues);
        let variant = string_field(obj, "variant", &mut issues);
        let user_prompt = string_field(obj, "user_prompt", &mut issues);
        let language = string_field(obj, "language", &mut issues);
        let created_raw = string_field(obj, "created_at", &mut issues);

        for (key, v) in [("id", &id), ("variant", &variant)] {
            if matches!(v, Some(s) if s.trim().is_empty()) {
                issues.push(ParseIssue::new(
                    format!("/{key}"),
                    IssueKind::ConstraintViolation,
                    format!("'{key}' must not be empty"),
                ));
            }
        }

        let pii_flagged = match obj.get("pii_flagged") {
            Some(Value::Bool(b)) => Some(*b),
            Some(_) => {
                issues.push(ParseIssue::new(
                    "/pii_flagged",
                    IssueKind::BadType,
                    "'pii_flagged' must be a boolean",
                ));
                None
            }
            None => {
                issues.push(ParseIssue::new(
                    "/pii_flagged",
                    IssueKind::MissingField,
                    "missing required field 'pii_flagged'",
                ));
                None
            }
        };

        let created_at = created_raw.and_then(|raw| match DateTime::parse_from_rfc3339(&raw) {
            Ok(t) => Some(t.with_timezone(&Utc)),
            Err(e) => {
                issues.push(ParseIssue::new(
                    "/created_at",
                    IssueKind::ConstraintViolation,
                    format!("not an RFC 3339 timestamp: {e}"),
                ));
                None
            }
        });

        let survey = match obj.get("survey") {
            None => {
                issues.push(ParseIssue::new(
                    "/survey",
                    IssueKind::MissingField,
                    "missing required field 'survey'",
                ));
                None
            }
            Some(v) => match survey_from_value(v, "/survey") {
                Ok(s) => Some(s),
                Err(mut found) => {
                    issues.append(&mut found);
                    None
                }
            },
        };

        match (id, variant, user_prompt, pii_flagged, language, created_at, survey) {
            (
                Some(id),
                Some(variant),
                Some(user_prompt),
                Some(pii_flagged),
                Some(language),
                Some(created_at),
                Some(survey),
            ) if issues.is_empty() => Ok(Self {
                id,
                variant,
                user_prompt,
                pii_flagged,
                language,
                created_at,
                survey,
            }),
            _ => Err(issues),
        }
    }
}

fn string_field(obj: &Map<String, Value>, key: &str, issues: &mut Vec<ParseIssue>) -> Option<String> {
    match obj.get(key) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            issues.push(ParseIssue::new(
                format!("/{key}"),
                IssueKind::BadType,
                format!("'{key}' must be a string"),
            ));
            None
        }
        None => {
            issues.push(ParseIssue::new(
                format!("/{key}"),
                IssueKind::MissingField,
                format!("missing required field '{key}'"),
            ));
            None
        }
    }
}

/// A rejected JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineIssue {
    pub line: usize,
    pub issues: Vec<ParseIssue>,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    BadLine(LineIssue),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Stop at the first bad line.
    #[default]
    Strict,
    /// Skip bad lines and report them.
    Lenient,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub records: Vec<CorpusRecord>,
    pub skipped: Vec<LineIssue>,
}

/// Key of a provenance header line written by the CLI; such lines carry no
/// record and are skipped on load.
pub const META_KEY: &str = "_meta";

pub fn load_corpus(path: &Path, mode: LoadMode) -> Result<LoadedCorpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file), mode).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Reads JSONL records. Blank lines and `{"_meta": ...}` header lines are
/// ignored; line numbers are 1-based. Duplicate ids are line errors.
pub fn read_corpus<R: BufRead>(reader: R, mode: LoadMode) -> Result<LoadedCorpus, CorpusError> {
    let mut out = LoadedCorpus::default();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: String::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match serde_json::from_str::<Value>(&line) {
            Ok(v) if is_meta_line(&v) => continue,
            Ok(v) => CorpusRecord::from_value(&v),
            Err(e) => Err(vec![ParseIssue::new("", IssueKind::MalformedJson, e.to_string())]),
        };
        let parsed = parsed.and_then(|rec| {
            if ids.insert(rec.id.clone()) {
                Ok(rec)
            } else {
                Err(vec![ParseIssue::new(
                    "/id",
                    IssueKind::ConstraintViolation,
                    format!("duplicate record id '{}'", rec.id),
                )])
            }
        });
        match parsed {
            Ok(rec) => out.records.push(rec),
            Err(issues) => {
                let issue = LineIssue { line: line_no, issues };
                match mode {
                    LoadMode::Strict => return Err(CorpusError::BadLine(issue)),
                    LoadMode::Lenient => out.skipped.push(issue),
                }
            }
        }
    }
    Ok(out)
}

fn is_meta_line(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| o.len() == 1 && o.contains_key(META_KEY))
}

pub fn write_corpus<W: Write>(mut w: W, records: &[CorpusRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_json_line())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_prompt_chars: usize,
    pub max_prompt_chars: usize,
    pub min_questions: usize,
    pub max_questions: usize,
    pub required_language: String,
    pub drop_pii: bool,
    pub dedupe: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_prompt_chars: 200,
            max_prompt_chars: 500,
            min_questions: 5,
            max_questions: 12,
            required_language: "en".to_string(),
            drop_pii: true,
            dedupe: true,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FilterConfigError {
    #[error("min_prompt_chars ({0}) exceeds max_prompt_chars ({1})")]
    PromptRange(usize, usize),
    #[error("min_questions ({0}) exceeds max_questions ({1})")]
    QuestionRange(usize, usize),
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterConfigError> {
        if self.min_prompt_chars > self.max_prompt_chars {
            return Err(FilterConfigError::PromptRange(
                self.min_prompt_chars,
                self.max_prompt_chars,
            ));
        }
        if self.min_questions > self.max_questions {
            return Err(FilterConfigError::QuestionRange(
                self.min_questions,
                self.max_questions,
            ));
        }
        Ok(())
    }
}

/// Drop reasons in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Duplicate,
    Pii,
    Language,
    PromptLength,
    QuestionCount,
}

impl DropReason {
    pub const ALL: [DropReason; 5] = [
        Self::Duplicate,
        Self::Pii,
        Self::Language,
        Self::PromptLength,
        Self::QuestionCount,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Duplicate => "duplicate",
            Self::Pii => "pii",
            Self::Language => "language",
            Self::PromptLength => "prompt_length",
            Self::QuestionCount => "question_count",
        }
    }
}

/// Split of `prompt_length` drops by side of the bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptLengthBreakdown {
    pub too_short: usize,
    pub too_long: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_count: usize,
    pub kept_count: usize,
    /// Every reason is present, zero counts included.
    pub dropped: BTreeMap<DropReason, usize>,
    pub prompt_length_breakdown: PromptLengthBreakdown,
}

impl FilterReport {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<16}{:>8}\n", "input", self.input_count));
        for reason in DropReason::ALL {
            out.push_str(&format!(
                "{:<16}{:>8}\n",
                format!("- {}", reason.as_str()),
                self.dropped.get(&reason).copied().unwrap_or(0)
            ));
        }
        out.push_str(&format!("{:<16}{:>8}\n", "kept", self.kept_count));
        out
    }
}

/// Hook for a language identifier. The default trusts the record's tag.
pub trait LanguageDetector {
    fn language<'a>(&self, record: &'a CorpusRecord) -> &'a str;
}

pub struct TrustedTag;

impl LanguageDetector for TrustedTag {
    fn language<'a>(&self, record: &'a CorpusRecord) -> &'a str {
        &record.language
    }
}

/// Case-insensitive match on the tag, also accepting regional subtags of
/// the required tag ("en-US" satisfies "en").
pub fn language_matches(tag: &str, required: &str) -> bool {
    let tag = tag.trim().to_ascii_lowercase();
    let required = required.trim().to_ascii_lowercase();
    tag == required || tag.starts_with(&format!("{required}-"))
}

/// Trim, collapse internal whitespace, case-fold.
pub fn normalize_prompt(prompt: &str) -> String {
    prompt.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn filter_corpus(records: &[CorpusRecord], cfg: &FilterConfig) -> (Vec<CorpusRecord>, FilterReport) {
    filter_corpus_with(records, cfg, &TrustedTag)
}

/// Applies, in order: dedupe on the normalized prompt (first occurrence
/// wins), PII, language, then prompt-length and question-count bounds
/// (inclusive). Each dropped record is attributed to the first rule it
/// fails.
pub fn filter_corpus_with(
    records: &[CorpusRecord],
    cfg: &FilterConfig,
    detector: &dyn LanguageDetector,
) -> (Vec<CorpusRecord>, FilterReport) {
    let mut dropped: BTreeMap<DropReason, usize> = DropReason::ALL.iter().map(|&r| (r, 0)).collect();
    let mut breakdown = PromptLengthBreakdown::default();
    let mut seen = HashSet::new();
    let mut kept = Vec::new();

    for r in records {
        let reason = if cfg.dedupe && !seen.insert(normalize_prompt(&r.user_prompt)) {
            Some(DropReason::Duplicate)
        } else if cfg.drop_pii && r.pii_flagged {
            Some(DropReason::Pii)
        } else if !language_matches(detector.language(r), &cfg.required_language) {
            Some(DropReason::Language)
        } else {
            let chars = r.prompt_chars();
            let n_q = r.survey.questions.len();
            if chars < cfg.min_prompt_chars {
                breakdown.too_short += 1;
                Some(DropReason::PromptLength)
            } else if chars > cfg.max_prompt_chars {
                breakdown.too_long += 1;
                Some(DropReason::PromptLength)
            } else if n_q < cfg.min_questions || n_q > cfg.max_questions {
                Some(DropReason::QuestionCount)
            } else {
                None
            }
        };
        match reason {
            Some(reason) => *dropped.get_mut(&reason).expect("all reasons seeded") += 1,
            None => kept.push(r.clone()),
        }
    }

    let report = FilterReport {
        input_count: records.len(),
        kept_count: kept.len(),
        dropped,
        prompt_length_breakdown: breakdown,
    };
    (kept, report)
}

/// Stable partition by variant label.
pub fn partition_by_variant(records: &[CorpusRecord]) -> BTreeMap<String, Vec<CorpusRecord>> {
    let mut out: BTreeMap<String, Vec<CorpusRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.variant.clone()).or_default().push(r.clone());
    }
    out
}
