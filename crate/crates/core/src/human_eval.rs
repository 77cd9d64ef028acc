//! Expert checklist scores: six metrics scored 0-2 per generated survey.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    QuestionTextQuality,
    AnswerOptions,
    BiasCheck,
    MissingQuestions,
    RelevanceToPrompt,
    QuestionVariety,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricLevel {
    QuestionLevel,
    SurveyLevel,
}

impl MetricId {
    pub const ALL: [MetricId; 6] = [
        Self::QuestionTextQuality,
        Self::AnswerOptions,
        Self::BiasCheck,
        Self::MissingQuestions,
        Self::RelevanceToPrompt,
        Self::QuestionVariety,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::QuestionTextQuality => "question_text_quality",
            Self::AnswerOptions => "answer_options",
            Self::BiasCheck => "bias_check",
            Self::MissingQuestions => "missing_questions",
            Self::RelevanceToPrompt => "relevance_to_prompt",
            Self::QuestionVariety => "question_variety",
        }
    }

    /// Metadata only; aggregation treats both levels the same.
    pub fn level(self) -> MetricLevel {
        match self {
            Self::QuestionTextQuality | Self::AnswerOptions | Self::BiasCheck => MetricLevel::QuestionLevel,
            _ => MetricLevel::SurveyLevel,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or(())
    }
}

/// A checklist score in `0..=2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Score(u8);

impl Score {
    pub fn new(v: u8) -> Option<Self> {
        (v <= 2).then_some(Self(v))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub survey_id: String,
    pub variant: String,
    pub rater_id: String,
    pub scores: BTreeMap<MetricId, Score>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// An unvalidated record. Score values stay as JSON so type errors can be
/// reported per field.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct RawEvalRecord {
    #[serde(default)]
    pub survey_id: Option<String>,
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default)]
    pub rater_id: Option<String>,
    #[serde(default)]
    pub scores: BTreeMap<String, Value>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalIssue {
    pub path: String,
    pub detail: String,
}

impl fmt::Display for EvalIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.detail)
    }
}

fn issue(path: impl Into<String>, detail: impl Into<String>) -> EvalIssue {
    EvalIssue { path: path.into(), detail: detail.into() }
}

pub fn validate_eval(raw: &RawEvalRecord) -> Result<EvalRecord, Vec<EvalIssue>> {
    let mut issues = Vec::new();
    let mut text = |name: &str, v: &Option<String>| -> String {
        match v {
            Some(s) if !s.trim().is_empty() => s.clone(),
            _ => {
                issues.push(issue(format!("/{name}"), "missing or empty"));
                String::new()
            }
        }
    };
    let survey_id = text("survey_id", &raw.survey_id);
    let variant = text("variant", &raw.variant);
    let rater_id = text("rater_id", &raw.rater_id);

    let mut scores = BTreeMap::new();
    for (name, value) in &raw.scores {
        let path = format!("/scores/{name}");
        let Ok(metric) = name.parse::<MetricId>() else {
            issues.push(issue(path, "unknown metric"));
            continue;
        };
        let parsed = match value {
            Value::Number(n) => n.as_u64(),
            Value::String(s) => s.trim().parse::<u64>().ok(),
            _ => None,
        };
        match parsed {
            Some(v) => match u8::try_from(v).ok().and_then(Score::new) {
                Some(score) => {
                    scores.insert(metric, score);
                }
                None => issues.push(issue(path, format!("score {v} out of range 0..=2"))),
            },
            None => issues.push(issue(path, format!("score must be an integer 0..=2, got {value}"))),
        }
    }
    for m in MetricId::ALL {
        if !raw.scores.contains_key(m.as_str()) {
            issues.push(issue(format!("/scores/{m}"), "missing metric"));
        }
    }

    if issues.is_empty() {
        Ok(EvalRecord { survey_id, variant, rater_id, scores, note: raw.note.clone() })
    } else {
        Err(issues)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Counts of scores 0, 1 and 2.
    pub distribution: [u64; 3],
}

impl MetricSummary {
    fn from_distribution(distribution: [u64; 3]) -> Self {
        let n: u64 = distribution.iter().sum();
        let mean = if n == 0 { 0.0 } else { (distribution[1] + 2 * distribution[2]) as f64 / n as f64 };
        Self { mean, distribution }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub n_records: u64,
    pub metrics: BTreeMap<MetricId, MetricSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub variants: BTreeMap<String, VariantSummary>,
}

impl EvalSummary {
    /// Combines summaries of disjoint record sets.
    pub fn merge(&self, other: &EvalSummary) -> EvalSummary {
        let mut dists: BTreeMap<String, (u64, BTreeMap<MetricId, [u64; 3]>)> = BTreeMap::new();
        for s in [self, other] {
            for (variant, vs) in &s.variants {
                let entry = dists.entry(variant.clone()).or_default();
                entry.0 += vs.n_records;
                for (m, ms) in &vs.metrics {
                    let d = entry.1.entry(*m).or_default();
                    for (acc, n) in d.iter_mut().zip(ms.distribution) {
                        *acc += n;
                    }
                }
            }
        }
        build_summary(dists)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16}{:>6}", "variant", "n");
        for m in MetricId::ALL {
            out.push_str(&format!("{:>24}", m.as_str()));
        }
        out.push('\n');
        for (variant, vs) in &self.variants {
            out.push_str(&format!("{variant:<16}{:>6}", vs.n_records));
            for m in MetricId::ALL {
                let cell = vs.metrics.get(&m).map_or("-".to_string(), |s| format!("{:.3}", s.mean));
                out.push_str(&format!("{cell:>24}"));
            }
            out.push('\n');
        }
        out
    }
}

fn build_summary(dists: BTreeMap<String, (u64, BTreeMap<MetricId, [u64; 3]>)>) -> EvalSummary {
    EvalSummary {
        variants: dists
            .into_iter()
            .map(|(v, (n, metrics))| {
                let metrics = metrics
                    .into_iter()
                    .map(|(m, d)| (m, MetricSummary::from_distribution(d)))
                    .collect();
                (v, VariantSummary { n_records: n, metrics })
            })
            .collect(),
    }
}

/// Groups by variant; per metric reports the mean and the 0/1/2 counts.
pub fn summarize_evals(records: &[EvalRecord]) -> EvalSummary {
    let mut dists: BTreeMap<String, (u64, BTreeMap<MetricId, [u64; 3]>)> = BTreeMap::new();
    for r in records {
        let entry = dists.entry(r.variant.clone()).or_default();
        entry.0 += 1;
        for (m, s) in &r.scores {
            entry.1.entry(*m).or_default()[s.get() as usize] += 1;
        }
    }
    build_summary(dists)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricDelta {
    pub metric: MetricId,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_b - mean_a`
    pub delta: f64,
    pub n_a: u64,
    pub n_b: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("metric {0} missing from summary block")]
    MissingMetric(MetricId),
}

pub fn compare_variants(a: &VariantSummary, b: &VariantSummary) -> Result<Vec<MetricDelta>, CompareError> {
    MetricId::ALL
        .into_iter()
        .map(|m| {
            let sa = a.metrics.get(&m).ok_or(CompareError::MissingMetric(m))?;
            let sb = b.metrics.get(&m).ok_or(CompareError::MissingMetric(m))?;
            Ok(MetricDelta {
                metric: m,
                mean_a: sa.mean,
                mean_b: sb.mean,
                delta: sb.mean - sa.mean,
                n_a: a.n_records,
                n_b: b.n_records,
            })
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum EvalIoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {detail}")]
    Json { line: usize, detail: String },
}

/// Reads CSV with columns `survey_id, variant, rater_id, <metric...>, note`.
/// Every column that is not an id column or `note` is a score column, so
/// unknown metric names surface as validation issues. Empty cells count as
/// missing.
pub fn read_raw_csv<R: Read>(r: R) -> Result<Vec<RawEvalRecord>, EvalIoError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rd.headers()?.clone();
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let mut raw = RawEvalRecord::default();
        for (h, cell) in headers.iter().zip(row.iter()) {
            let non_empty = (!cell.is_empty()).then(|| cell.to_string());
            match h {
                "survey_id" => raw.survey_id = non_empty,
                "variant" => raw.variant = non_empty,
                "rater_id" => raw.rater_id = non_empty,
                "note" => raw.note = non_empty,
                metric => {
                    if let Some(v) = non_empty {
                        raw.scores.insert(metric.to_string(), Value::String(v));
                    }
                }
            }
        }
        out.push(raw);
    }
    Ok(out)
}

/// JSONL records: `{"survey_id", "variant", "rater_id", "scores": {...}, "note"?}`.
pub fn read_raw_jsonl(text: &str) -> Result<Vec<RawEvalRecord>, EvalIoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalIoError::Json { line: i + 1, detail: e.to_string() })
        })
        .collect()
}
