//! Survey metadata features: one scalar vector per survey plus pooled
//! n-gram and character distributions per corpus slice.
//!
//! Text metrics cover question texts only. Answer-option words feed
//! `avg_n_words_per_answer_option` and nothing else. Averages over empty
//! denominators are 0.0, so vectors never contain NaN.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusRecord;
use crate::survey::{question_type_counts, QuestionType, Survey};
use crate::textstats::{
    has_special_character, ngram_distribution, tokenize, NGramDistribution, NGramOrder, TokenStats,
};

/// Scalar feature names, in column order.
pub const FEATURE_NAMES: [&str; 18] = [
    "n_generated_questions",
    "n_open_ended_questions",
    "n_closed_ended_questions",
    "n_multiple_selection_questions",
    "n_single_choice_questions",
    "n_contact_info_questions",
    "n_nps_questions",
    "n_unsupported_questions",
    "n_characters_in_survey",
    "n_words_in_survey",
    "std_n_words_per_question",
    "avg_word_length_in_survey",
    "avg_n_answer_options",
    "avg_n_words_per_question",
    "avg_n_words_per_answer_option",
    "max_word_length_in_survey",
    "any_special_character",
    "score_flesch_kincaid",
];

/// Names of the distribution-valued features, as they appear in drift
/// reports.
pub const DISTRIBUTION_NAMES: [&str; 3] = [
    "drift:unigrams_distribution",
    "drift:bigrams_distribution",
    "drift:characters_distribution",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Count,
    Real,
    Flag,
}

pub fn feature_kind(name: &str) -> Option<FeatureKind> {
    match name {
        "any_special_character" => Some(FeatureKind::Flag),
        "std_n_words_per_question"
        | "avg_word_length_in_survey"
        | "avg_n_answer_options"
        | "avg_n_words_per_question"
        | "avg_n_words_per_answer_option"
        | "score_flesch_kincaid" => Some(FeatureKind::Real),
        n if FEATURE_NAMES.contains(&n) => Some(FeatureKind::Count),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub n_generated_questions: usize,
    pub n_open_ended_questions: usize,
    pub n_closed_ended_questions: usize,
    pub n_multiple_selection_questions: usize,
    pub n_single_choice_questions: usize,
    pub n_contact_info_questions: usize,
    pub n_nps_questions: usize,
    pub n_unsupported_questions: usize,
    pub n_characters_in_survey: usize,
    pub n_words_in_survey: usize,
    pub std_n_words_per_question: f64,
    pub avg_word_length_in_survey: f64,
    pub avg_n_answer_options: f64,
    pub avg_n_words_per_question: f64,
    pub avg_n_words_per_answer_option: f64,
    pub max_word_length_in_survey: usize,
    pub any_special_character: bool,
    pub score_flesch_kincaid: f64,
}

impl FeatureVector {
    /// Values in [`FEATURE_NAMES`] order; the flag maps to 0/1.
    pub fn values(&self) -> [f64; 18] {
        [
            self.n_generated_questions as f64,
            self.n_open_ended_questions as f64,
            self.n_closed_ended_questions as f64,
            self.n_multiple_selection_questions as f64,
            self.n_single_choice_questions as f64,
            self.n_contact_info_questions as f64,
            self.n_nps_questions as f64,
            self.n_unsupported_questions as f64,
            self.n_characters_in_survey as f64,
            self.n_words_in_survey as f64,
            self.std_n_words_per_question,
            self.avg_word_length_in_survey,
            self.avg_n_answer_options,
            self.avg_n_words_per_question,
            self.avg_n_words_per_answer_option,
            self.max_word_length_in_survey as f64,
            if self.any_special_character { 1.0 } else { 0.0 },
            self.score_flesch_kincaid,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = FEATURE_NAMES.iter().position(|n| *n == name)?;
        Some(self.values()[idx])
    }
}

/// A question "admits options" if its type takes a list of answers:
/// single choice, multiple selection, or an unsupported type that actually
/// carries options.
fn admits_options(qtype: &QuestionType, n_options: usize) -> bool {
    qtype.requires_options() || (qtype.is_unsupported() && n_options > 0)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Computes the metadata vector for one survey.
///
/// All sums are integer so the result does not depend on question order.
/// Readability pools per-question token statistics, i.e. each question is
/// its own utterance for sentence counting.
pub fn extract_features(survey: &Survey) -> FeatureVector {
    let counts = question_type_counts(survey);
    let n_q = survey.questions.len();

    let mut stats = TokenStats::default();
    let mut per_question_words = Vec::with_capacity(n_q);
    let mut option_questions = 0usize;
    let mut n_options = 0usize;
    let mut option_words = 0usize;
    let mut special = false;
    for q in &survey.questions {
        let s = TokenStats::of(&q.text);
        per_question_words.push(s.n_words);
        stats.merge(&s);
        special |= has_special_character(&q.text);
        if admits_options(&q.qtype, q.options.len()) {
            option_questions += 1;
            n_options += q.options.len();
        }
        option_words += q
            .options
            .iter()
            .map(|o| tokenize(o.text()).len())
            .sum::<usize>();
    }
    let n_options_all: usize = survey.questions.iter().map(|q| q.options.len()).sum();

    // Joined with single spaces between questions.
    let n_characters = survey
        .questions
        .iter()
        .map(|q| q.text.chars().count())
        .sum::<usize>()
        + n_q.saturating_sub(1);

    let n_words = stats.n_words;
    let total_word_chars: usize = stats.word_lengths.iter().sum();
    let std = if n_q == 0 {
        0.0
    } else {
        // population variance via integer moments: (n*Σx² - (Σx)²) / n²
        let n = n_q as u128;
        let sum: u128 = per_question_words.iter().map(|&w| w as u128).sum();
        let sum_sq: u128 = per_question_words.iter().map(|&w| (w as u128) * (w as u128)).sum();
        let num = n * sum_sq - sum * sum;
        ((num as f64) / ((n * n) as f64)).sqrt()
    };

    FeatureVector {
        n_generated_questions: n_q,
        n_open_ended_questions: counts.open_ended,
        n_closed_ended_questions: counts.closed_ended(),
        n_multiple_selection_questions: counts.multiple_selection,
        n_single_choice_questions: counts.single_choice,
        n_contact_info_questions: counts.contact_info,
        n_nps_questions: counts.nps,
        n_unsupported_questions: counts.unsupported,
        n_characters_in_survey: n_characters,
        n_words_in_survey: n_words,
        std_n_words_per_question: std,
        avg_word_length_in_survey: ratio(total_word_chars, n_words),
        avg_n_answer_options: ratio(n_options, option_questions),
        avg_n_words_per_question: ratio(n_words, n_q),
        avg_n_words_per_answer_option: ratio(option_words, n_options_all),
        max_word_length_in_survey: stats.word_lengths.iter().copied().max().unwrap_or(0),
        any_special_character: special,
        score_flesch_kincaid: stats.flesch_kincaid_grade().unwrap_or(0.0),
    }
}

/// Pooled unigram, bigram and character distributions for one survey's
/// question texts.
pub fn survey_distributions(survey: &Survey) -> [NGramDistribution; 3] {
    let texts: Vec<&str> = survey.questions.iter().map(|q| q.text.as_str()).collect();
    [
        ngram_distribution(&texts, NGramOrder::Unigram),
        ngram_distribution(&texts, NGramOrder::Bigram),
        ngram_distribution(&texts, NGramOrder::Char),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFeatures {
    pub per_record: Vec<(String, FeatureVector)>,
    pub pooled_unigrams: NGramDistribution,
    pub pooled_bigrams: NGramDistribution,
    pub pooled_chars: NGramDistribution,
}

impl CorpusFeatures {
    pub fn empty() -> Self {
        Self {
            per_record: Vec::new(),
            pooled_unigrams: NGramDistribution::empty(NGramOrder::Unigram),
            pooled_bigrams: NGramDistribution::empty(NGramOrder::Bigram),
            pooled_chars: NGramDistribution::empty(NGramOrder::Char),
        }
    }

    pub fn len(&self) -> usize {
        self.per_record.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_record.is_empty()
    }

    /// Column of one scalar feature across records.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = FEATURE_NAMES.iter().position(|n| *n == name)?;
        Some(self.per_record.iter().map(|(_, v)| v.values()[idx]).collect())
    }

    /// Appends another slice's records and pools its distributions.
    pub fn merge(&mut self, other: &CorpusFeatures) {
        self.per_record.extend(other.per_record.iter().cloned());
        self.pooled_unigrams.merge(&other.pooled_unigrams);
        self.pooled_bigrams.merge(&other.pooled_bigrams);
        self.pooled_chars.merge(&other.pooled_chars);
    }

    /// Feature matrix as CSV: `id` followed by the scalar features.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["id"];
        header.extend(FEATURE_NAMES);
        wr.write_record(&header)?;
        for (id, v) in &self.per_record {
            let mut row = vec![id.clone()];
            row.extend(v.values().iter().map(|x| format_value(*x)));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal; integers print without a fraction.
pub fn format_value(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x}").expect("writing to a String cannot fail");
    s
}

pub fn extract_corpus_features(records: &[CorpusRecord]) -> CorpusFeatures {
    let mut out = CorpusFeatures::empty();
    for r in records {
        out.per_record.push((r.id.clone(), extract_features(&r.survey)));
        let [uni, bi, chars] = survey_distributions(&r.survey);
        out.pooled_unigrams.merge(&uni);
        out.pooled_bigrams.merge(&bi);
        out.pooled_chars.merge(&chars);
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum HistogramError {
    #[error("histogram edges must be finite and strictly increasing")]
    BadEdges,
    #[error("bad bin spec '{0}': expected int:LO:HI, width:LO:HI:STEP or edges:E1,E2,...")]
    BadSpec(String),
}

/// Histogram layout over the whole real line: edges `e0 < e1 < ... < ek`
/// give bins `(-inf, e0)`, `[e0, e1)`, ..., `[ek, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBins {
    edges: Vec<f64>,
}

impl HistogramBins {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self, HistogramError> {
        if edges.is_empty()
            || edges.iter().any(|e| !e.is_finite())
            || edges.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(HistogramError::BadEdges);
        }
        Ok(Self { edges })
    }

    /// Unit bins `[v, v+1)` for each integer `v` in `lo..=hi`.
    pub fn integers(lo: i64, hi: i64) -> Result<Self, HistogramError> {
        if hi < lo {
            return Err(HistogramError::BadEdges);
        }
        Self::from_edges((lo..=hi + 1).map(|v| v as f64).collect())
    }

    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self, HistogramError> {
        if !(step.is_finite() && lo.is_finite() && hi.is_finite() && step > 0.0 && hi > lo) {
            return Err(HistogramError::BadEdges);
        }
        let n = ((hi - lo) / step).ceil() as usize;
        Self::from_edges((0..=n).map(|i| lo + step * i as f64).collect())
    }

    /// Parses `int:LO:HI`, `width:LO:HI:STEP` or `edges:E1,E2,...`.
    pub fn parse(spec: &str) -> Result<Self, HistogramError> {
        let bad = || HistogramError::BadSpec(spec.to_string());
        let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
        let nums = |s: &str, sep: char| -> Result<Vec<f64>, HistogramError> {
            s.split(sep)
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        match kind {
            "int" => {
                let v = nums(rest, ':')?;
                if v.len() != 2 || v.iter().any(|x| x.fract() != 0.0) {
                    return Err(bad());
                }
                Self::integers(v[0] as i64, v[1] as i64)
            }
            "width" => {
                let v = nums(rest, ':')?;
                if v.len() != 3 {
                    return Err(bad());
                }
                Self::uniform(v[0], v[1], v[2])
            }
            "edges" => Self::from_edges(nums(rest, ',')?),
            _ => Err(bad()),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    fn index(&self, x: f64) -> usize {
        // number of edges <= x
        self.edges.partition_point(|&e| e <= x)
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { f64::NEG_INFINITY } else { self.edges[i - 1] };
        let hi = self.edges.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: u64,
}

/// Counts values per bin. Values outside the edges land in the open end
/// bins, so counts always sum to `values.len()`. NaN is placed in the
/// upper end bin.
pub fn feature_histogram(values: &[f64], bins: &HistogramBins) -> Vec<HistogramRow> {
    let mut counts = vec![0u64; bins.n_bins()];
    for &x in values {
        let i = if x.is_nan() { bins.n_bins() - 1 } else { bins.index(x) };
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let (bin_low, bin_high) = bins.bounds(i);
            HistogramRow { bin_low, bin_high, count }
        })
        .collect()
}

pub fn write_histogram_csv<W: Write>(w: W, rows: &[HistogramRow]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["bin_low", "bin_high", "count"])?;
    for r in rows {
        wr.write_record([format_value(r.bin_low), format_value(r.bin_high), r.count.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::Question;

    fn survey(qs: Vec<Question>) -> Survey {
        Survey { title: "Ignored title words here".into(), language: None, questions: qs }
    }

    #[test]
    fn uniform_open_ended() {
        let qs = (0..5)
            .map(|_| Question::new("How was your stay with us?", QuestionType::OpenEnded))
            .collect();
        let f = extract_features(&survey(qs));
        assert_eq!(f.n_generated_questions, 5);
        assert_eq!(f.n_open_ended_questions, 5);
        assert_eq!(f.n_closed_ended_questions, 0);
        assert_eq!(f.avg_n_words_per_question, 6.0);
        assert_eq!(f.std_n_words_per_question, 0.0);
        assert_eq!(f.n_words_in_survey, 30);
        assert_eq!(f.avg_n_answer_options, 0.0);
        assert_eq!(f.avg_n_words_per_answer_option, 0.0);
    }

    #[test]
    fn single_choice_pick_one() {
        let f = extract_features(&survey(vec![
            Question::new("Pick one", QuestionType::SingleChoice).with_options(["Yes", "No"]),
        ]));
        assert_eq!(f.avg_n_answer_options, 2.0);
        assert_eq!(f.avg_n_words_per_answer_option, 1.0);
        assert_eq!(f.n_words_in_survey, 2);
        assert_eq!(f.n_characters_in_survey, 8);
        assert_eq!(f.max_word_length_in_survey, 4);
        assert_eq!(f.avg_word_length_in_survey, 3.5);
    }

    #[test]
    fn special_character_flag() {
        let f = extract_features(&survey(vec![Question::new("Rate & review", QuestionType::StarRating)]));
        assert!(f.any_special_character);
        assert_eq!(f.n_closed_ended_questions, 1);
        assert_eq!(f.n_generated_questions, 1);
    }

    #[test]
    fn characters_include_joining_spaces() {
        let f = extract_features(&survey(vec![
            Question::new("Ab?", QuestionType::OpenEnded),
            Question::new("Cd?", QuestionType::OpenEnded),
        ]));
        assert_eq!(f.n_characters_in_survey, 7);
    }

    #[test]
    fn std_is_population() {
        // word counts 1 and 3: mean 2, population variance 1
        let f = extract_features(&survey(vec![
            Question::new("Name?", QuestionType::ContactInfo),
            Question::new("Why come here?", QuestionType::OpenEnded),
        ]));
        assert_eq!(f.std_n_words_per_question, 1.0);
        assert_eq!(f.avg_n_words_per_question, 2.0);
    }

    #[test]
    fn unsupported_types_with_options_count_toward_option_average() {
        let f = extract_features(&survey(vec![
            Question::new("Grid", QuestionType::Other("matrix".into())).with_options(["a", "b", "c", "d"]),
            Question::new("Pick", QuestionType::MultipleSelection).with_options(["x y", "z"]),
            Question::new("Other", QuestionType::Other("slider".into())),
        ]));
        assert_eq!(f.n_unsupported_questions, 2);
        assert_eq!(f.avg_n_answer_options, 3.0);
        assert_eq!(f.avg_n_words_per_answer_option, 7.0 / 6.0);
    }

    #[test]
    fn feature_lookup() {
        let f = extract_features(&survey(vec![Question::new("Hi there", QuestionType::OpenEnded)]));
        assert_eq!(f.get("n_words_in_survey"), Some(2.0));
        assert_eq!(f.get("nope"), None);
        assert_eq!(feature_kind("any_special_character"), Some(FeatureKind::Flag));
        assert_eq!(feature_kind("n_nps_questions"), Some(FeatureKind::Count));
        assert_eq!(feature_kind("score_flesch_kincaid"), Some(FeatureKind::Real));
    }

    #[test]
    fn histogram_integer_bins() {
        let bins = HistogramBins::integers(1, 2).unwrap();
        let rows = feature_histogram(&[1.0, 1.0, 2.0], &bins);
        let counts: Vec<u64> = rows.iter().map(|r| r.count).collect();
        assert_eq!(counts, [0, 2, 1, 0]);
        assert_eq!(rows[1].bin_low, 1.0);
        assert_eq!(rows[1].bin_high, 2.0);
        assert!(rows[0].bin_low.is_infinite());
    }

    #[test]
    fn histogram_empty_and_out_of_range() {
        let bins = HistogramBins::parse("width:0:10:5").unwrap();
        assert!(feature_histogram(&[], &bins).iter().all(|r| r.count == 0));
        let rows = feature_histogram(&[-3.0, 0.0, 9.99, 10.0, 1e9], &bins);
        let counts: Vec<u64> = rows.iter().map(|r| r.count).collect();
        assert_eq!(counts, [1, 1, 1, 2]);
    }

    #[test]
    fn histogram_spec_parsing() {
        assert!(HistogramBins::parse("edges:1,2,3").is_ok());
        assert_eq!(HistogramBins::parse("edges:3,2"), Err(HistogramError::BadEdges));
        assert!(matches!(HistogramBins::parse("int:1.5:3"), Err(HistogramError::BadSpec(_))));
        assert!(matches!(HistogramBins::parse("bogus"), Err(HistogramError::BadSpec(_))));
        assert_eq!(HistogramBins::parse("int:0:3").unwrap().n_bins(), 6);
    }

    #[test]
    fn csv_export_header() {
        let cf = CorpusFeatures::empty();
        let mut buf = Vec::new();
        cf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("id,n_generated_questions,n_open_ended_questions,"));
        assert!(text.trim_end().ends_with("any_special_character,score_flesch_kincaid"));
    }
}
