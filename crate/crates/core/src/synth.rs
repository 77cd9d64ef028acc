//! Seeded synthetic corpus generator.
//!
//! Every record draws from its own ChaCha stream (`seed`, stream = record
//! index), so record `i` does not depend on `n_records` and generation can
//! be split across workers without changing the output.

use std::collections::{BTreeMap, HashSet};
use std::sync::LazyLock;

use chrono::{DateTime, Duration, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusRecord;
use crate::survey::{Question, QuestionType, Survey};

const WORDS_TXT: &str = include_str!("../data/words.txt");

/// Bundled vocabulary, deduplicated, in frequency-rank order.
pub static VOCABULARY: LazyLock<Vec<&'static str>> = LazyLock::new(|| {
    let mut seen = HashSet::new();
    WORDS_TXT
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace)
        .filter(|w| seen.insert(*w))
        .collect()
});

/// Distribution of a non-negative integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountDist {
    Fixed(u64),
    /// Inclusive on both ends.
    Uniform { lo: u64, hi: u64 },
    Binomial { n: u64, p: f64 },
}

impl CountDist {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Fixed(k) => k as f64,
            Self::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
            Self::Binomial { n, p } => n as f64 * p,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Fixed(_) => 0.0,
            Self::Uniform { lo, hi } => {
                let w = (hi - lo + 1) as f64;
                (w * w - 1.0) / 12.0
            }
            Self::Binomial { n, p } => n as f64 * p * (1.0 - p),
        }
    }

    pub fn min(&self) -> u64 {
        match *self {
            Self::Fixed(k) => k,
            Self::Uniform { lo, .. } => lo,
            Self::Binomial { .. } => 0,
        }
    }

    pub fn max(&self) -> u64 {
        match *self {
            Self::Fixed(k) => k,
            Self::Uniform { hi, .. } => hi,
            Self::Binomial { n, .. } => n,
        }
    }

    fn check(&self, field: &'static str) -> Result<(), SynthError> {
        let ok = match *self {
            Self::Fixed(_) => true,
            Self::Uniform { lo, hi } => lo <= hi,
            Self::Binomial { p, .. } => (0.0..=1.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(SynthError::BadDistribution { field, detail: format!("{self:?}") })
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Self::Fixed(k) => k,
            Self::Uniform { lo, hi } => rng.random_range(lo..=hi),
            Self::Binomial { n, p } => rand_distr::Binomial::new(n, p).expect("validated").sample(rng),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("{field}: invalid distribution {detail}")]
    BadDistribution { field: &'static str, detail: String },
    #[error("{field} must be at least {min}, distribution allows {got}")]
    BelowMinimum { field: &'static str, min: u64, got: u64 },
    #[error("type_mixture: {0}")]
    BadMixture(String),
    #[error("{field} must be in [0, 1], got {value}")]
    BadProbability { field: &'static str, value: f64 },
    #[error("zipf_s must be finite and non-negative, got {0}")]
    BadZipf(f64),
    #[error("vocab_shift {shift} leaves fewer than 2 words out of {size}")]
    BadShift { shift: usize, size: usize },
}

fn default_language() -> String {
    "en".to_string()
}

fn default_start() -> DateTime<Utc> {
    DateTime::from_timestamp(1_700_000_000, 0).expect("valid timestamp")
}

fn default_zipf() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub n_records: usize,
    pub seed: u64,
    pub variant: String,
    pub question_count: CountDist,
    /// Probability per question type tag; `other:<label>` gives an
    /// unsupported type with that label.
    pub type_mixture: BTreeMap<String, f64>,
    pub words_per_question: CountDist,
    pub options_per_question: CountDist,
    pub words_per_option: CountDist,
    /// Prompt length in characters; prompts carry no outer whitespace.
    pub prompt_length: CountDist,
    #[serde(default = "default_language")]
    pub language: String,
    #[serde(default)]
    pub pii_rate: f64,
    /// Zipf exponent over vocabulary rank; 0 is uniform.
    #[serde(default = "default_zipf")]
    pub zipf_s: f64,
    /// Drops the first `vocab_shift` ranks, moving mass to rarer words.
    #[serde(default)]
    pub vocab_shift: usize,
    #[serde(default = "default_start")]
    pub start_time: DateTime<Utc>,
}

impl GenSpec {
    /// A small all-defaults spec, handy as a starting point.
    pub fn example(n_records: usize, seed: u64, variant: &str) -> Self {
        Self {
            n_records,
            seed,
            variant: variant.to_string(),
            question_count: CountDist::Uniform { lo: 5, hi: 12 },
            type_mixture: BTreeMap::from([
                ("open_ended".to_string(), 0.4),
                ("single_choice".to_string(), 0.3),
                ("multiple_selection".to_string(), 0.2),
                ("star_rating".to_string(), 0.1),
            ]),
            words_per_question: CountDist::Uniform { lo: 4, hi: 14 },
            options_per_question: CountDist::Uniform { lo: 2, hi: 6 },
            words_per_option: CountDist::Uniform { lo: 1, hi: 4 },
            prompt_length: CountDist::Uniform { lo: 200, hi: 500 },
            language: default_language(),
            pii_rate: 0.0,
            zipf_s: default_zipf(),
            vocab_shift: 0,
            start_time: default_start(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let dists = [
            ("question_count", &self.question_count, 1),
            ("words_per_question", &self.words_per_question, 1),
            ("options_per_question", &self.options_per_question, 2),
            ("words_per_option", &self.words_per_option, 1),
            ("prompt_length", &self.prompt_length, 1),
        ];
        for (field, d, min) in dists {
            d.check(field)?;
            if d.min() < min {
                return Err(SynthError::BelowMinimum { field, min, got: d.min() });
            }
        }
        self.mixture()?;
        if !(0.0..=1.0).contains(&self.pii_rate) {
            return Err(SynthError::BadProbability { field: "pii_rate", value: self.pii_rate });
        }
        if !self.zipf_s.is_finite() || self.zipf_s < 0.0 {
            return Err(SynthError::BadZipf(self.zipf_s));
        }
        let size = VOCABULARY.len();
        if self.vocab_shift + 2 > size {
            return Err(SynthError::BadShift { shift: self.vocab_shift, size });
        }
        Ok(())
    }

    /// Parsed mixture in tag order.
    fn mixture(&self) -> Result<Vec<(QuestionType, f64)>, SynthError> {
        if self.type_mixture.is_empty() {
            return Err(SynthError::BadMixture("empty".into()));
        }
        let mut out = Vec::new();
        let mut sum = 0.0;
        for (tag, &p) in &self.type_mixture {
            if !p.is_finite() || p < 0.0 {
                return Err(SynthError::BadMixture(format!("'{tag}' has weight {p}")));
            }
            let qt = match tag.strip_prefix("other:") {
                Some(label) if !label.is_empty() => QuestionType::Other(label.to_string()),
                Some(_) => return Err(SynthError::BadMixture("empty other label".into())),
                None => match QuestionType::from_tag(tag) {
                    Some(qt) if !qt.is_unsupported() => qt,
                    _ => return Err(SynthError::BadMixture(format!("unknown tag '{tag}'"))),
                },
            };
            sum += p;
            out.push((qt, p));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SynthError::BadMixture(format!("weights sum to {sum}")));
        }
        Ok(out)
    }
}

struct Sampler {
    words: &'static [&'static str],
    word_index: WeightedIndex<f64>,
    types: Vec<QuestionType>,
    type_index: WeightedIndex<f64>,
}

impl Sampler {
    fn new(spec: &GenSpec) -> Self {
        let words = &VOCABULARY[spec.vocab_shift..];
        let weights: Vec<f64> = (1..=words.len()).map(|r| (r as f64).powf(-spec.zipf_s)).collect();
        let mixture = spec.mixture().expect("validated");
        let (types, probs): (Vec<_>, Vec<_>) = mixture.into_iter().unzip();
        Self {
            words,
            word_index: WeightedIndex::new(weights).expect("positive weights"),
            types,
            type_index: WeightedIndex::new(probs).expect("mixture has positive mass"),
        }
    }

    fn word(&self, rng: &mut ChaCha8Rng) -> &'static str {
        self.words[self.word_index.sample(rng)]
    }

    fn phrase(&self, rng: &mut ChaCha8Rng, n: u64) -> String {
        (0..n).map(|_| self.word(rng)).collect::<Vec<_>>().join(" ")
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Exactly `len` characters, no outer whitespace.
fn prompt_text(s: &Sampler, rng: &mut ChaCha8Rng, len: usize) -> String {
    let mut text = String::from("Create a survey about");
    while text.len() < len {
        text.push(' ');
        text.push_str(s.word(rng));
    }
    text.truncate(len);
    if text.ends_with(' ') {
        text.pop();
        text.push('s');
    }
    text
}

fn options(s: &Sampler, rng: &mut ChaCha8Rng, spec: &GenSpec) -> Vec<String> {
    let n = spec.options_per_question.sample(rng) as usize;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let wc = spec.words_per_option.sample(rng);
        let base = capitalize(&s.phrase(rng, wc));
        // Collisions are common under heavy Zipf skew.
        let mut text = base.clone();
        let mut k = j + 1;
        while !seen.insert(text.clone()) {
            text = format!("{base} {k}");
            k += 1;
        }
        out.push(text);
    }
    out
}

fn record(spec: &GenSpec, s: &Sampler, i: usize) -> CorpusRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(i as u64);

    let n_questions = spec.question_count.sample(&mut rng);
    let mut questions = Vec::with_capacity(n_questions as usize);
    for _ in 0..n_questions {
        let qtype = s.types[s.type_index.sample(&mut rng)].clone();
        let wc = spec.words_per_question.sample(&mut rng);
        let text = format!("{}?", capitalize(&s.phrase(&mut rng, wc)));
        let mut q = Question::new(text, qtype);
        if q.qtype.requires_options() {
            q = q.with_options(options(s, &mut rng, spec));
        }
        questions.push(q);
    }
    let title = format!("Survey on {}", s.phrase(&mut rng, 2));
    let prompt_len = spec.prompt_length.sample(&mut rng) as usize;
    let user_prompt = prompt_text(s, &mut rng, prompt_len);
    let pii_flagged = rng.random_bool(spec.pii_rate);

    CorpusRecord {
        id: format!("{}-{:06}", spec.variant, i),
        variant: spec.variant.clone(),
        user_prompt,
        pii_flagged,
        language: spec.language.clone(),
        created_at: spec.start_time + Duration::seconds(60 * i as i64),
        survey: Survey { title, language: Some(spec.language.clone()), questions },
    }
}

pub fn generate(spec: &GenSpec) -> Result<Vec<CorpusRecord>, SynthError> {
    spec.validate()?;
    let sampler = Sampler::new(spec);
    Ok((0..spec.n_records).map(|i| record(spec, &sampler, i)).collect())
}
