//! Accept/not-accept prediction: dataset assembly, stratified split, a
//! logistic-regression trainer, evaluation and permutation importance.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusRecord;
use crate::features::{extract_features, feature_histogram, HistogramBins, HistogramRow, FEATURE_NAMES};
use crate::textstats::tokenize;

/// Bumped whenever the column set or order changes.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;
pub const PROMPT_FEATURES: [&str; 2] = ["prompt_char_length", "prompt_word_count"];
pub const UNKNOWN_CATEGORY: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NotAccept,
    Accept,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NotAccept, Label::Accept];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accept => "accept",
            Self::NotAccept => "not_accept",
        }
    }

    fn target(self) -> f64 {
        match self {
            Self::Accept => 1.0,
            Self::NotAccept => 0.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    /// Restarts and drop-outs both count as `not_accept`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "accept" | "accepted" | "1" => Ok(Self::Accept),
            "not_accept" | "not" | "not_accepted" | "restart" | "drop_out" | "dropout" | "0" => {
                Ok(Self::NotAccept)
            }
            other => Err(format!("unknown label '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum AcceptanceError {
    #[error("no outcome for record '{0}'")]
    MissingOutcome(String),
    #[error("class {label} has {n} examples, need at least 2")]
    TooFewInClass { label: Label, n: usize },
    #[error("training set holds a single class")]
    SingleClass,
    #[error("empty dataset")]
    Empty,
    #[error("non-finite value in row {row}, feature '{feature}'")]
    NonFinite { row: usize, feature: String },
    #[error("train_fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error("feature mismatch: {0}")]
    Schema(String),
    #[error("dataset csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset row {row}: {detail}")]
    BadRow { row: usize, detail: String },
}

/// Optional one-hot profile columns. Values outside the category lists, and
/// missing profiles, map to `unknown`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileSchema {
    pub industries: Vec<String>,
    pub job_roles: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub industry: Option<String>,
    pub job_role: Option<String>,
}

impl ProfileSchema {
    fn columns(&self) -> Vec<String> {
        let block = |prefix: &str, cats: &[String]| {
            cats.iter()
                .map(String::as_str)
                .chain([UNKNOWN_CATEGORY])
                .map(|c| format!("{prefix}={c}"))
                .collect::<Vec<_>>()
        };
        let mut cols = block("industry", &self.industries);
        cols.extend(block("job_role", &self.job_roles));
        cols
    }

    fn encode(&self, profile: Option<&Profile>) -> Vec<f64> {
        let one_hot = |cats: &[String], value: Option<&String>| {
            let hit = value.and_then(|v| cats.iter().position(|c| c == v)).unwrap_or(cats.len());
            (0..=cats.len()).map(|i| if i == hit { 1.0 } else { 0.0 }).collect::<Vec<_>>()
        };
        let mut x = one_hot(&self.industries, profile.and_then(|p| p.industry.as_ref()));
        x.extend(one_hot(&self.job_roles, profile.and_then(|p| p.job_role.as_ref())));
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub id: String,
    pub x: Vec<f64>,
    pub y: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub examples: Vec<LabeledExample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut m = BTreeMap::from([(Label::NotAccept, 0), (Label::Accept, 0)]);
        for e in &self.examples {
            *m.get_mut(&e.y).expect("both labels present") += 1;
        }
        m
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.examples.iter().map(|e| e.x[j]).collect()
    }

    fn check_finite(&self) -> Result<(), AcceptanceError> {
        for (row, e) in self.examples.iter().enumerate() {
            if let Some(j) = e.x.iter().position(|v| !v.is_finite()) {
                return Err(AcceptanceError::NonFinite { row, feature: self.feature_names[j].clone() });
            }
        }
        Ok(())
    }

    /// CSV with columns `id,label,<features>`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AcceptanceError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend(self.feature_names.iter().cloned());
        out.write_record(&header)?;
        for e in &self.examples {
            let mut row = vec![e.id.clone(), e.y.to_string()];
            row.extend(e.x.iter().map(|v| crate::features::format_value(*v)));
            out.write_record(&row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads the format written by [`Dataset::write_csv`]; `#` lines are
    /// comments.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, AcceptanceError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 3 || header[0] != "id" || header[1] != "label" {
            return Err(AcceptanceError::Schema("header must start with id,label and name at least one feature".into()));
        }
        let feature_names = header[2..].to_vec();
        let mut examples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let y = rec[1].parse::<Label>().map_err(|detail| AcceptanceError::BadRow { row, detail })?;
            let x = rec
                .iter()
                .skip(2)
                .zip(&feature_names)
                .map(|(v, name)| {
                    v.trim().parse::<f64>().map_err(|_| AcceptanceError::BadRow {
                        row,
                        detail: format!("'{name}' is not a number: '{v}'"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            examples.push(LabeledExample { id: rec[0].to_string(), x, y });
        }
        let ds = Self { feature_names, examples };
        ds.check_finite()?;
        Ok(ds)
    }
}

pub fn base_feature_names() -> Vec<String> {
    PROMPT_FEATURES.iter().chain(FEATURE_NAMES.iter()).map(|s| s.to_string()).collect()
}

fn base_row(r: &CorpusRecord) -> Vec<f64> {
    let mut x = vec![r.prompt_chars() as f64, tokenize(&r.user_prompt).len() as f64];
    x.extend(extract_features(&r.survey).values());
    x
}

pub fn build_dataset(
    records: &[CorpusRecord],
    outcomes: &BTreeMap<String, Label>,
) -> Result<Dataset, AcceptanceError> {
    build_dataset_with_profiles(records, outcomes, None)
}

pub fn build_dataset_with_profiles(
    records: &[CorpusRecord],
    outcomes: &BTreeMap<String, Label>,
    profiles: Option<(&ProfileSchema, &BTreeMap<String, Profile>)>,
) -> Result<Dataset, AcceptanceError> {
    let mut feature_names = base_feature_names();
    if let Some((schema, _)) = profiles {
        feature_names.extend(schema.columns());
    }
    let examples = records
        .iter()
        .map(|r| {
            let y = *outcomes.get(&r.id).ok_or_else(|| AcceptanceError::MissingOutcome(r.id.clone()))?;
            let mut x = base_row(r);
            if let Some((schema, map)) = profiles {
                x.extend(schema.encode(map.get(&r.id)));
            }
            Ok(LabeledExample { id: r.id.clone(), x, y })
        })
        .collect::<Result<Vec<_>, AcceptanceError>>()?;
    Ok(Dataset { feature_names, examples })
}

/// Labels exactly `round(accept_fraction * n)` records as accept, chosen by
/// a seeded shuffle.
pub fn plant_ratio(records: &[CorpusRecord], accept_fraction: f64, seed: u64) -> BTreeMap<String, Label> {
    let n_accept = (accept_fraction * records.len() as f64).round() as usize;
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out: BTreeMap<String, Label> =
        records.iter().map(|r| (r.id.clone(), Label::NotAccept)).collect();
    for &i in &idx[..n_accept] {
        out.insert(records[i].id.clone(), Label::Accept);
    }
    out
}

/// Labels the `round(accept_fraction * n)` shortest prompts as accept; ties
/// broken by id.
pub fn plant_short_prompts_accepted(records: &[CorpusRecord], accept_fraction: f64) -> BTreeMap<String, Label> {
    let n_accept = (accept_fraction * records.len() as f64).round() as usize;
    let mut order: Vec<&CorpusRecord> = records.iter().collect();
    order.sort_by(|a, b| a.prompt_chars().cmp(&b.prompt_chars()).then_with(|| a.id.cmp(&b.id)));
    order
        .iter()
        .enumerate()
        .map(|(rank, r)| (r.id.clone(), if rank < n_accept { Label::Accept } else { Label::NotAccept }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 0 }
    }
}

/// Per-class train counts: each class rounds on its own, then classes are
/// nudged by one (largest rounding error first) until the total equals
/// `round(f * n)`. Every class keeps at least one example on each side.
pub fn stratified_train_counts(class_sizes: &[usize], f: f64) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let target = (f * n as f64).round() as usize;
    let exact: Vec<f64> = class_sizes.iter().map(|&c| f * c as f64).collect();
    let mut counts: Vec<usize> = class_sizes
        .iter()
        .zip(&exact)
        .map(|(&c, &e)| (e.round() as usize).clamp(1, c - 1))
        .collect();
    loop {
        let total: usize = counts.iter().sum();
        if total == target {
            break;
        }
        let pick = if total > target {
            (0..counts.len())
                .filter(|&i| counts[i] > 1)
                .max_by(|&a, &b| (counts[a] as f64 - exact[a]).total_cmp(&(counts[b] as f64 - exact[b])).then(b.cmp(&a)))
        } else {
            (0..counts.len())
                .filter(|&i| counts[i] + 1 < class_sizes[i])
                .max_by(|&a, &b| (exact[a] - counts[a] as f64).total_cmp(&(exact[b] - counts[b] as f64)).then(b.cmp(&a)))
        };
        match pick {
            Some(i) if total > target => counts[i] -= 1,
            Some(i) => counts[i] += 1,
            None => break,
        }
    }
    counts
}

/// Splits into (train, test), each keeping the input order.
pub fn stratified_split(data: &Dataset, cfg: SplitConfig) -> Result<(Dataset, Dataset), AcceptanceError> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(AcceptanceError::BadFraction(cfg.train_fraction));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); Label::ALL.len()];
    for (i, e) in data.examples.iter().enumerate() {
        by_class[e.y as usize].push(i);
    }
    for (label, members) in Label::ALL.iter().zip(&by_class) {
        if members.len() < 2 {
            return Err(AcceptanceError::TooFewInClass { label: *label, n: members.len() });
        }
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let counts = stratified_train_counts(&sizes, cfg.train_fraction);
    let mut in_train = vec![false; data.len()];
    for (c, members) in by_class.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        members.shuffle(&mut rng);
        for &i in &members[..counts[c]] {
            in_train[i] = true;
        }
    }
    let pick = |want: bool| Dataset {
        feature_names: data.feature_names.clone(),
        examples: data
            .examples
            .iter()
            .zip(&in_train)
            .filter(|(_, &t)| t == want)
            .map(|(e, _)| e.clone())
            .collect(),
    };
    Ok((pick(true), pick(false)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 1000, l2: 1e-4 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AcceptanceError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(AcceptanceError::BadConfig(format!("learning_rate {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(AcceptanceError::BadConfig("epochs must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(AcceptanceError::BadConfig(format!("l2 {}", self.l2)));
        }
        Ok(())
    }
}

/// Logistic model over standardized features. `means`/`scales` come from
/// the training set only; a constant feature gets scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub schema_version: u32,
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub config: TrainConfig,
    /// Regularized training loss before each epoch plus the final value.
    #[serde(default, skip_serializing)]
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn regularized_loss(z: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = z.len() as f64;
    let data: f64 = z
        .iter()
        .zip(y)
        .map(|(row, &t)| {
            let s = dot(row, w) + b;
            softplus(s) - t * s
        })
        .sum::<f64>()
        / n;
    data + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<LinearModel, AcceptanceError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(AcceptanceError::Empty);
    }
    data.check_finite()?;
    if data.class_counts().values().any(|&c| c == 0) {
        return Err(AcceptanceError::SingleClass);
    }
    let n = data.len() as f64;
    let d = data.feature_names.len();
    let mut means = vec![0.0; d];
    let mut scales = vec![1.0; d];
    for j in 0..d {
        let col = data.column(j);
        let m = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        means[j] = m;
        if var.sqrt() > 1e-12 {
            scales[j] = var.sqrt();
        }
    }
    let z: Vec<Vec<f64>> = data
        .examples
        .iter()
        .map(|e| e.x.iter().enumerate().map(|(j, v)| (v - means[j]) / scales[j]).collect())
        .collect();
    let y: Vec<f64> = data.examples.iter().map(|e| e.y.target()).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut grad = vec![0.0; d];
    for _ in 0..cfg.epochs {
        history.push(regularized_loss(&z, &y, &w, b, cfg.l2));
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (row, &t) in z.iter().zip(&y) {
            let r = sigmoid(dot(row, &w) + b) - t;
            grad_b += r;
            for (g, v) in grad.iter_mut().zip(row) {
                *g += r * v;
            }
        }
        for (wj, g) in w.iter_mut().zip(&grad) {
            *wj -= cfg.learning_rate * (g / n + cfg.l2 * *wj);
        }
        b -= cfg.learning_rate * grad_b / n;
    }
    history.push(regularized_loss(&z, &y, &w, b, cfg.l2));

    Ok(LinearModel {
        schema_version: FEATURE_SCHEMA_VERSION,
        feature_names: data.feature_names.clone(),
        weights: w,
        bias: b,
        means,
        scales,
        config: *cfg,
        loss_history: history,
    })
}

impl LinearModel {
    /// Probability of `accept`.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let s: f64 = x
            .iter()
            .enumerate()
            .map(|(j, v)| self.weights[j] * (v - self.means[j]) / self.scales[j])
            .sum();
        sigmoid(s + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if self.predict_proba(x) >= 0.5 {
            Label::Accept
        } else {
            Label::NotAccept
        }
    }

    fn check_schema(&self, data: &Dataset) -> Result<(), AcceptanceError> {
        if self.feature_names != data.feature_names {
            return Err(AcceptanceError::Schema("dataset columns differ from the model's".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub n: usize,
    pub accuracy: f64,
    /// `None` when the evaluated set holds one class only.
    pub auc: Option<f64>,
    pub confusion: Confusion,
}

/// Area under the ROC curve via the Mann-Whitney rank statistic, with tied
/// scores given their mid-rank.
pub fn auc(scores: &[f64], labels: &[Label]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l == Label::Accept).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * idx[i..=j].iter().filter(|&&k| labels[k] == Label::Accept).count() as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}

fn accuracy(model: &LinearModel, examples: &[LabeledExample]) -> f64 {
    let hits = examples.iter().filter(|e| model.predict(&e.x) == e.y).count();
    hits as f64 / examples.len() as f64
}

pub fn evaluate(model: &LinearModel, test: &Dataset) -> Result<EvalMetrics, AcceptanceError> {
    model.check_schema(test)?;
    if test.is_empty() {
        return Err(AcceptanceError::Empty);
    }
    let scores: Vec<f64> = test.examples.iter().map(|e| model.predict_proba(&e.x)).collect();
    let labels: Vec<Label> = test.examples.iter().map(|e| e.y).collect();
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&s, &y) in scores.iter().zip(&labels) {
        match (s >= 0.5, y) {
            (true, Label::Accept) => c.tp += 1,
            (true, Label::NotAccept) => c.fp += 1,
            (false, Label::NotAccept) => c.tn += 1,
            (false, Label::Accept) => c.fn_ += 1,
        }
    }
    Ok(EvalMetrics {
        n: test.len(),
        accuracy: (c.tp + c.tn) as f64 / test.len() as f64,
        auc: auc(&scores, &labels),
        confusion: c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Importance {
    pub feature: String,
    pub mean_drop: f64,
    pub std_drop: f64,
}

pub const DEFAULT_REPEATS: usize = 10;

/// Mean accuracy drop when one column is shuffled, ranked descending (ties
/// keep column order). Repetition `r` of column `j` uses its own stream, so
/// results do not depend on evaluation order.
pub fn permutation_importance(
    model: &LinearModel,
    data: &Dataset,
    seed: u64,
    repeats: usize,
) -> Result<Vec<Importance>, AcceptanceError> {
    model.check_schema(data)?;
    if data.is_empty() {
        return Err(AcceptanceError::Empty);
    }
    let base = accuracy(model, &data.examples);
    let mut out = Vec::with_capacity(data.feature_names.len());
    for (j, name) in data.feature_names.iter().enumerate() {
        let mut drops = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((j as u64) << 32) | r as u64);
            let mut col = data.column(j);
            col.shuffle(&mut rng);
            let mut shuffled = data.examples.clone();
            for (e, v) in shuffled.iter_mut().zip(col) {
                e.x[j] = v;
            }
            drops.push(base - accuracy(model, &shuffled));
        }
        let k = drops.len().max(1) as f64;
        let mean = drops.iter().sum::<f64>() / k;
        let var = drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / k;
        out.push(Importance { feature: name.clone(), mean_drop: mean, std_drop: var.sqrt() });
    }
    out.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop));
    Ok(out)
}

/// Histogram of one feature for each label.
pub fn label_histograms(
    data: &Dataset,
    feature: &str,
    bins: &HistogramBins,
) -> Result<Vec<(Label, Vec<HistogramRow>)>, AcceptanceError> {
    let j = data
        .feature_index(feature)
        .ok_or_else(|| AcceptanceError::Schema(format!("unknown feature '{feature}'")))?;
    Ok(Label::ALL
        .iter()
        .map(|&label| {
            let values: Vec<f64> =
                data.examples.iter().filter(|e| e.y == label).map(|e| e.x[j]).collect();
            (label, feature_histogram(&values, bins))
        })
        .collect())
}
