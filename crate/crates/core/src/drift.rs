//! Population Stability Index drift tests between two corpus slices.
//!
//! `PSI = Σ (actual_i - expected_i) * ln(actual_i / expected_i)` over the
//! bins of a shared layout. Buckets: `< 0.1` pass, `< 0.2` moderate,
//! `>= 0.2` fail. Report totals are binary: only fail counts as FAIL.
//!
//! Bin layouts come from the baseline slice. Every bin mass gets `epsilon`
//! added before renormalizing so no bin is empty.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{feature_kind, CorpusFeatures, FeatureKind, DISTRIBUTION_NAMES, FEATURE_NAMES};
use crate::textstats::NGramDistribution;

#[derive(Debug, Error, PartialEq)]
pub enum DriftError {
    #[error("probability vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("probability vectors need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("bin {0} has non-positive or non-finite mass; smooth before calling psi")]
    NonPositiveMass(usize),
    #[error("probability vector sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("baseline slice is empty")]
    EmptyBaseline,
    #[error("candidate slice is empty")]
    EmptyCandidate,
    #[error("invalid bin spec: {0}")]
    BadBinSpec(String),
    #[error("invalid drift config: {0}")]
    BadConfig(String),
}

/// PSI of two smoothed probability vectors. Symmetric in its arguments and
/// zero exactly when the vectors are equal.
pub fn psi(expected: &[f64], actual: &[f64]) -> Result<f64, DriftError> {
    if expected.len() != actual.len() {
        return Err(DriftError::LengthMismatch(expected.len(), actual.len()));
    }
    if expected.len() < 2 {
        return Err(DriftError::TooFewBins(expected.len()));
    }
    for v in [expected, actual] {
        if let Some(i) = v.iter().position(|&p| !p.is_finite() || p <= 0.0) {
            return Err(DriftError::NonPositiveMass(i));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(DriftError::NotNormalized(s));
        }
    }
    // (a - e) * (ln a - ln e) is bitwise symmetric under swapping a and e.
    Ok(expected
        .iter()
        .zip(actual)
        .map(|(&e, &a)| (a - e) * (a.ln() - e.ln()))
        .sum())
}

/// Adds `epsilon` to every bin's share of `counts` and renormalizes.
pub fn smooth(counts: &[u64], epsilon: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let raw: Vec<f64> = counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 } + epsilon)
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / z).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinSpec {
    /// One bin per distinct value when the baseline holds at most
    /// `max_distinct` distinct integers; otherwise `fallback_quantiles`
    /// quantile bins.
    IntegerBins { max_distinct: usize, fallback_quantiles: usize },
    QuantileBins { k: usize },
    /// The `top_k` most frequent baseline values plus one OTHER bucket.
    Categorical { top_k: usize },
}

impl BinSpec {
    pub fn validate(&self) -> Result<(), DriftError> {
        match *self {
            Self::IntegerBins { fallback_quantiles: k, .. } | Self::QuantileBins { k } if k < 2 => {
                Err(DriftError::BadBinSpec(format!("quantile k must be >= 2, got {k}")))
            }
            Self::Categorical { top_k: 0 } => Err(DriftError::BadBinSpec("categorical top_k must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

/// Concrete layout resolved from the baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum BinLayout {
    /// One bin per listed value; the trailing bucket catches anything else
    /// and only exists as padding when fewer than two values were seen.
    Values { values: Vec<f64>, padded: bool },
    /// Interior edges; bins are `(-inf, e1]`, `(e1, e2]`, ..., `(ek, +inf)`.
    Quantile { edges: Vec<f64> },
    Categorical { categories: Vec<f64> },
}

impl BinLayout {
    pub fn n_bins(&self) -> usize {
        match self {
            Self::Values { values, padded } => values.len() + usize::from(*padded),
            Self::Quantile { edges } => edges.len() + 1,
            Self::Categorical { categories } => categories.len() + 1,
        }
    }

    fn index(&self, x: f64) -> usize {
        match self {
            Self::Values { values, .. } => values
                .iter()
                .position(|&v| v == x)
                .unwrap_or(values.len()),
            Self::Quantile { edges } => edges.partition_point(|&e| e < x),
            Self::Categorical { categories } => categories
                .iter()
                .position(|&v| v == x)
                .unwrap_or(categories.len()),
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Self::Values { values, .. } => format!("integer({})", values.len()),
            Self::Quantile { edges } => format!("quantile({})", edges.len() + 1),
            Self::Categorical { categories } => format!("categorical({}+other)", categories.len()),
        }
    }

    fn counts(&self, xs: &[f64]) -> Vec<u64> {
        let mut c = vec![0u64; self.n_bins()];
        for &x in xs {
            c[self.index(x)] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPair {
    pub layout: BinLayout,
    pub expected: Vec<f64>,
    pub actual: Vec<f64>,
}

/// Lower empirical quantile of sorted data: the smallest x with
/// F(x) >= q.
fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn quantile_edges(baseline: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = baseline.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..k)
        .map(|j| lower_quantile(&sorted, j as f64 / k as f64))
        .collect();
    edges.dedup();
    if edges.is_empty() {
        edges.push(sorted[0]);
    }
    edges
}

fn top_k_values(baseline: &[f64], top_k: usize) -> Vec<f64> {
    let mut freq: Vec<(f64, u64)> = Vec::new();
    let mut sorted = baseline.to_vec();
    sorted.sort_by(f64::total_cmp);
    for x in sorted {
        match freq.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => freq.push((x, 1)),
        }
    }
    // most frequent first, ties by smaller value
    freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.total_cmp(&b.0)));
    freq.into_iter().take(top_k).map(|(v, _)| v).collect()
}

pub fn resolve_layout(baseline: &[f64], candidate: &[f64], spec: &BinSpec) -> Result<BinLayout, DriftError> {
    spec.validate()?;
    if baseline.is_empty() {
        return Err(DriftError::EmptyBaseline);
    }
    let layout = match *spec {
        BinSpec::IntegerBins { max_distinct, fallback_quantiles } => {
            let all_integer = baseline.iter().all(|x| x.fract() == 0.0);
            let distinct: BTreeSet<i64> = baseline.iter().map(|&x| x as i64).collect();
            if all_integer && distinct.len() <= max_distinct {
                let mut values: Vec<f64> = baseline.iter().chain(candidate).copied().collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                let padded = values.len() < 2;
                BinLayout::Values { values, padded }
            } else {
                BinLayout::Quantile { edges: quantile_edges(baseline, fallback_quantiles) }
            }
        }
        BinSpec::QuantileBins { k } => BinLayout::Quantile { edges: quantile_edges(baseline, k) },
        BinSpec::Categorical { top_k } => BinLayout::Categorical { categories: top_k_values(baseline, top_k) },
    };
    Ok(layout)
}

/// Bins both slices with the same baseline-derived layout and returns
/// smoothed probability vectors.
pub fn bin_values(
    baseline: &[f64],
    candidate: &[f64],
    spec: &BinSpec,
    epsilon: f64,
) -> Result<BinnedPair, DriftError> {
    if candidate.is_empty() {
        return Err(DriftError::EmptyCandidate);
    }
    let layout = resolve_layout(baseline, candidate, spec)?;
    let expected = smooth(&layout.counts(baseline), epsilon);
    let actual = smooth(&layout.counts(candidate), epsilon);
    Ok(BinnedPair { layout, expected, actual })
}

pub const OTHER_BUCKET: &str = "<OTHER>";

/// Top-k baseline grams (ties broken lexicographically) plus an OTHER
/// bucket for everything else in either slice.
pub fn gram_categories(baseline: &NGramDistribution, top_k: usize) -> Vec<&str> {
    let mut grams: Vec<(&str, u64)> = baseline.counts.iter().map(|(g, &c)| (g.as_str(), c)).collect();
    grams.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    grams.into_iter().take(top_k).map(|(g, _)| g).collect()
}

pub fn distribution_psi(
    baseline: &NGramDistribution,
    candidate: &NGramDistribution,
    top_k: usize,
    epsilon: f64,
) -> Result<f64, DriftError> {
    if baseline.total == 0 {
        return Err(DriftError::EmptyBaseline);
    }
    if candidate.total == 0 {
        return Err(DriftError::EmptyCandidate);
    }
    if top_k == 0 {
        return Err(DriftError::BadBinSpec("top_k must be >= 1".into()));
    }
    let cats = gram_categories(baseline, top_k);
    let bucket = |dist: &NGramDistribution| -> Vec<u64> {
        let mut counts: Vec<u64> = cats.iter().map(|g| dist.counts.get(*g).copied().unwrap_or(0)).collect();
        let in_cats: u64 = counts.iter().sum();
        counts.push(dist.total - in_cats);
        counts
    };
    psi(&smooth(&bucket(baseline), epsilon), &smooth(&bucket(candidate), epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Moderate,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Moderate => "MODERATE",
            Self::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub moderate: f64,
    pub fail: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { moderate: 0.1, fail: 0.2 }
    }
}

impl Thresholds {
    pub fn status(&self, psi: f64) -> Status {
        if psi < self.moderate {
            Status::Pass
        } else if psi < self.fail {
            Status::Moderate
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub thresholds: Thresholds,
    pub epsilon: f64,
    /// Applied to count and real features.
    pub numeric_bins: BinSpec,
    /// Applied to the boolean feature.
    pub flag_bins: BinSpec,
    pub ngram_top_k: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            epsilon: 1e-4,
            numeric_bins: BinSpec::IntegerBins { max_distinct: 20, fallback_quantiles: 10 },
            flag_bins: BinSpec::Categorical { top_k: 2 },
            ngram_top_k: 500,
        }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<(), DriftError> {
        let t = self.thresholds;
        if !(t.moderate > 0.0 && t.moderate <= t.fail && t.fail.is_finite()) {
            return Err(DriftError::BadConfig(format!(
                "thresholds must satisfy 0 < moderate <= fail, got {} / {}",
                t.moderate, t.fail
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(DriftError::BadConfig("epsilon must be positive".into()));
        }
        if self.ngram_top_k == 0 {
            return Err(DriftError::BadConfig("ngram_top_k must be >= 1".into()));
        }
        self.numeric_bins.validate()?;
        self.flag_bins.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiResult {
    pub feature: String,
    pub psi: f64,
    pub status: Status,
    pub bins: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub baseline: String,
    pub candidate: String,
    pub config: DriftConfig,
    pub rows: Vec<PsiResult>,
    pub n_fail: usize,
    pub n_pass: usize,
    pub max_feature: String,
}

impl DriftReport {
    pub fn row(&self, feature: &str) -> Option<&PsiResult> {
        self.rows.iter().find(|r| r.feature == feature)
    }

    pub fn failed(&self) -> impl Iterator<Item = &PsiResult> {
        self.rows.iter().filter(|r| r.status == Status::Fail)
    }

    pub fn label(&self) -> String {
        format!("<{}, {}>", self.baseline, self.candidate)
    }
}

/// One PSI row per scalar feature, then the unigram, bigram and character
/// distribution rows.
pub fn run_drift(
    baseline_label: &str,
    baseline: &CorpusFeatures,
    candidate_label: &str,
    candidate: &CorpusFeatures,
    cfg: &DriftConfig,
) -> Result<DriftReport, DriftError> {
    cfg.validate()?;
    if baseline.is_empty() {
        return Err(DriftError::EmptyBaseline);
    }
    if candidate.is_empty() {
        return Err(DriftError::EmptyCandidate);
    }

    let mut rows = Vec::with_capacity(FEATURE_NAMES.len() + DISTRIBUTION_NAMES.len());
    for name in FEATURE_NAMES {
        let b = baseline.column(name).expect("known feature");
        let c = candidate.column(name).expect("known feature");
        let spec = match feature_kind(name) {
            Some(FeatureKind::Flag) => cfg.flag_bins,
            _ => cfg.numeric_bins,
        };
        let pair = bin_values(&b, &c, &spec, cfg.epsilon)?;
        let value = psi(&pair.expected, &pair.actual)?;
        rows.push(PsiResult {
            feature: name.to_string(),
            psi: value,
            status: cfg.thresholds.status(value),
            bins: pair.layout.summary(),
        });
    }

    let dists = [
        (&baseline.pooled_unigrams, &candidate.pooled_unigrams),
        (&baseline.pooled_bigrams, &candidate.pooled_bigrams),
        (&baseline.pooled_chars, &candidate.pooled_chars),
    ];
    for (name, (b, c)) in DISTRIBUTION_NAMES.iter().zip(dists) {
        let (value, bins) = if b.total == 0 && c.total == 0 {
            // Nothing to compare (e.g. no question has two tokens).
            (0.0, "empty".to_string())
        } else if b.total == 0 || c.total == 0 {
            // One side has grams, the other none: score it as two disjoint
            // categories.
            let (bc, cc) = if b.total == 0 { ([0, 1], [1, 0]) } else { ([1, 0], [0, 1]) };
            (
                psi(&smooth(&bc, cfg.epsilon), &smooth(&cc, cfg.epsilon))?,
                "empty-vs-nonempty".to_string(),
            )
        } else {
            let k = cfg.ngram_top_k.min(b.unique());
            (
                distribution_psi(b, c, cfg.ngram_top_k, cfg.epsilon)?,
                format!("categorical({k}+other)"),
            )
        };
        rows.push(PsiResult {
            feature: name.to_string(),
            psi: value,
            status: cfg.thresholds.status(value),
            bins,
        });
    }

    let n_fail = rows.iter().filter(|r| r.status == Status::Fail).count();
    let n_pass = rows.len() - n_fail;
    let max_feature = rows
        .iter()
        .fold(None::<&PsiResult>, |best, r| match best {
            Some(b) if b.psi >= r.psi => Some(b),
            _ => Some(r),
        })
        .map(|r| r.feature.clone())
        .unwrap_or_default();

    Ok(DriftReport {
        baseline: baseline_label.to_string(),
        candidate: candidate_label.to_string(),
        config: cfg.clone(),
        rows,
        n_fail,
        n_pass,
        max_feature,
    })
}

/// Formats a PSI for tables; values under 1e-6 print as 0.000.
pub fn format_psi(psi: f64) -> String {
    if psi < 1e-6 {
        "0.000".to_string()
    } else if psi.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psi:.3}")
    }
}

/// Per-feature PSI table with one column per comparison (the largest PSI
/// in each column is starred), followed by FAIL/PASS totals.
pub fn render_table(reports: &[DriftReport]) -> String {
    let mut features: Vec<&str> = Vec::new();
    for r in reports {
        for row in &r.rows {
            if !features.contains(&row.feature.as_str()) {
                features.push(&row.feature);
            }
        }
    }
    let labels: Vec<String> = reports.iter().map(DriftReport::label).collect();
    let fw = features.iter().map(|f| f.len()).max().unwrap_or(8).max(8) + 2;
    let cw: Vec<usize> = labels.iter().map(|l| l.len().max(10) + 2).collect();

    let mut out = String::new();
    out.push_str(&format!("{:<fw$}", "feature"));
    for (l, w) in labels.iter().zip(&cw) {
        out.push_str(&format!("{l:>w$}"));
    }
    out.push('\n');

    let lookup: Vec<HashMap<&str, &PsiResult>> = reports
        .iter()
        .map(|r| r.rows.iter().map(|row| (row.feature.as_str(), row)).collect())
        .collect();
    for f in &features {
        out.push_str(&format!("{f:<fw$}"));
        for ((r, rows), w) in reports.iter().zip(&lookup).zip(&cw) {
            let cell = match rows.get(f) {
                Some(row) => {
                    let mut s = format_psi(row.psi);
                    if row.status == Status::Fail {
                        s.push('!');
                    }
                    if r.max_feature == *f {
                        s.push('*');
                    }
                    s
                }
                None => "-".to_string(),
            };
            out.push_str(&format!("{cell:>w$}"));
        }
        out.push('\n');
    }

    out.push('\n');
    let ew = labels.iter().map(String::len).max().unwrap_or(10).max(10) + 2;
    out.push_str(&format!("{:<ew$}{:>6}{:>6}\n", "comparison", "FAIL", "PASS"));
    for (r, l) in reports.iter().zip(&labels) {
        out.push_str(&format!("{l:<ew$}{:>6}{:>6}\n", r.n_fail, r.n_pass));
    }
    let cfg = reports.first().map(|r| &r.config);
    if let Some(c) = cfg {
        out.push_str(&format!(
            "\n! = FAIL (psi >= {}), * = largest shift; epsilon={}, ngram top_k={}; \
             empty averages are reported as 0.0\n",
            c.thresholds.fail, c.epsilon, c.ngram_top_k
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textstats::{ngram_distribution, NGramOrder};

    #[test]
    fn psi_identical_is_zero() {
        assert_eq!(psi(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn psi_hand_computed() {
        let want = 0.3 * 1.6f64.ln() + (-0.3) * 0.4f64.ln();
        let got = psi(&[0.5, 0.5], &[0.8, 0.2]).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.4159).abs() < 1e-3);
        assert_eq!(got, psi(&[0.8, 0.2], &[0.5, 0.5]).unwrap());
    }

    #[test]
    fn psi_errors() {
        assert_eq!(psi(&[1.0], &[1.0]), Err(DriftError::TooFewBins(1)));
        assert_eq!(psi(&[0.5, 0.5], &[1.0 / 3.0; 3]), Err(DriftError::LengthMismatch(2, 3)));
        assert_eq!(psi(&[1.0, 0.0], &[0.5, 0.5]), Err(DriftError::NonPositiveMass(1)));
        assert!(matches!(psi(&[0.6, 0.6], &[0.5, 0.5]), Err(DriftError::NotNormalized(_))));
    }

    #[test]
    fn thresholds() {
        let t = Thresholds::default();
        assert_eq!(t.status(0.05), Status::Pass);
        assert_eq!(t.status(0.1), Status::Moderate);
        assert_eq!(t.status(0.15), Status::Moderate);
        assert_eq!(t.status(0.2), Status::Fail);
        assert_eq!(t.status(0.25), Status::Fail);
    }

    #[test]
    fn integer_bins_pre_smoothing() {
        let pair = bin_values(
            &[1.0, 1.0, 2.0, 2.0],
            &[1.0, 2.0],
            &BinSpec::IntegerBins { max_distinct: 20, fallback_quantiles: 10 },
            0.0,
        )
        .unwrap();
        assert_eq!(pair.expected, [0.5, 0.5]);
        assert_eq!(pair.actual, [0.5, 0.5]);
    }

    #[test]
    fn unseen_candidate_value_gets_a_bin() {
        let eps = 1e-4;
        let pair = bin_values(
            &[1.0, 1.0, 2.0, 2.0],
            &[1.0, 3.0],
            &BinSpec::IntegerBins { max_distinct: 20, fallback_quantiles: 10 },
            eps,
        )
        .unwrap();
        assert_eq!(pair.layout, BinLayout::Values { values: vec![1.0, 2.0, 3.0], padded: false });
        let floor = eps / (1.0 + 3.0 * eps);
        assert!((pair.expected[2] - floor).abs() < 1e-15);
    }

    #[test]
    fn constant_feature_is_padded_to_two_bins() {
        let pair = bin_values(&[0.0; 5], &[0.0; 3], &DriftConfig::default().numeric_bins, 1e-4).unwrap();
        assert_eq!(pair.layout.n_bins(), 2);
        assert_eq!(psi(&pair.expected, &pair.actual).unwrap(), 0.0);
    }

    #[test]
    fn many_distinct_values_fall_back_to_quantiles() {
        let base: Vec<f64> = (0..100).map(f64::from).collect();
        let pair = bin_values(&base, &base, &DriftConfig::default().numeric_bins, 1e-4).unwrap();
        match &pair.layout {
            BinLayout::Quantile { edges } => assert_eq!(edges.len(), 9),
            other => panic!("expected quantile layout, got {other:?}"),
        }
        assert!(pair.expected.iter().all(|&p| (p - 0.1).abs() < 1e-9));
    }

    #[test]
    fn quantile_edges_collapse_duplicates() {
        let base = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.5, 3.5];
        let edges = quantile_edges(&base, 10);
        assert_eq!(edges, [1.0, 2.5]);
    }

    #[test]
    fn empty_inputs_are_errors() {
        let spec = BinSpec::QuantileBins { k: 4 };
        assert_eq!(bin_values(&[], &[1.0], &spec, 1e-4), Err(DriftError::EmptyBaseline));
        assert_eq!(bin_values(&[1.0], &[], &spec, 1e-4), Err(DriftError::EmptyCandidate));
        assert!(BinSpec::QuantileBins { k: 1 }.validate().is_err());
        assert!(BinSpec::Categorical { top_k: 0 }.validate().is_err());
    }

    #[test]
    fn categorical_top_k() {
        let cats = top_k_values(&[3.0, 1.0, 1.0, 2.0, 2.0, 5.0], 2);
        assert_eq!(cats, [1.0, 2.0]);
        let pair = bin_values(&[0.0, 0.0, 1.0], &[1.0, 1.0], &BinSpec::Categorical { top_k: 2 }, 0.0).unwrap();
        assert_eq!(pair.layout.n_bins(), 3);
        assert_eq!(pair.actual[1], 1.0);
    }

    #[test]
    fn distribution_psi_identity_and_disjoint() {
        let a = ngram_distribution(&["the cat the dog"], NGramOrder::Unigram);
        assert!(distribution_psi(&a, &a, 500, 1e-4).unwrap() < 1e-6);

        let mut base = NGramDistribution::empty(NGramOrder::Unigram);
        base.add("a".into(), 9);
        base.add("b".into(), 1);
        assert!(distribution_psi(&base, &base.clone(), 1, 1e-4).unwrap() < 1e-6);

        let mut cand = NGramDistribution::empty(NGramOrder::Unigram);
        cand.add("z".into(), 10);
        let mut only_a = NGramDistribution::empty(NGramOrder::Unigram);
        only_a.add("a".into(), 10);
        let eps = 1e-4;
        let got = distribution_psi(&only_a, &cand, 1, eps).unwrap();
        // two categories {a, OTHER}: masses swap between the slices
        let z = 1.0 + 2.0 * eps;
        let (hi, lo) = ((1.0 + eps) / z, eps / z);
        let want = 2.0 * (hi - lo) * (hi / lo).ln();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!(got > 0.2);
    }

    #[test]
    fn gram_categories_break_ties_lexicographically() {
        let mut d = NGramDistribution::empty(NGramOrder::Unigram);
        for g in ["b", "a", "c"] {
            d.add(g.into(), 2);
        }
        d.add("z".into(), 5);
        assert_eq!(gram_categories(&d, 3), ["z", "a", "b"]);
    }

    #[test]
    fn psi_formatting() {
        assert_eq!(format_psi(3e-7), "0.000");
        assert_eq!(format_psi(0.41588), "0.416");
        assert_eq!(format_psi(f64::INFINITY), "inf");
    }

    #[test]
    fn config_validation() {
        assert!(DriftConfig::default().validate().is_ok());
        let bad = DriftConfig { thresholds: Thresholds { moderate: 0.3, fail: 0.2 }, ..Default::default() };
        assert!(bad.validate().is_err());
        let parsed: DriftConfig =
            serde_json::from_str(r#"{"numeric_bins":{"kind":"quantile_bins","k":5}}"#).unwrap();
        assert_eq!(parsed.numeric_bins, BinSpec::QuantileBins { k: 5 });
        assert_eq!(parsed.ngram_top_k, 500);
    }
}
