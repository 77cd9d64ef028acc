//! Pre-generation safeguards: a rule-based prompt gate and a per-user
//! sliding-window rate limiter.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::Mutex;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shipped rule set. The red-team prompts they are tested against live in
/// `fixtures/` and were written for this repository.
pub const DEFAULT_RULES_JSON: &str = include_str!("../rules/default_rules.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    LeakAttempt,
    OffTopic,
}

/// One entry of a rule file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub id: String,
    pub kind: RuleKind,
    pub pattern: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub id: String,
    pub description: String,
    regex: Regex,
}

impl Rule {
    pub fn compile(id: &str, pattern: &str, description: &str) -> Result<Self, GateConfigError> {
        let regex = RegexBuilder::new(pattern)
            .case_insensitive(true)
            .build()
            .map_err(|e| GateConfigError::BadPattern { id: id.to_string(), detail: e.to_string() })?;
        Ok(Self { id: id.to_string(), description: description.to_string(), regex })
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.regex.is_match(text)
    }

    pub fn pattern(&self) -> &str {
        self.regex.as_str()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GateConfigError {
    #[error("rule '{id}' has an invalid pattern: {detail}")]
    BadPattern { id: String, detail: String },
    #[error("duplicate rule id '{0}'")]
    DuplicateId(String),
    #[error("max_prompt_chars must be positive")]
    ZeroLimit,
    #[error("rule file is not valid JSON: {0}")]
    BadJson(String),
}

#[derive(Debug, Clone)]
pub struct GateConfig {
    pub max_prompt_chars: usize,
    pub off_topic_rules: Vec<Rule>,
    pub leak_rules: Vec<Rule>,
}

impl GateConfig {
    /// Compiles rule specs, keeping file order within each kind.
    pub fn new(max_prompt_chars: usize, specs: &[RuleSpec]) -> Result<Self, GateConfigError> {
        if max_prompt_chars == 0 {
            return Err(GateConfigError::ZeroLimit);
        }
        let mut ids = HashSet::new();
        let mut off_topic_rules = Vec::new();
        let mut leak_rules = Vec::new();
        for s in specs {
            if !ids.insert(s.id.as_str()) {
                return Err(GateConfigError::DuplicateId(s.id.clone()));
            }
            let rule = Rule::compile(&s.id, &s.pattern, &s.description)?;
            match s.kind {
                RuleKind::LeakAttempt => leak_rules.push(rule),
                RuleKind::OffTopic => off_topic_rules.push(rule),
            }
        }
        Ok(Self { max_prompt_chars, off_topic_rules, leak_rules })
    }

    pub fn from_json(max_prompt_chars: usize, json: &str) -> Result<Self, GateConfigError> {
        let specs: Vec<RuleSpec> =
            serde_json::from_str(json).map_err(|e| GateConfigError::BadJson(e.to_string()))?;
        Self::new(max_prompt_chars, &specs)
    }

    pub fn with_default_rules(max_prompt_chars: usize) -> Result<Self, GateConfigError> {
        Self::from_json(max_prompt_chars, DEFAULT_RULES_JSON)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    TooLong { chars: usize, limit: usize },
    LeakAttempt { rule_id: String },
    OffTopic { rule_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GateDecision {
    Allow,
    Reject(RejectReason),
}

impl GateDecision {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Self::Allow)
    }

    pub fn rule_id(&self) -> Option<&str> {
        match self {
            Self::Reject(RejectReason::LeakAttempt { rule_id } | RejectReason::OffTopic { rule_id }) => Some(rule_id),
            _ => None,
        }
    }
}

/// Checks length, then leak rules, then off-topic rules; the first hit
/// decides. Length is counted in Unicode scalar values.
pub fn gate_prompt(prompt: &str, cfg: &GateConfig) -> GateDecision {
    let chars = prompt.chars().count();
    if chars > cfg.max_prompt_chars {
        return GateDecision::Reject(RejectReason::TooLong { chars, limit: cfg.max_prompt_chars });
    }
    if let Some(rule) = cfg.leak_rules.iter().find(|r| r.is_match(prompt)) {
        return GateDecision::Reject(RejectReason::LeakAttempt { rule_id: rule.id.clone() });
    }
    if let Some(rule) = cfg.off_topic_rules.iter().find(|r| r.is_match(prompt)) {
        return GateDecision::Reject(RejectReason::OffTopic { rule_id: rule.id.clone() });
    }
    GateDecision::Allow
}

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("clock went backwards for user '{user}': {now} < {last}")]
    ClockRegression { user: String, now: i64, last: i64 },
    #[error("rate limit must be positive")]
    ZeroLimit,
    #[error("window must be positive")]
    ZeroWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RateDecision {
    pub allowed: bool,
    /// Seconds until the next request can be allowed; 0 when allowed.
    pub retry_after: i64,
    pub remaining: usize,
}

/// Sliding-window limiter: at most `limit` allowed requests per user in any
/// window of `window_secs`.
///
/// A stored timestamp `t` stays in the window while `t > now - window`, so
/// a request exactly `window` seconds after the oldest one is admitted.
/// Timestamps are integer seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLimiter {
    limit: usize,
    window_secs: i64,
    users: BTreeMap<String, VecDeque<i64>>,
}

pub const DEFAULT_WINDOW_SECS: i64 = 3600;

impl RateLimiter {
    pub fn new(limit: usize, window_secs: i64) -> Result<Self, RateError> {
        if limit == 0 {
            return Err(RateError::ZeroLimit);
        }
        if window_secs <= 0 {
            return Err(RateError::ZeroWindow);
        }
        Ok(Self { limit, window_secs, users: BTreeMap::new() })
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn window_secs(&self) -> i64 {
        self.window_secs
    }

    pub fn check_rate(&mut self, user: &str, now: i64) -> Result<RateDecision, RateError> {
        let q = self.users.entry(user.to_string()).or_default();
        if let Some(&last) = q.back() {
            if now < last {
                return Err(RateError::ClockRegression { user: user.to_string(), now, last });
            }
        }
        while q.front().is_some_and(|&t| t <= now - self.window_secs) {
            q.pop_front();
        }
        if q.len() < self.limit {
            q.push_back(now);
            Ok(RateDecision { allowed: true, retry_after: 0, remaining: self.limit - q.len() })
        } else {
            let oldest = *q.front().expect("full window is non-empty");
            Ok(RateDecision { allowed: false, retry_after: oldest + self.window_secs - now, remaining: 0 })
        }
    }

    /// Timestamps currently held for a user.
    pub fn history(&self, user: &str) -> Vec<i64> {
        self.users.get(user).map(|q| q.iter().copied().collect()).unwrap_or_default()
    }

    pub fn to_snapshot(&self) -> String {
        serde_json::to_string_pretty(self).expect("limiter state serializes")
    }

    pub fn from_snapshot(json: &str) -> Result<Self, serde_json::Error> {
        let s: Self = serde_json::from_str(json)?;
        if s.limit == 0 || s.window_secs <= 0 {
            return Err(serde::de::Error::custom("snapshot has a non-positive limit or window"));
        }
        Ok(s)
    }
}

/// Thread-safe wrapper; each check is one atomic read-modify-write.
#[derive(Debug)]
pub struct SharedRateLimiter {
    inner: Mutex<RateLimiter>,
}

impl SharedRateLimiter {
    pub fn new(limiter: RateLimiter) -> Self {
        Self { inner: Mutex::new(limiter) }
    }

    pub fn check_rate(&self, user: &str, now: i64) -> Result<RateDecision, RateError> {
        self.inner.lock().expect("limiter mutex poisoned").check_rate(user, now)
    }

    pub fn into_inner(self) -> RateLimiter {
        self.inner.into_inner().expect("limiter mutex poisoned")
    }
}
