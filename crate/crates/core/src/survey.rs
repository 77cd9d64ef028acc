//! Survey document model and the constrained JSON format generated surveys
//! must follow.
//!
//! Wire schema:
//!
//! ```text
//! { "title": string, "language"?: string,
//!   "questions": [ { "text": string, "type": string, "options"?: [string] } ] }
//! ```
//!
//! Type strings outside the six supported tags parse into
//! [`QuestionType::Other`] so unsupported types can be counted instead of
//! rejected.

use std::collections::HashSet;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

/// Question type tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuestionType {
    OpenEnded,
    SingleChoice,
    MultipleSelection,
    /// Five-point visual scale, 1 to 5.
    StarRating,
    /// Net Promoter Score, 0 to 10.
    Nps,
    ContactInfo,
    /// Any type the platform does not support. The label is the raw tag.
    Other(String),
}

impl QuestionType {
    pub const SUPPORTED_TAGS: [&'static str; 6] = [
        "open_ended",
        "single_choice",
        "multiple_selection",
        "star_rating",
        "nps",
        "contact_info",
    ];

    /// Maps a wire tag to a type. Returns `None` only for the empty string,
    /// since `other` needs a non-empty label.
    pub fn from_tag(tag: &str) -> Option<Self> {
        let qt = match tag {
            "open_ended" => Self::OpenEnded,
            "single_choice" => Self::SingleChoice,
            "multiple_selection" => Self::MultipleSelection,
            "star_rating" => Self::StarRating,
            "nps" => Self::Nps,
            "contact_info" => Self::ContactInfo,
            "" => return None,
            other => Self::Other(other.to_string()),
        };
        Some(qt)
    }

    pub fn tag(&self) -> &str {
        match self {
            Self::OpenEnded => "open_ended",
            Self::SingleChoice => "single_choice",
            Self::MultipleSelection => "multiple_selection",
            Self::StarRating => "star_rating",
            Self::Nps => "nps",
            Self::ContactInfo => "contact_info",
            Self::Other(label) => label,
        }
    }

    /// Closed-ended membership: single choice, multiple selection, star
    /// rating and NPS. Open-ended, contact info and unsupported types are
    /// not closed-ended.
    pub fn is_closed_ended(&self) -> bool {
        matches!(
            self,
            Self::SingleChoice | Self::MultipleSelection | Self::StarRating | Self::Nps
        )
    }

    /// Types whose answer scale is implied and which must carry no options.
    pub fn forbids_options(&self) -> bool {
        matches!(
            self,
            Self::OpenEnded | Self::Nps | Self::StarRating | Self::ContactInfo
        )
    }

    /// Types that need at least two distinct answer options.
    pub fn requires_options(&self) -> bool {
        matches!(self, Self::SingleChoice | Self::MultipleSelection)
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, Self::Other(_))
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerOption(String);

impl AnswerOption {
    /// Returns `None` when the text is blank.
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            None
        } else {
            Some(Self(text))
        }
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub text: String,
    pub qtype: QuestionType,
    pub options: Vec<AnswerOption>,
}

impl Question {
    pub fn new(text: impl Into<String>, qtype: QuestionType) -> Self {
        Self {
            text: text.into(),
            qtype,
            options: Vec::new(),
        }
    }

    /// Builder-style helper; blank option texts are skipped.
    pub fn with_options<I, S>(mut self, options: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.options
            .extend(options.into_iter().filter_map(AnswerOption::new));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Survey {
    pub title: String,
    pub language: Option<String>,
    pub questions: Vec<Question>,
}

impl Survey {
    /// Checks every type invariant and returns the issues found. Used to
    /// validate surveys built in code (the parser runs the same checks).
    pub fn validate(&self) -> Vec<ParseIssue> {
        let value = serde_json::to_value(self).expect("survey serializes to a JSON value");
        match survey_from_value(&value, "") {
            Ok(_) => Vec::new(),
            Err(issues) => issues,
        }
    }

    pub fn type_counts(&self) -> TypeCounts {
        question_type_counts(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    MalformedJson,
    MissingField,
    BadType,
    ConstraintViolation,
}

/// One problem found while parsing; `path` is a JSON pointer to the node.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ParseIssue {
    pub path: String,
    pub kind: IssueKind,
    pub detail: String,
}

impl ParseIssue {
    pub fn new(path: impl Into<String>, kind: IssueKind, detail: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            kind,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "/" } else { &self.path };
        write!(f, "{path}: {:?}: {}", self.kind, self.detail)
    }
}

/// Parses raw bytes into a validated survey.
pub fn parse_survey(raw: &[u8]) -> Result<Survey, Vec<ParseIssue>> {
    let value: Value = serde_json::from_slice(raw).map_err(|e| {
        vec![ParseIssue::new(
            "",
            IssueKind::MalformedJson,
            e.to_string(),
        )]
    })?;
    survey_from_value(&value, "")
}

/// Canonical serialization: compact, UTF-8, keys in the order
/// title, language, questions and text, type, options. `language` and
/// empty `options` are omitted.
pub fn serialize_survey(survey: &Survey) -> Vec<u8> {
    serde_json::to_vec(survey).expect("survey serialization is infallible")
}

/// Validates a survey held in an already-parsed JSON value. `base` is
/// prefixed to every issue path, so surveys nested in larger documents
/// report their full location.
pub fn survey_from_value(value: &Value, base: &str) -> Result<Survey, Vec<ParseIssue>> {
    let mut issues = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(vec![ParseIssue::new(
            base,
            IssueKind::BadType,
            "survey must be a JSON object",
        )]);
    };

    let title = required_string(obj, base, "title", &mut issues);
    if let Some(t) = &title {
        if t.trim().is_empty() {
            issues.push(ParseIssue::new(
                format!("{base}/title"),
                IssueKind::ConstraintViolation,
                "title must not be blank",
            ));
        }
    }

    let language = match obj.get("language") {
        None | Some(Value::Null) => None,
        Some(Value::String(tag)) => {
            if !is_language_tag(tag) {
                issues.push(ParseIssue::new(
                    format!("{base}/language"),
                    IssueKind::ConstraintViolation,
                    format!("'{tag}' is not a language tag"),
                ));
            }
            Some(tag.clone())
        }
        Some(_) => {
            issues.push(ParseIssue::new(
                format!("{base}/language"),
                IssueKind::BadType,
                "language must be a string",
            ));
            None
        }
    };

    let mut questions = Vec::new();
    match obj.get("questions") {
        None => issues.push(ParseIssue::new(
            format!("{base}/questions"),
            IssueKind::MissingField,
            "missing required field 'questions'",
        )),
        Some(Value::Array(items)) => {
            if items.is_empty() {
                issues.push(ParseIssue::new(
                    format!("{base}/questions"),
                    IssueKind::ConstraintViolation,
                    "a survey needs at least one question",
                ));
            }
            for (i, item) in items.iter().enumerate() {
                let path = format!("{base}/questions/{i}");
                if let Some(q) = question_from_value(item, &path, &mut issues) {
                    questions.push(q);
                }
            }
        }
        Some(_) => issues.push(ParseIssue::new(
            format!("{base}/questions"),
            IssueKind::BadType,
            "questions must be an array",
        )),
    }

    if issues.is_empty() {
        Ok(Survey {
            title: title.unwrap_or_default(),
            language,
            questions,
        })
    } else {
        Err(issues)
    }
}

fn question_from_value(value: &Value, path: &str, issues: &mut Vec<ParseIssue>) -> Option<Question> {
    let Some(obj) = value.as_object() else {
        issues.push(ParseIssue::new(
            path,
            IssueKind::BadType,
            "question must be a JSON object",
        ));
        return None;
    };
    let before = issues.len();

    let text = required_string(obj, path, "text", issues);
    if let Some(t) = &text {
        if t.trim().is_empty() {
            issues.push(ParseIssue::new(
                format!("{path}/text"),
                IssueKind::ConstraintViolation,
                "question text must not be blank",
            ));
        }
    }

    let qtype = required_string(obj, path, "type", issues).and_then(|tag| {
        let qt = QuestionType::from_tag(&tag);
        if qt.is_none() {
            issues.push(ParseIssue::new(
                format!("{path}/type"),
                IssueKind::ConstraintViolation,
                "question type must not be empty",
            ));
        }
        qt
    });

    let mut options = Vec::new();
    match obj.get("options") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for (j, item) in items.iter().enumerate() {
                match item {
                    Value::String(s) => match AnswerOption::new(s.clone()) {
                        Some(o) => options.push(o),
                        None => issues.push(ParseIssue::new(
                            format!("{path}/options/{j}"),
                            IssueKind::ConstraintViolation,
                            "answer option must not be blank",
                        )),
                    },
                    _ => issues.push(ParseIssue::new(
                        format!("{path}/options/{j}"),
                        IssueKind::BadType,
                        "answer option must be a string",
                    )),
                }
            }
        }
        Some(_) => issues.push(ParseIssue::new(
            format!("{path}/options"),
            IssueKind::BadType,
            "options must be an array of strings",
        )),
    }

    if let Some(qt) = &qtype {
        let opt_path = format!("{path}/options");
        if qt.forbids_options() && !options.is_empty() {
            issues.push(ParseIssue::new(
                opt_path,
                IssueKind::ConstraintViolation,
                format!("{qt} questions take no answer options, found {}", options.len()),
            ));
        } else if qt.requires_options() {
            if options.len() < 2 {
                issues.push(ParseIssue::new(
                    opt_path.clone(),
                    IssueKind::ConstraintViolation,
                    format!("{qt} questions need at least 2 options, found {}", options.len()),
                ));
            }
            let mut seen = HashSet::new();
            for (j, o) in options.iter().enumerate() {
                if !seen.insert(o.text().trim()) {
                    issues.push(ParseIssue::new(
                        format!("{opt_path}/{j}"),
                        IssueKind::ConstraintViolation,
                        format!("duplicate answer option '{}'", o.text()),
                    ));
                }
            }
        }
    }

    if issues.len() > before {
        return None;
    }
    Some(Question {
        text: text?,
        qtype: qtype?,
        options,
    })
}

fn required_string(
    obj: &Map<String, Value>,
    base: &str,
    key: &str,
    issues: &mut Vec<ParseIssue>,
) -> Option<String> {
    match obj.get(key) {
        None => {
            issues.push(ParseIssue::new(
                format!("{base}/{key}"),
                IssueKind::MissingField,
                format!("missing required field '{key}'"),
            ));
            None
        }
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            issues.push(ParseIssue::new(
                format!("{base}/{key}"),
                IssueKind::BadType,
                format!("'{key}' must be a string"),
            ));
            None
        }
    }
}

/// Loose BCP-47 shape check: a 2-8 letter primary subtag followed by
/// 1-8 character alphanumeric subtags.
pub fn is_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let Some(primary) = parts.next() else {
        return false;
    };
    (2..=8).contains(&primary.len())
        && primary.chars().all(|c| c.is_ascii_alphabetic())
        && parts.all(|p| (1..=8).contains(&p.len()) && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

impl Serialize for Question {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = if self.options.is_empty() { 2 } else { 3 };
        let mut st = serializer.serialize_struct("Question", n)?;
        st.serialize_field("text", &self.text)?;
        st.serialize_field("type", self.qtype.tag())?;
        if !self.options.is_empty() {
            let opts: Vec<&str> = self.options.iter().map(AnswerOption::text).collect();
            st.serialize_field("options", &opts)?;
        }
        st.end()
    }
}

impl Serialize for Survey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = if self.language.is_some() { 3 } else { 2 };
        let mut st = serializer.serialize_struct("Survey", n)?;
        st.serialize_field("title", &self.title)?;
        if let Some(lang) = &self.language {
            st.serialize_field("language", lang)?;
        }
        st.serialize_field("questions", &self.questions)?;
        st.end()
    }
}

/// Per-type question counts. The seven buckets partition the questions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeCounts {
    pub open_ended: usize,
    pub single_choice: usize,
    pub multiple_selection: usize,
    pub star_rating: usize,
    pub nps: usize,
    pub contact_info: usize,
    pub unsupported: usize,
}

impl TypeCounts {
    pub fn total(&self) -> usize {
        self.open_ended
            + self.single_choice
            + self.multiple_selection
            + self.star_rating
            + self.nps
            + self.contact_info
            + self.unsupported
    }

    pub fn closed_ended(&self) -> usize {
        self.single_choice + self.multiple_selection + self.star_rating + self.nps
    }

    fn add(&mut self, qt: &QuestionType) {
        match qt {
            QuestionType::OpenEnded => self.open_ended += 1,
            QuestionType::SingleChoice => self.single_choice += 1,
            QuestionType::MultipleSelection => self.multiple_selection += 1,
            QuestionType::StarRating => self.star_rating += 1,
            QuestionType::Nps => self.nps += 1,
            QuestionType::ContactInfo => self.contact_info += 1,
            QuestionType::Other(_) => self.unsupported += 1,
        }
    }
}

pub fn question_type_counts(survey: &Survey) -> TypeCounts {
    let mut counts = TypeCounts::default();
    for q in &survey.questions {
        counts.add(&q.qtype);
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(second_options: &str) -> String {
        format!(
            r#"{{"title":"Shop feedback","questions":[
                {{"text":"Describe your visit","type":"open_ended"}},
                {{"text":"How did you find us?","type":"single_choice","options":{second_options}}}
            ]}}"#
        )
    }

    #[test]
    fn parses_minimal_document() {
        let s = parse_survey(doc(r#"["Search","Friend","Ad"]"#).as_bytes()).unwrap();
        assert_eq!(s.questions.len(), 2);
        assert_eq!(s.questions[0].qtype, QuestionType::OpenEnded);
        assert!(s.questions[0].options.is_empty());
        assert_eq!(s.questions[1].options.len(), 3);
        assert_eq!(s.language, None);
    }

    #[test]
    fn single_option_choice_is_rejected() {
        let issues = parse_survey(doc(r#"["Search"]"#).as_bytes()).unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::ConstraintViolation);
        assert_eq!(issues[0].path, "/questions/1/options");
    }

    #[test]
    fn duplicate_options_are_rejected() {
        let issues = parse_survey(doc(r#"["Ad","Ad "]"#).as_bytes()).unwrap_err();
        assert_eq!(issues[0].path, "/questions/1/options/1");
    }

    #[test]
    fn truncated_json_is_malformed() {
        let issues = parse_survey(br#"{"title":"#).unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::MalformedJson);
    }

    #[test]
    fn non_utf8_is_malformed() {
        let issues = parse_survey(&[0xff, 0xfe, b'{']).unwrap_err();
        assert_eq!(issues[0].kind, IssueKind::MalformedJson);
    }

    #[test]
    fn missing_and_mistyped_fields() {
        let issues = parse_survey(br#"{"questions":[{"text":3,"type":"nps","options":["a"]}]}"#)
            .unwrap_err();
        let got: Vec<(&str, IssueKind)> = issues.iter().map(|i| (i.path.as_str(), i.kind)).collect();
        assert_eq!(
            got,
            vec![
                ("/title", IssueKind::MissingField),
                ("/questions/0/text", IssueKind::BadType),
                ("/questions/0/options", IssueKind::ConstraintViolation),
            ]
        );
    }

    #[test]
    fn empty_questions_and_blank_title() {
        let issues = parse_survey(br#"{"title":"  ","questions":[]}"#).unwrap_err();
        assert_eq!(issues.len(), 2);
        assert!(issues.iter().all(|i| i.kind == IssueKind::ConstraintViolation));
    }

    #[test]
    fn root_must_be_object() {
        let issues = parse_survey(b"[1,2]").unwrap_err();
        assert_eq!(issues[0].kind, IssueKind::BadType);
        assert_eq!(issues[0].path, "");
    }

    #[test]
    fn unknown_type_becomes_other() {
        let s = parse_survey(
            br#"{"title":"t","questions":[{"text":"Grid","type":"matrix","options":["a"]}]}"#,
        )
        .unwrap();
        assert_eq!(s.questions[0].qtype, QuestionType::Other("matrix".into()));
        assert!(!s.questions[0].qtype.is_closed_ended());
        let bytes = serialize_survey(&s);
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            r#"{"title":"t","questions":[{"text":"Grid","type":"matrix","options":["a"]}]}"#
        );
        assert_eq!(parse_survey(&bytes).unwrap(), s);
    }

    #[test]
    fn empty_type_string_is_a_violation() {
        let issues =
            parse_survey(br#"{"title":"t","questions":[{"text":"x","type":""}]}"#).unwrap_err();
        assert_eq!(issues[0].path, "/questions/0/type");
    }

    #[test]
    fn serialization_is_canonical_and_deterministic() {
        let s = Survey {
            title: "Café".into(),
            language: Some("fr".into()),
            questions: vec![Question::new("Votre avis ?", QuestionType::StarRating)],
        };
        let a = serialize_survey(&s);
        let b = serialize_survey(&s);
        assert_eq!(a, b);
        assert_eq!(
            std::str::from_utf8(&a).unwrap(),
            r#"{"title":"Café","language":"fr","questions":[{"text":"Votre avis ?","type":"star_rating"}]}"#
        );
        assert_eq!(parse_survey(&a).unwrap(), s);
    }

    #[test]
    fn key_order_in_input_does_not_matter() {
        let a = parse_survey(
            br#"{"questions":[{"options":["y","n"],"type":"single_choice","text":"Ok?"}],"title":"T"}"#,
        )
        .unwrap();
        assert_eq!(
            serialize_survey(&a),
            br#"{"title":"T","questions":[{"text":"Ok?","type":"single_choice","options":["y","n"]}]}"#
        );
    }

    #[test]
    fn language_tags() {
        assert!(is_language_tag("en"));
        assert!(is_language_tag("en-US"));
        assert!(is_language_tag("zh-Hant-TW"));
        assert!(!is_language_tag("e"));
        assert!(!is_language_tag("en_US"));
        assert!(!is_language_tag(""));
    }

    #[test]
    fn counts_and_closed_ended() {
        let q = |t: QuestionType| Question::new("q", t);
        let three_open = Survey {
            title: "t".into(),
            language: None,
            questions: vec![q(QuestionType::OpenEnded); 3],
        };
        let c = question_type_counts(&three_open);
        assert_eq!(c.open_ended, 3);
        assert_eq!(c.closed_ended(), 0);

        let mixed = Survey {
            title: "t".into(),
            language: None,
            questions: vec![
                q(QuestionType::SingleChoice),
                q(QuestionType::SingleChoice),
                q(QuestionType::Nps),
            ],
        };
        assert_eq!(question_type_counts(&mixed).closed_ended(), 3);
    }

    #[test]
    fn validate_reports_code_built_violations() {
        let s = Survey {
            title: "t".into(),
            language: None,
            questions: vec![Question::new("Pick", QuestionType::MultipleSelection).with_options(["a"])],
        };
        let issues = s.validate();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "/questions/0/options");
    }
}
