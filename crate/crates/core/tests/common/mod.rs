#![allow(dead_code)]

use chrono::{DateTime, Utc};
use proptest::prelude::*;
use surveval::corpus::CorpusRecord;
use surveval::survey::{Question, QuestionType, Survey};

pub fn text() -> impl Strategy<Value = String> {
    // printable text including punctuation, quotes, unicode and escapes
    "[A-Za-z0-9 ,.?!'\"é\\\\/]{0,12}[A-Za-z?][A-Za-z0-9 ,.?!é]{0,30}"
}

pub fn qtype() -> impl Strategy<Value = QuestionType> {
    prop_oneof![
        Just(QuestionType::OpenEnded),
        Just(QuestionType::SingleChoice),
        Just(QuestionType::MultipleSelection),
        Just(QuestionType::StarRating),
        Just(QuestionType::Nps),
        Just(QuestionType::ContactInfo),
        "[a-z]{3,8}(_[a-z]{2,5})?"
            .prop_filter("supported tag", |t| !QuestionType::SUPPORTED_TAGS.contains(&t.as_str()))
            .prop_map(QuestionType::Other),
    ]
}

pub fn question() -> impl Strategy<Value = Question> {
    (text(), qtype(), prop::collection::btree_set("[A-Za-z][a-z ]{0,12}[a-z]", 2..6)).prop_map(|(t, qt, opts)| {
        let mut q = Question::new(t, qt);
        // unsupported types keep whatever options they were given
        if q.qtype.requires_options() || q.qtype.is_unsupported() {
            q = q.with_options(opts);
        }
        q
    })
}

pub fn survey() -> impl Strategy<Value = Survey> {
    (
        text(),
        prop::option::of(prop_oneof![Just("en".to_string()), Just("en-US".to_string()), Just("fr".to_string())]),
        prop::collection::vec(question(), 1..10),
    )
        .prop_map(|(title, language, questions)| Survey { title, language, questions })
}

pub fn record(i: usize, prompt: &str, survey: Survey) -> CorpusRecord {
    CorpusRecord {
        id: format!("r{i}"),
        variant: "v1".into(),
        user_prompt: prompt.into(),
        pii_flagged: false,
        language: "en".into(),
        created_at: DateTime::<Utc>::from_timestamp(1_700_000_000 + i as i64, 0).unwrap(),
        survey,
    }
}

pub fn open_survey(n: usize, words: usize) -> Survey {
    let text = vec!["word"; words].join(" ");
    Survey {
        title: "t".into(),
        language: Some("en".into()),
        questions: (0..n).map(|_| Question::new(text.clone(), QuestionType::OpenEnded)).collect(),
    }
}

fn prompt_of(len: usize, fill: char) -> String {
    let mut p = String::from("Survey ");
    while p.len() < len {
        p.push(fill);
    }
    p.truncate(len);
    p
}

/// Seven records: one clean, then one violator per filter rule in the order
/// duplicate, PII, language, prompt too short, prompt too long, too few
/// questions.
pub fn crafted_filter_corpus() -> Vec<CorpusRecord> {
    let clean = prompt_of(300, 'a');
    let mut recs = vec![
        record(0, &clean, open_survey(8, 4)),
        // same prompt after case and whitespace normalization
        record(1, &format!("  {}  ", clean.to_uppercase()), open_survey(8, 4)),
        record(2, &prompt_of(300, 'b'), open_survey(8, 4)),
        record(3, &prompt_of(300, 'c'), open_survey(8, 4)),
        record(4, &prompt_of(199, 'd'), open_survey(8, 4)),
        record(5, &prompt_of(501, 'e'), open_survey(8, 4)),
        record(6, &prompt_of(300, 'f'), open_survey(4, 4)),
    ];
    recs[2].pii_flagged = true;
    recs[3].language = "fr".into();
    recs
}

/// Records sitting exactly on the inclusive bounds; all must be kept.
pub fn boundary_corpus() -> Vec<CorpusRecord> {
    vec![
        record(10, &prompt_of(200, 'g'), open_survey(5, 4)),
        record(11, &prompt_of(500, 'h'), open_survey(12, 4)),
        record(12, &prompt_of(200, 'i'), open_survey(12, 4)),
        record(13, &prompt_of(500, 'j'), open_survey(5, 4)),
    ]
}
