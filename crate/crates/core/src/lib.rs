//! Evaluation toolkit for LLM-generated surveys: format validation, corpus
//! filtering, survey metadata features, PSI drift tests, human-evaluation
//! summaries, acceptance prediction and pre-generation safeguards.

pub mod acceptance;
pub mod cli;
pub mod corpus;
pub mod drift;
pub mod features;
pub mod human_eval;
pub mod safeguards;
pub mod survey;
pub mod synth;
pub mod textstats;
