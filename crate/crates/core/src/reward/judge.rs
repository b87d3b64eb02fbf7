//! LLM-as-judge prompts and score parsing.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::RewardError;
use crate::template;

pub const NEOLOGISM_JUDGE_TEMPLATE: &str = "You are an expert in evaluating the quality of translations.
You will be given a source sentence, a reference translation, and a candidate translation.
The source sentence contains a neologism (a newly coined word or expression).
Your task is to determine how well the candidate translation captures the meaning of the source sentence, especially focusing on the neologism.
Please consider the following criteria when conducting your evaluation:
1. Neologism Quality (score: 0-50).
2. Overall Translation Quality (score: 0-50).
After evaluating the candidate translation based on the above criteria, please provide your assessment in the following format: <evaluation> score </evaluation>.
The final \"score\" is a numerical value between 0 and 100. A higher score indicates a better translation.
Here is the information you will need for your evaluation:
Source Sentence: {source_sentence}
Neologism and Its Meaning: {neologism} ({neologism_meaning})
Reference Translation: {reference_translation}
Candidate Translation: {candidate_translation}";

pub const GEMBA_TEMPLATE: &str = "Score the following translation from {source_lang} to {target_lang} with respect to human reference on a continuous scale 0 to 100 where score of zero means \"no meaning preserved\" and score of one hundred means \"perfect meaning and grammar\".

{source_lang} source: \"{source_seg}\"
{target_lang} human reference: {reference_seg}
{target_lang} machine translation: \"{target_seg}\"
Score:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeKind {
    Gemba,
    NeologismAware,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeFields {
    pub source_lang: String,
    pub target_lang: String,
    pub source: String,
    pub reference: String,
    pub candidate: String,
    pub neologism: String,
    pub neologism_meaning: String,
}

impl JudgeKind {
    pub fn template(self) -> &'static str {
        match self {
            JudgeKind::Gemba => GEMBA_TEMPLATE,
            JudgeKind::NeologismAware => NEOLOGISM_JUDGE_TEMPLATE,
        }
    }
}

pub fn render_judge_prompt(kind: JudgeKind, f: &JudgeFields) -> Result<String, RewardError> {
    let required: &[(&'static str, &str)] = match kind {
        JudgeKind::Gemba => &[
            ("source_lang", &f.source_lang),
            ("target_lang", &f.target_lang),
            ("source_seg", &f.source),
            ("reference_seg", &f.reference),
            ("target_seg", &f.candidate),
        ],
        JudgeKind::NeologismAware => &[
            ("source_sentence", &f.source),
            ("neologism", &f.neologism),
            ("neologism_meaning", &f.neologism_meaning),
            ("reference_translation", &f.reference),
            ("candidate_translation", &f.candidate),
        ],
    };
    if let Some((name, _)) = required.iter().find(|(_, v)| v.trim().is_empty()) {
        return Err(RewardError::MissingJudgeField(name));
    }
    let vals: HashMap<&str, &str> = required.iter().copied().collect();
    Ok(template::fill(kind.template(), &vals)?)
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?").expect("static regex"))
}

fn evaluation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?s)<evaluation>\s*(\d+(?:\.\d+)?)\s*</evaluation>").expect("static regex")
    })
}

/// GEMBA: the first number in 0..=100. Neologism-aware: the number inside
/// the first `<evaluation>` tags, which must be in 0..=100.
pub fn parse_judge_score(kind: JudgeKind, output: &str) -> Result<f64, RewardError> {
    let in_range = |x: &f64| (0.0..=100.0).contains(x);
    let found = match kind {
        JudgeKind::Gemba => number_re()
            .find_iter(output)
            .filter_map(|m| m.as_str().parse::<f64>().ok())
            .find(in_range),
        JudgeKind::NeologismAware => evaluation_re()
            .captures(output)
            .and_then(|c| c[1].parse::<f64>().ok())
            .filter(in_range),
    };
    found.ok_or_else(|| RewardError::UnparsableScore(output.chars().take(80).collect()))
}
